"""Noisy quantum-device simulator and QCVV protocol stack."""

__version__ = "0.1.0"
