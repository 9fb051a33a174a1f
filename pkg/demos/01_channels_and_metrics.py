"""Channels in five representations, and the fidelity zoo.

Builds the canonical error channels, converts them among Kraus, transfer,
PTM, chi, and Choi forms, checks the channel-state duality numerically,
projects a small error onto its H/S/C/A generator rates, and walks the
fidelity/polarization conversion table.

Run: python3 demos/01_channels_and_metrics.py
"""

import numpy as np

from qcvv import channels as ch
from qcvv import metrics as mt

np.set_printoptions(precision=4, suppress=True)

print("== dephasing p = 0.1 in all five representations ==")
deph = ch.dephasing(0.1)
print("PTM diagonal:       ", np.diag(deph.ptm))
print("transfer diagonal:  ", np.diag(deph.to_transfer()).real)
print("chi diagonal:       ", np.diag(deph.to_chi()).real)
print("Choi matrix:\n", deph.to_choi().real)
print("Kraus norms:        ", [round(float(np.trace(k.conj().T @ k).real), 4) for k in deph.to_kraus()])

print("\n== channel-state duality: chi == (1/d) <phi_i|Choi|phi_j> ==")
coh = ch.coherent("z", 0.3)
dev = np.abs(ch.choi_chi_overlap(coh.to_choi()) - coh.to_chi()).max()
print(f"elementwise deviation for a coherent Z(0.3): {dev:.2e}")

print("\n== error generators ==")
for name, chan, expect in [
    ("dephasing 0.1 -> s_Z", ch.dephasing(0.1), -0.5 * np.log(0.9)),
    ("coherent Z(0.02) -> h_Z", ch.coherent("z", 0.02), 0.01),
]:
    coeffs = ch.error_generator(chan)
    kind = "S" if "s_Z" in name else "H"
    print(f"{name}: {coeffs.rate(kind, 3):.6f} (expected {expect:.6f})")

print("\n== twirling ==")
cohx = ch.coherent("x", 0.4)
print("Pauli twirl of X(0.4) PTM diagonal:", np.diag(ch.twirl_exact(cohx, "pauli").ptm))
rand = ch.random_cptp(2, seed=7)
cliff = ch.twirl_exact(rand, "clifford-1q")
print("Clifford twirl diagonal:", np.diag(cliff.ptm))
print(
    "process fidelity before/after twirl:",
    round(mt.entanglement_fidelity(rand), 6),
    round(mt.entanglement_fidelity(cliff), 6),
)

print("\n== metric conversion table at d = 2 ==")
f = mt.polarization(ch.depolarizing(0.1))
row = {m: round(mt.convert_metric(f, "f", m, 2), 6) for m in ("F_avg", "r", "F_e", "e_F", "f")}
print("depolarizing 0.1:", row)
print("diamond-norm bounds from e_F = 0.01 at d = 2:", mt.diamond_bounds(0.01, 2))
print("unitarity of depolarizing 0.1:", round(mt.unitarity(ch.depolarizing(0.1)), 6), "(= (1-p)^2)")
