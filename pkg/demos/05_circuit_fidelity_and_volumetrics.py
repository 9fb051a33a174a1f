"""Whole-circuit fidelity estimation and holistic benchmarks.

Estimates a 3-qubit circuit's process fidelity with MCFE, brackets it with
accreditation traps, runs direct fidelity estimation on a GHZ state, then
sweeps a volumetric grid and the quantum-volume test.

Run: python3 demos/05_circuit_fidelity_and_volumetrics.py
"""

import numpy as np

from qcvv import channels as ch
from qcvv import device as dv
from qcvv import fidelity as fd
from qcvv import metrics as mt
from qcvv import rb
from qcvv import volumetrics as vm
from qcvv.linalg import rng


def noise_rule(lbl, ar):
    if ar == 1:
        return ch.stochastic_pauli((0.003, 0.002, 0.004))
    return ch.stochastic_pauli({"XZ": 0.01, "ZI": 0.008})


n = 3
model = dv.noisy_model(n, noise_rule)
sampler = rb.LayerSampler(n, twoq_density=0.6, twoq_gate="CZ")
g = rng(7)
target = []
for _ in range(3):
    oneq, twoq = sampler.sample(g)
    target.append(oneq)
    target.append(twoq)
target.append(tuple((rb.clifford_label(1, int(g.integers(24))), (q,)) for q in range(n)))

print("== mirror circuit fidelity estimation ==")
f_oracle = fd.circuit_polarization_oracle(model, target)
res = fd.mcfe(model, target, k_ensemble=40, shots=300, seed=11)
print(f"f(C) = {res.f:.4f} +- {res.stderr:.4f} (dense oracle {f_oracle:.4f}); F_e = {res.f_e:.4f}")

print("\n== accreditation ==")
acc = fd.accredit(model, target, theta=0.1, alpha=0.95, seed=13)
fe_true = mt.convert_metric(f_oracle, "f", "F_e", 2**n)
print(
    f"N_c = {acc.n_traps} traps, {acc.n_unsuccessful} unsuccessful ->"
    f" F_e in [{acc.f_lower:.3f}, {acc.f_upper:.3f}] (truth {fe_true:.3f}, theta = {acc.theta})"
)

print("\n== direct fidelity estimation of a noisy GHZ state ==")
dep_model = dv.noisy_model(n, lambda l, a: ch.depolarizing(0.004) if a == 1 else ch.depolarizing(0.015, n=2))
dres = fd.dfe(dep_model, fd.ghz_circuit(n), fd.ghz_stabilizers(n), epsilon=0.05, delta=0.1, seed=5)
print(f"estimate {dres.estimate:.4f} +- {dres.stderr:.4f} from {dres.sampled_bases} bases, {dres.total_shots} shots")

print("\n== quantum volume ==")
qv, results = vm.quantum_volume(dv.ideal_model, 4, k_circuits=80, shots=300, seed=3)
for r in results:
    print(f"width {r.width}: hbar = {r.hbar:.3f}, lower bound {r.lower_bound:.3f}, pass = {r.passed}")
print("noiseless quantum volume:", qv)

print("\n== volumetric benchmark with capability regions ==")


def builder(w):
    return dv.noisy_model(w, noise_rule)


grid = vm.volumetric_run(builder, "randomized-mirror", (2, 3, 4), (2, 8, 16), 8, 200, seed=12)
region = vm.capability_region(grid)
print("W  D   min    mean   max    class")
for row in vm.grid_to_rows(grid):
    print(
        f"{row['width']}  {row['depth']:<3d} {row['min']:.3f}  {row['mean']:.3f}  {row['max']:.3f}  {row['class']}"
    )
