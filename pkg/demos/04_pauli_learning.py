"""Cycle benchmarking, cycle error reconstruction, ACES, and learnability.

Measures per-Pauli decays of an identity cycle and a CZ cycle, reconstructs
marginal error rates by Walsh-Hadamard inversion (recovering an injected
local Z error), solves a crosstalk-free 3-qubit gate set with ACES, and
prints the CNOT pattern-transform learnability verdicts.

Run: python3 demos/04_pauli_learning.py
"""

import numpy as np

from qcvv import channels as ch
from qcvv import cycles as cy
from qcvv import device as dv
from qcvv.channels import Channel, pauli_channel_from_dist
from qcvv.cliffords import CliffordTableau, gate_tableau
from qcvv.linalg import pauli_label, rng
from qcvv.paulis import PauliString

print("== cycle benchmarking of an identity cycle with known Pauli noise ==")
probs = {"XI": 0.004, "IZ": 0.003, "YY": 0.002}
noise = ch.stochastic_pauli(probs)
cyc = Channel(noise.ptm)
cyc.unitary = np.eye(4, dtype=complex)
model = dv.GateSetModel(2, gates={"CYC": (cyc, 2)})
paulis = [pauli_label(i, 2) for i in range(1, 16)]
ds = cy.cycle_benchmark(model, (("CYC", (0, 1)),), paulis, (2, 6, 12), 8, 400, seed=3)
lam = np.diag(noise.ptm)
print("pauli   fitted f_P   injected")
for i in (1, 4, 10, 15):
    lab = pauli_label(i, 2)
    print(f"{lab}     {ds.decays[lab].f:.5f}      {lam[i]:.5f}")
print(f"cycle F_e estimate: {ds.process_fidelity():.5f} (truth {np.mean(lam[1:]):.5f})")

print("\n== CER: find an injected 1% local Z on qubit 4 of a 5-qubit cycle ==")
n5 = 5
noise5 = ch.stochastic_pauli({"IIIIZ": 0.01, "IXIII": 0.002})
c5 = Channel(noise5.ptm)
c5.unitary = np.eye(2**5, dtype=complex)
model5 = dv.GateSetModel(n5, gates={"CY5": (c5, 5)})
bodies = [(1,), (4,), (1, 4)]
need = set()
for b in bodies:
    for i in range(1, 4 ** len(b)):
        need.add(PauliString.from_index(i, len(b)).embed(n5, b).label)
ds5 = cy.cycle_benchmark(model5, (("CY5", tuple(range(5))),), sorted(need), (2, 4, 8), 6, 500, seed=17)
rates = cy.cer(ds5, n5, CliffordTableau.identity(n5), bodies)
print("body    pauli  rate      stderr")
for r in rates:
    if abs(r.rate) > 1e-3:
        print(f"{str(r.bodies):7s} {r.pauli:5s} {r.rate:.5f}  {r.stderr:.5f}")

print("\n== ACES on a 3-qubit line with crosstalk-free Pauli channels ==")
gen = rng(123)


def rand_channel(k, scale):
    raw = gen.random(4**k - 1) * scale
    return pauli_channel_from_dist(np.concatenate([[1 - raw.sum()], raw]))


noise_map = {
    ("CNOT", (0, 1)): rand_channel(2, 0.004),
    ("CNOT", (1, 2)): rand_channel(2, 0.004),
    ("X90", (0,)): rand_channel(1, 0.002),
    ("X90", (1,)): rand_channel(1, 0.002),
    ("X90", (2,)): rand_channel(1, 0.002),
}
gates = {}
for (lbl, qs), nz in noise_map.items():
    u = dv.GATE_UNITARIES[lbl]
    c = Channel(nz.ptm @ Channel.from_unitary(u).ptm)
    c.unitary = u
    gates[f"{lbl}@{','.join(map(str, qs))}"] = (c, len(qs))
aces_model = dv.GateSetModel(3, gates=gates)
layers = [
    (("CNOT@0,1", (0, 1)),),
    (("CNOT@1,2", (1, 2)),),
    (("X90@0", (0,)), ("X90@1", (1,)), ("X90@2", (2,))),
]
res = cy.aces(aces_model, layers, n_circuits=20, depth=3, paulis_per_circuit=6, shots=800, seed=5)
print(f"design rank {res.design_rank} of {len(res.parameters)} parameters")
from qcvv.linalg import pauli_index

worst = max(
    abs(res.eigenvalue(l, q, p) - np.diag(noise_map[(l.split('@')[0], q)].ptm)[pauli_index(p)])
    / max(res.stderr(l, q, p), 1e-5)
    for l, q, p in res.parameters
)
print(f"worst eigenvalue pull vs truth: {worst:.2f} sigma")

print("\n== learnability of CNOT Pauli fidelities (pattern-transform graph) ==")
rep = cy.learnability(gate_tableau("CNOT"))
for lab in ("ZI", "YY", "XI"):
    print(f"lambda_{lab}: {'learnable' if rep.learnable[lab] else 'NOT learnable'}")
print("product lambda_XI * lambda_XX learnable:", rep.product_learnable(["XI", "XX"]))
print("cycle-space dimension:", rep.cycle_space_dim, "| gauge dimension:", rep.graph.gauge_dim())
