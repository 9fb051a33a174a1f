"""The randomized-benchmarking family, closed loop against known noise.

Injects a gate-independent depolarizing channel, runs standard Clifford RB,
interleaved RB, unitarity (XRB) benchmarking, and the scalable native-gate
protocols (binary RB and mirror RB at 20 qubits via the Pauli fast path),
comparing every fitted rate against the analytically known truth.

Run: python3 demos/02_randomized_benchmarking.py
"""

import time

import numpy as np

from qcvv import channels as ch
from qcvv import device as dv
from qcvv import rb
from qcvv.linalg import rng

p = 2e-3
model = dv.noisy_model(1, lambda lbl, ar: ch.depolarizing(p))
design = rb.RBDesign((0,), (0, 4, 16, 64, 256), 30, 100, seed=11)

print("== standard Clifford RB, depolarizing p = 0.002 ==")
data, fit = rb.run_crb(model, design)
print("per-depth means:", np.round(data.means(), 4))
print(f"fitted f = {fit.f:.5f} +- {fit.f_err:.5f} (truth {1 - p})")
print(f"EPC (process infidelity) = {rb.epc(fit, 2):.2e}")

conf = model.with_confusion({0: [[0.95, 0.05], [0.05, 0.95]]})
_, fit_c = rb.run_crb(conf, design)
print(f"with 5% readout confusion: f = {fit_c.f:.5f}, A = {fit_c.a:.3f} (SPAM absorbed into A)")

print("\n== interleaved RB of a noisy S gate ==")
p_gate = 0.01
irb_model = dv.noisy_model(1, lambda lbl, ar: ch.depolarizing(p_gate) if lbl == "S" else ch.depolarizing(p))
res = rb.interleaved_rb(irb_model, rb.RBDesign((0,), (0, 4, 16, 48), 25, 200, seed=21), "S")
true_ef = 1 - ch.depolarizing(p_gate).to_chi()[0, 0].real
lo, hi = res["bounds_e_F"]
print(f"point estimate e_F = {res['e_F']:.4f} (truth {true_ef:.4f}); bounds [{lo:.4f}, {hi:.4f}]")

print("\n== XRB separates coherent from stochastic error ==")
out = rb.xrb(model, rb.RBDesign((0,), (0, 2, 6, 12), 20, 300, seed=31))
print(f"depolarizing: u = {out['u']:.4f} (truth {(1 - p) ** 2:.4f}), e_S = {out['e_S']:.2e}")
out_c = rb.xrb(dv.noisy_model(1, lambda l, a: ch.coherent("z", 0.1)), rb.RBDesign((0,), (0, 2, 6, 12), 20, 300, seed=32))
print(f"coherent Z(0.1): u = {out_c['u']:.4f} (unitary noise keeps u = 1)")

print("\n== scalable RB at n = 20 via the stochastic-Pauli fast path ==")
n = 20


def noise_rule(lbl, ar):
    if ar == 1:
        return ch.stochastic_pauli((4e-4, 3e-4, 5e-4))
    return ch.stochastic_pauli({"XI": 2e-3, "IZ": 1.5e-3, "YY": 1e-3})


big = dv.noisy_model(n, noise_rule)
sampler = rb.LayerSampler(n, twoq_density=0.5)
gen = rng(99)
oracle = float(np.mean([sampler.layer_polarization(big, *sampler.sample(gen)) for _ in range(200)]))
design20 = rb.RBDesign((0,), (0, 2, 4, 8, 16, 32), 30, 100, seed=5)
t0 = time.time()
birb = rb.birb(big, design20, sampler)
t1 = time.time()
mrb = rb.mrb(big, design20, sampler)
t2 = time.time()
print(f"layer-polarization oracle: {oracle:.5f}")
print(f"BiRB  f = {birb['f']:.5f} +- {birb['f_err']:.5f}  ({t1 - t0:.1f}s)")
print(f"MRB   f = {mrb['f']:.5f} +- {mrb['f_err']:.5f}  ({t2 - t1:.1f}s)")

print("\n== XEB with per-layer global depolarizing ==")
f_layer = 0.97
xmodel = dv.noisy_model(2, lambda l, a: ch.depolarizing(1 - f_layer, n=2) if a == 2 else None)
out_x = rb.xeb(xmodel, rb.RBDesign((0,), (10, 14, 20), 25, 2000, seed=41), rb.haar_su4_layer_sampler(2, seed=77), min_depth=10)
sp = rb.speckle_purity(out_x["bitstring_probs"], 2000, 4)
print(f"XEB fitted f = {out_x['f']:.4f} (truth {f_layer}); speckle-purity eps = {sp['eps']:.4f}")
