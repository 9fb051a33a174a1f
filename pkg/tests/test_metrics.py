import numpy as np
import pytest

from qcvv import channels as ch
from qcvv import metrics as mt
from qcvv.linalg import haar_random_state, ket, projector, rng


def random_mixed(gen, d, weights=(0.6, 0.3, 0.1)):
    return sum(w * projector(haar_random_state(d, gen)) for w in weights)


def test_probdist_validation():
    with pytest.raises(ValueError):
        mt.ProbDist(["a", "b"], [0.7, 0.2])
    with pytest.raises(ValueError):
        mt.ProbDist(["a"], [np.nan])


def test_tvd_and_fidelity_worked_pair():
    assert mt.tvd([1, 0], [0.98, 0.02]) == pytest.approx(0.02)
    assert mt.hellinger_fidelity([1, 0], [0.98, 0.02]) == pytest.approx(0.98)
    p = [0.4, 0.6]
    assert mt.tvd(p, p) == 0.0
    assert mt.hellinger_fidelity(p, p) == pytest.approx(1.0)


def test_classical_fuchs_van_de_graaf():
    gen = rng(3)
    for _ in range(100):
        p = gen.dirichlet(np.ones(6))
        q = gen.dirichlet(np.ones(6))
        f = mt.hellinger_fidelity(p, q)
        d = mt.tvd(p, q)
        assert 1 - np.sqrt(f) <= d + 1e-12
        assert d <= np.sqrt(1 - f) + 1e-12


def test_cross_entropies():
    p = [0.5, 0.5]
    q = [0.9, 0.1]
    assert mt.cross_entropy(p, q) == pytest.approx(-(0.5 * np.log(0.9) + 0.5 * np.log(0.1)))
    with pytest.raises(ValueError):
        mt.cross_entropy([0.5, 0.5], [1.0, 0.0])
    assert mt.linear_xe([0.25] * 4, [0.25] * 4) == pytest.approx(0.0)
    # uniform q against any p gives 0
    assert mt.linear_xe([0.7, 0.1, 0.1, 0.1], [0.25] * 4) == pytest.approx(0.0)


def test_heavy_outputs_tie_handling_pinned():
    # uniform distribution: ties fill in label order up to d/2
    dist = mt.ProbDist(["00", "01", "10", "11"], [0.25] * 4)
    assert mt.heavy_outcomes(dist) == {"00", "01"}
    dist2 = mt.ProbDist(["00", "01", "10", "11"], [0.1, 0.2, 0.3, 0.4])
    assert mt.heavy_outcomes(dist2) == {"10", "11"}
    assert mt.heavy_output_prob(dist2, ["11", "00", "10", "10"]) == pytest.approx(0.75)


def test_heavy_uniform_gets_half():
    gen = rng(5)
    dist = mt.ProbDist([format(i, "03b") for i in range(8)], [1 / 8] * 8)
    samples = [format(i, "03b") for i in gen.integers(8, size=20000)]
    assert mt.heavy_output_prob(dist, samples) == pytest.approx(0.5, abs=0.02)


def test_trace_distance_pure_overlap():
    eps = 1e-3
    v1 = ket("0")
    v2 = np.array([np.sqrt(1 - eps), np.sqrt(eps)])
    assert mt.trace_distance(projector(v1), projector(v2)) == pytest.approx(np.sqrt(eps), rel=1e-6)


def test_trace_distance_equals_infidelity_for_orthogonal_mixture():
    eps = 0.01
    rho = projector(ket("0"))
    mixed = (1 - eps) * rho + eps * projector(ket("1"))
    assert mt.trace_distance(rho, mixed) == pytest.approx(eps, rel=1e-9)
    assert 1 - mt.state_fidelity(rho, mixed) == pytest.approx(eps, rel=1e-6)


def test_single_qubit_trace_distance_is_half_bloch_distance():
    gen = rng(7)
    for _ in range(20):
        a = random_mixed(gen, 2)
        b = random_mixed(gen, 2)
        bloch = np.linalg.norm(mt.bloch_vector(a) - mt.bloch_vector(b))
        assert mt.trace_distance(a, b) == pytest.approx(bloch / 2, abs=1e-10)


def test_state_fidelity_props():
    gen = rng(9)
    rho = random_mixed(gen, 4)
    sig = random_mixed(gen, 4)
    assert mt.state_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    assert mt.state_fidelity(rho, sig) == pytest.approx(mt.state_fidelity(sig, rho), abs=1e-10)
    with pytest.raises(ValueError):
        mt.trace_distance(np.eye(2), np.eye(2))  # trace 2, not a state


def test_quantum_fuchs_van_de_graaf_200_pairs():
    gen = rng(11)
    for _ in range(200):
        rho = random_mixed(gen, 4)
        sig = random_mixed(gen, 4)
        eps = 1 - mt.state_fidelity(rho, sig)
        d = mt.trace_distance(rho, sig)
        assert 1 - np.sqrt(1 - eps) <= d + 1e-9
        assert d <= np.sqrt(eps) + 1e-9


def test_purity():
    assert mt.purity(projector(ket("0"))) == pytest.approx(1.0)
    assert mt.purity(np.eye(2) / 2) == pytest.approx(0.5)


def test_entanglement_fidelity_formulas_agree():
    gen = rng(13)
    for seed in range(10):
        g = ch.random_cptp(2, seed=seed)
        fe_trace = mt.entanglement_fidelity(g)
        fe_choi = g.to_chi()[0, 0].real
        assert fe_trace == pytest.approx(fe_choi, abs=1e-10)


def test_entanglement_fidelity_multiplicative():
    a, b = ch.depolarizing(0.05), ch.dephasing(0.08)
    assert mt.entanglement_fidelity(a.tensor(b)) == pytest.approx(
        mt.entanglement_fidelity(a) * mt.entanglement_fidelity(b), abs=1e-12
    )


def test_depolarizing_metric_values():
    p = 0.1
    dep = ch.depolarizing(p)
    f = mt.polarization(dep)
    assert f == pytest.approx(1 - p, abs=1e-12)
    assert mt.convert_metric(f, "f", "e_F", 2) == pytest.approx(3 * p / 4, abs=1e-12)
    assert mt.convert_metric(f, "f", "r", 2) == pytest.approx(p / 2, abs=1e-12)


def test_ef_r_relation():
    for d in (2, 4, 8):
        r = 0.01
        e_f = mt.convert_metric(r, "r", "e_F", d)
        assert e_f == pytest.approx((d + 1) / d * r, abs=1e-14)


def test_metric_conversion_bijection():
    for d in (2, 4, 8):
        for src in mt._METRICS:
            for dst in mt._METRICS:
                v = 0.1234
                back = mt.convert_metric(mt.convert_metric(v, src, dst, d), dst, src, d)
                assert back == pytest.approx(v, abs=1e-12)


def test_identity_metrics_all_one():
    ident = ch.identity_channel()
    assert mt.entanglement_fidelity(ident, ident) == pytest.approx(1.0)
    assert mt.avg_gate_fidelity(ident, ident) == pytest.approx(1.0)
    assert mt.polarization(ident, ident) == pytest.approx(1.0)


def test_non_unitary_target_rejected():
    with pytest.raises(ValueError):
        mt.entanglement_fidelity(ch.identity_channel(), ch.depolarizing(0.3))


def test_jamiolkowski_trace_distance():
    assert mt.jamiolkowski_trace_distance(ch.dephasing(0.1), ch.dephasing(0.1)) == pytest.approx(0.0, abs=1e-12)
    p = 0.02
    # oracle: chi difference is diag(-p/2, 0, 0, p/2), nuclear norm p
    assert mt.jamiolkowski_trace_distance(ch.dephasing(p), ch.identity_channel()) == pytest.approx(p / 2, abs=1e-12)


def test_diamond_bounds():
    lo, hi = mt.diamond_bounds(0.01, 2)
    assert lo == pytest.approx(0.01) and hi == pytest.approx(0.2)
    assert lo <= hi
    with pytest.raises(ValueError):
        mt.diamond_bounds(1.5, 2)


def test_unitarity():
    assert mt.unitarity(ch.coherent("z", 0.7)) == pytest.approx(1.0, abs=1e-12)
    p = 0.1
    # Frobenius oracle on the unital block (1 - p) I
    block = (1 - p) * np.eye(3)
    assert mt.unitarity(ch.depolarizing(p)) == pytest.approx(np.sum(block**2) / 3, abs=1e-12)
    assert mt.unitarity(ch.depolarizing(p)) == pytest.approx((1 - p) ** 2, abs=1e-12)


def test_unitarity_bounds_and_unitary_iff():
    for c in (ch.dephasing(0.1), ch.amplitude_damping(0.2), ch.random_cptp(2, seed=4)):
        assert mt.unitarity(c) <= 1 + 1e-9
    for c in (ch.coherent("x", 0.3), ch.identity_channel()):
        assert mt.unitarity(c) == pytest.approx(1.0, abs=1e-10)
    assert mt.unitarity(ch.dephasing(0.1)) < 1.0


def test_readout_fidelity():
    assert mt.readout_fidelity(np.eye(2)) == pytest.approx(1.0)
    r = np.array([[0.99, 0.05], [0.01, 0.95]])
    assert mt.readout_fidelity(r) == pytest.approx(0.97)
    with pytest.raises(ValueError):
        mt.readout_fidelity(np.array([[0.5, 0.5], [0.2, 0.5]]))
