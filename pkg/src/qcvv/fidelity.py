"""Whole-circuit fidelity estimation: direct fidelity estimation, mirror
circuit fidelity estimation, and circuit output accreditation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import Channel
from .cliffords import INVERSE_LABEL, measurement_rotation_gate
from .device import (
    Circuit,
    GateSetModel,
    pauli_fastpath_sample,
    pauli_fastpath_signs,
    sample_counts,
)
from .linalg import pauli_matrices, rng
from .metrics import convert_metric
from .paulis import PauliString
from .rb import (
    _compose_1q_layers,
    _group_index,
    _identity_index,
    _invert_1q_layer,
    _randomized_compile,
    adjusted_success_probability,
    clifford_label,
)

DFE_DENSE_QUBIT_CAP = 10


# -- direct fidelity estimation ---------------------------------------------------

@dataclass
class DFEResult:
    estimate: float
    stderr: float
    epsilon: float
    delta: float
    sampled_bases: int
    total_shots: int


def characteristic_function(target, n: int) -> np.ndarray:
    """chi_psi(k) = Tr[psi P_k] / sqrt(d) over the Pauli index.

    ``target`` is a density matrix (dense route, capped loudly at 10
    qubits) or a list of signed stabilizer-generator labels such as
    ["+XX", "-ZY"] (exact route).
    """
    d = 2**n
    if isinstance(target, np.ndarray):
        if n > DFE_DENSE_QUBIT_CAP:
            raise ValueError(
                f"dense characteristic functions are capped at {DFE_DENSE_QUBIT_CAP} qubits; "
                "pass a stabilizer description instead"
            )
        paulis = pauli_matrices(n)
        return np.einsum("kij,ji->k", paulis, target).real / np.sqrt(d)
    chi = np.zeros(4**n)
    for sign, p in _stabilizer_group(target, n):
        chi[p.index] = sign / np.sqrt(d)
    return chi


def _stabilizer_group(generators, n):
    gens = []
    for g in generators:
        sign = 1
        if g[0] in "+-":
            sign = -1 if g[0] == "-" else 1
            g = g[1:]
        p = PauliString.from_label(g)
        if sign < 0:
            p = PauliString(p.n, p.xbits, p.zbits, p.phase + 2)
        gens.append(p)
    if len(gens) != n:
        raise ValueError("need n independent stabilizer generators")
    group = []
    for mask in range(2**n):
        acc = PauliString.identity(n)
        for i in range(n):
            if (mask >> i) & 1:
                acc = acc * gens[i]
        s = acc.sign
        if abs(s.imag) > 1e-12:
            raise ValueError("generators do not commute")
        group.append((1 if s.real > 0 else -1, acc.hermitian()))
    return group


def ghz_stabilizers(n: int):
    gens = ["X" * n]
    for i in range(n - 1):
        gens.append("".join("Z" if q in (i, i + 1) else "I" for q in range(n)))
    return gens


def ghz_circuit(n: int) -> Circuit:
    layers = [(("H", (0,)),)]
    for i in range(n - 1):
        layers.append((("CNOT", (i, i + 1)),))
    return Circuit(n, tuple(layers))


def dfe(
    model: GateSetModel,
    prep_circuit: Circuit,
    target,
    epsilon: float,
    delta: float,
    seed,
    backend: str = "dense",
) -> DFEResult:
    """Direct fidelity estimation of the state a circuit prepares.

    Samples ``l = ceil(1/(eps**2 delta))`` Pauli indices k with probability
    ``chi_psi(k)**2``, measures each with the per-k budget
    ``m_k = ceil(2 ln(2/delta) / (d chi_psi(k)**2 l eps**2))`` shots, and
    averages the estimators ``X = chi_rho(k) / chi_psi(k)``.  For stabilizer
    targets the chi weights are uniform, so the number of sampled bases is
    independent of n.
    """
    n = model.n
    d = 2**n
    chi = characteristic_function(target, n)
    probs = chi**2
    probs = probs / probs.sum()
    gen = rng(seed)
    l = int(np.ceil(1 / (epsilon**2 * delta)))
    ks, reps = np.unique(gen.choice(len(probs), size=l, p=probs), return_counts=True)
    values = []
    total_shots = 0
    for k, rep in zip(ks, reps):
        p = PauliString.from_index(int(k), n)
        m_k = int(np.ceil(2 * np.log(2 / delta) / (d * chi[k] ** 2 * l * epsilon**2)))
        m_k = max(m_k, 1) * int(rep)
        total_shots += m_k
        meas_layer = tuple(
            (measurement_rotation_gate(p.letter(q)), (q,))
            for q in range(n)
            if measurement_rotation_gate(p.letter(q)) != "I"
        )
        circ = prep_circuit.then(Circuit(n, (meas_layer,))) if meas_layer else prep_circuit
        measured = PauliString(n, 0, p.pattern, 0)
        sub = int(gen.integers(2**62))
        if backend == "fast":
            mean = float(pauli_fastpath_signs(model, circ, measured, m_k, sub).mean())
        else:
            rec = sample_counts(model, circ, m_k, sub)
            mean = 0.0
            for bstr, c in rec.counts.items():
                par = sum(int(bstr[q]) for q in range(n) if (measured.zbits >> q) & 1) % 2
                mean += c * (1 - 2 * par)
            mean /= m_k
        values.extend([(mean / np.sqrt(d)) / chi[k]] * int(rep))
    values = np.asarray(values)
    est = float(values.mean())
    stderr = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else epsilon
    return DFEResult(est, stderr, epsilon, delta, int(len(ks)), total_shots)


# -- mirror circuit fidelity estimation -------------------------------------------

@dataclass
class MCFEResult:
    f: float
    f_e: float
    gamma_m1: float
    gamma_m2: float
    gamma_m3: float
    stderr: float


def split_alternating(layers, n):
    """Split a circuit into the alternating form u t u t ... u, padding with
    identity 1q layers where needed.  Returns (oneq list, twoq list)."""
    ident = tuple((clifford_label(1, _identity_index()), (q,)) for q in range(n))
    oneq, twoq = [], []
    have_oneq = False
    for layer in layers:
        is_twoq = any(len(qs) == 2 for _, qs in layer)
        if is_twoq:
            if not have_oneq:
                oneq.append(ident)
            twoq.append(tuple(layer))
            have_oneq = False
        else:
            if have_oneq:
                oneq[-1] = _compose_1q_layers(oneq[-1], tuple(layer), n)
            else:
                oneq.append(tuple(layer))
                have_oneq = True
    if not have_oneq:
        oneq.append(ident)
    return oneq, twoq


def _stitch(oneq_layers, twoq_layers, n):
    layers = []
    for i, oq in enumerate(oneq_layers):
        if oq:
            layers.append(tuple(oq))
        if i < len(twoq_layers) and twoq_layers[i]:
            layers.append(tuple(twoq_layers[i]))
    return Circuit(n, tuple(layers))


def mcfe(
    model: GateSetModel,
    target_layers,
    k_ensemble: int,
    shots: int,
    seed,
    backend: str = "fast",
) -> MCFEResult:
    """Mirror circuit fidelity estimation of a Clifford circuit.

    Builds the three mirror ensembles: M1 embeds the bare target followed by
    a randomly compiled layer-by-layer inverse, M2 randomly compiles both
    halves, M3 is the SPAM-only reference.  Estimates
    ``f(C) = E gamma(M1) / sqrt(E gamma(M2) E gamma(M3))`` with gamma the
    Hamming-weighted polarization estimator, then converts to F_e.
    """
    n = model.n
    gen = rng(seed)
    oneq_t, twoq_t = split_alternating([tuple(l) for l in target_layers], n)
    k = len(twoq_t)
    gammas = {1: [], 2: [], 3: []}
    for which in (1, 2, 3):
        for _ in range(k_ensemble):
            l0 = tuple((clifford_label(1, int(gen.integers(24))), (q,)) for q in range(n))
            layers = [l0]
            if which != 3:
                fw_one, fw_two = list(oneq_t), list(twoq_t)
                if which == 2:
                    fw_one, fw_two = _randomized_compile(fw_one, fw_two, n, gen)
                rv_one = [_invert_1q_layer(u, n) for u in reversed(oneq_t)]
                rv_two = [
                    tuple((INVERSE_LABEL[lbl], qs) for lbl, qs in layer) for layer in reversed(twoq_t)
                ]
                rv_one, rv_two = _randomized_compile(rv_one, rv_two, n, gen)
                for half_one, half_two in ((fw_one, fw_two), (rv_one, rv_two)):
                    for i, oq in enumerate(half_one):
                        layers.append(tuple(oq))
                        if i < len(half_two) and half_two[i]:
                            layers.append(tuple(half_two[i]))
            layers.append(_invert_1q_layer(l0, n))
            circ = Circuit(n, tuple(lay for lay in layers if lay))
            sub = int(gen.integers(2**62))
            if backend == "fast":
                rec = pauli_fastpath_sample(model, circ, shots, sub, ideal_bits=np.zeros(n, dtype=np.uint8))
            else:
                rec = sample_counts(model, circ, shots, sub)
            gammas[which].append(adjusted_success_probability(rec.counts, "0" * n, n))
    g1, g2, g3 = (float(np.mean(gammas[i])) for i in (1, 2, 3))
    if g2 * g3 <= 0:
        raise ValueError(f"negative radicand: ensemble means gamma2={g2}, gamma3={g3}")
    f = g1 / np.sqrt(g2 * g3)
    errs = [float(np.std(gammas[i], ddof=1)) / np.sqrt(k_ensemble) for i in (1, 2, 3)]
    rel = np.sqrt((errs[0] / g1) ** 2 + (errs[1] / (2 * g2)) ** 2 + (errs[2] / (2 * g3)) ** 2)
    f_e = convert_metric(f, "f", "F_e", 2**n)
    return MCFEResult(float(f), float(f_e), g1, g2, g3, float(abs(f) * rel))


def circuit_polarization_oracle(model: GateSetModel, layers) -> float:
    """Dense PTM-product polarization of a circuit under the model's noise.

    Composes the noisy and ideal circuit PTMs and evaluates
    ``f = (Tr[L_noisy L_ideal^-1] - 1)/(d**2 - 1)``.  Width-capped by memory
    (intended for n <= 3 oracle checks).
    """
    n = model.n
    d2 = 4**n
    noisy = np.eye(d2)
    ideal = np.eye(d2)
    for layer in layers:
        for label, qubits in layer:
            ch = model.resolve(label, len(qubits), None)
            noisy = _embed_ptm(ch.ptm, qubits, n) @ noisy
            u = model.ideal_unitary(label)
            ideal = _embed_ptm(Channel.from_unitary(u).ptm, qubits, n) @ ideal
    err = noisy @ ideal.T
    return float((np.trace(err) - 1) / (d2 - 1))


def _embed_ptm(ptm, qubits, n):
    k = len(qubits)
    op = ptm.reshape((4,) * (2 * k))
    t = np.eye(4**n).reshape((4,) * (2 * n))
    t = np.tensordot(op, t, axes=(list(range(k, 2 * k)), list(qubits)))
    t = np.moveaxis(t, list(range(k)), list(qubits))
    return t.reshape(4**n, 4**n)


# -- circuit output accreditation ---------------------------------------------------

@dataclass
class AccreditationResult:
    f_lower: float
    f_upper: float
    n_unsuccessful: int
    n_traps: int
    theta: float
    alpha: float


def trap_count(theta: float, alpha: float) -> int:
    """N_c = ceil(2 ln(2/(1-alpha)) / theta**2)."""
    return int(np.ceil(2 * np.log(2 / (1 - alpha)) / theta**2))


def _trap_rounds(n, n_rounds, twoq_layers, gen):
    """Per-round {I, H, S} picks, constrained so every entangling gate sees
    at least one Z-basis qubit (the trap then acts classically through the
    CZ layers and ends in a definite computational outcome).

    Each round's gates reset the single-qubit frame (the previous pick's
    inverse is compiled in), so a qubit is equatorial during round t exactly
    when that round's pick is H.
    """
    rounds = []
    choices = ("I", "H", "S")
    for t in range(n_rounds):
        while True:
            pick = [choices[int(gen.integers(3))] for _ in range(n)]
            ok = True
            if t < len(twoq_layers):
                for _, qs in twoq_layers[t]:
                    if len(qs) == 2 and pick[qs[0]] == "H" and pick[qs[1]] == "H":
                        ok = False
                        break
            if ok:
                rounds.append(pick)
                break
    return rounds


def _trap_oneq_layers(n, rounds):
    """Compose each round's {I,H,S} pick with the inverse of the previous
    round's accumulated single-qubit action, closing with a full inversion
    round, so the trap's 1q gates alone compose to the identity per qubit."""
    from .cliffords import CliffordTableau, gate_tableau

    idx1 = _group_index(1)
    per_qubit = [CliffordTableau.identity(1) for _ in range(n)]
    out = []
    for pick in rounds:
        layer = []
        for q in range(n):
            w = gate_tableau(pick[q])
            tab = per_qubit[q].inverse().then(w)
            layer.append((clifford_label(1, idx1[tab.key()]), (q,)))
            per_qubit[q] = w
        out.append(tuple(layer))
    out.append(
        tuple(
            (clifford_label(1, idx1[per_qubit[q].inverse().key()]), (q,)) for q in range(n)
        )
    )
    return out


def accredit(
    model: GateSetModel,
    target_layers,
    theta: float,
    alpha: float,
    seed,
    shots_per_trap: int = 1,
    backend: str = "fast",
) -> AccreditationResult:
    """Circuit output accreditation: bound the target circuit's F_e with traps.

    The target must alternate 1q layers with CZ entangling layers.  Each of
    the ``N_c = trap_count(theta, alpha)`` traps keeps the target's width
    and entangling-gate placement, substitutes {I, H, S} draws for the 1q
    gates with inverses compiled into the next round, and is randomly
    compiled.  A trap is unsuccessful when it misses its all-zeros outcome
    in the logical frame (i.e. its tracked definite outcome); the fraction
    bounds F_e via ``1 - N_uns/N_c >= F_e >= 1 - 2 N_uns/N_c``.
    """
    n = model.n
    gen = rng(seed)
    _, twoq_t = split_alternating([tuple(l) for l in target_layers], n)
    for layer in twoq_t:
        for lbl, qs in layer:
            if len(qs) == 2 and lbl != "CZ":
                raise ValueError("accreditation traps assume CZ entangling layers")
    n_traps = trap_count(theta, alpha)
    n_uns = 0
    for _ in range(n_traps):
        rounds = _trap_rounds(n, len(twoq_t) + 1, twoq_t, gen)
        oneq = _trap_oneq_layers(n, rounds)
        oneq, twoq = _randomized_compile(oneq, [tuple(l) for l in twoq_t], n, gen)
        circ = _stitch(oneq, twoq, n)
        sub = int(gen.integers(2**62))
        target_bits = _ideal_bits_string(model, circ)
        if backend == "fast":
            rec = pauli_fastpath_sample(model, circ, shots_per_trap, sub, ideal_bits=_bits_array(target_bits))
        else:
            rec = sample_counts(model, circ, shots_per_trap, sub)
        if rec.counts.get(target_bits, 0) < shots_per_trap:
            n_uns += 1
    frac = n_uns / n_traps
    return AccreditationResult(max(1 - 2 * frac, 0.0), 1 - frac, n_uns, n_traps, theta, alpha)


def _bits_array(bits: str) -> np.ndarray:
    return np.array([int(b) for b in bits], dtype=np.uint8)


def _ideal_bits_string(model, circ) -> str:
    from .device import _FastPathProgram

    bits = _FastPathProgram(model, circ).ideal_bits()
    if bits is None:
        raise RuntimeError("trap circuit does not have a definite outcome")
    return "".join(str(int(b)) for b in bits)
