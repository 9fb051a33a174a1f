"""Cycle benchmarking, Walsh-Hadamard Pauli-noise reconstruction, ACES, and
the pattern-transform learnability analysis.

The Walsh-Hadamard transform used throughout is the symplectic one over
Pauli indices: ``lambda_P = sum_Q (-1)^{<P,Q>} p_Q`` with ``<P,Q> = 0`` when
P and Q commute and 1 otherwise.  It factorizes per qubit into a 4x4 kernel
applied along each base-4 index axis and squares to ``4**n`` times the
identity, so the inverse carries a ``4**-n`` normalization.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .cliffords import (
    INVERSE_LABEL,
    CliffordTableau,
    eigenprep_gate,
    measurement_rotation_gate,
)
from .device import Circuit, pauli_fastpath_signs, sample_counts, _tableau_for
from .linalg import pauli_label, rng
from .paulis import PauliString, all_paulis

# rows P in I, X, Y, Z order; columns Q; entry (-1)^{P, Q anticommute}
_WH_KERNEL = np.array(
    [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=float
)


def walsh_hadamard(values, direction: str) -> np.ndarray:
    """Transform between Pauli error rates and Pauli eigenvalues.

    ``direction`` is ``"rates-to-eigenvalues"`` (forward) or
    ``"eigenvalues-to-rates"`` (inverse, with the 4**-n factor).
    """
    v = np.asarray(values, dtype=float)
    size = v.size
    n = 0
    while 4**n < size:
        n += 1
    if 4**n != size:
        raise ValueError("length must be a power of 4")
    t = v.reshape((4,) * n) if n else v.copy()
    for axis in range(n):
        t = np.tensordot(_WH_KERNEL, t, axes=(1, axis))
        t = np.moveaxis(t, 0, axis)
    out = t.reshape(-1)
    if direction == "rates-to-eigenvalues":
        return out
    if direction == "eigenvalues-to-rates":
        return out / size
    raise ValueError(f"unknown direction {direction!r}")


# -- learnability via the pattern-transform graph --------------------------------

@dataclass
class PatternTransformGraph:
    """Directed multigraph of support patterns under a Clifford cycle.

    Each Pauli P contributes one edge pattern(P) -> pattern(G P G^-1); the
    graph's cycle space is exactly the SPAM-robustly learnable information.
    """

    n: int
    edges: list  # (pauli index, source pattern, target pattern)
    nodes: list = field(default_factory=list)

    def __post_init__(self):
        if not self.nodes:
            self.nodes = sorted({u for _, u, _ in self.edges} | {v for _, _, v in self.edges})

    def self_loops(self):
        return {p for p, u, v in self.edges if u == v}

    def components(self) -> int:
        parent = {v: v for v in self.nodes}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for _, u, v in self.edges:
            ra, rb = find(u), find(v)
            if ra != rb:
                parent[ra] = rb
        return len({find(v) for v in self.nodes})

    def cycle_space_dim(self) -> int:
        return len(self.edges) - len(self.nodes) + self.components()

    def gauge_dim(self) -> int:
        """Unlearnable degrees of freedom: independent cuts, V - c."""
        return len(self.nodes) - self.components()


@dataclass
class LearnabilityReport:
    graph: PatternTransformGraph
    learnable: dict  # pauli label -> individually learnable (self-loop)
    cycle_space_dim: int

    def product_learnable(self, labels) -> bool:
        """True when the multiset of edges has zero boundary (lies in the
        cycle space), i.e. every node enters as often as it leaves."""
        balance = {}
        for lab in labels:
            p = PauliString.from_label(lab)
            _, u, v = next(e for e in self.graph.edges if e[0] == p.index)
            balance[u] = balance.get(u, 0) + 1
            balance[v] = balance.get(v, 0) - 1
        return all(b == 0 for b in balance.values())


def learnability(cycle: CliffordTableau) -> LearnabilityReport:
    """Classify each Pauli fidelity of a Clifford cycle as SPAM-robustly
    learnable (pattern-preserving) or not."""
    n = cycle.n
    edges = []
    learnable = {}
    for p in all_paulis(n):
        img = cycle.conjugate(p)
        edges.append((p.index, p.pattern, img.pattern))
        learnable[p.label] = p.pattern == img.pattern
    graph = PatternTransformGraph(n, edges)
    return LearnabilityReport(graph, learnable, graph.cycle_space_dim())


def relabel_cycle(cycle: CliffordTableau, perm) -> CliffordTableau:
    """The cycle with qubits permuted (q -> perm[q]); used to check that the
    learnability classification is invariant under relabeling."""
    n = cycle.n
    inverse = {perm[q]: q for q in range(n)}

    def remap(p: PauliString) -> PauliString:
        x = z = 0
        for q in range(n):
            x |= ((p.xbits >> q) & 1) << perm[q]
            z |= ((p.zbits >> q) & 1) << perm[q]
        return PauliString(n, x, z, p.phase)

    xs = [None] * n
    zs = [None] * n
    for q in range(n):
        xs[perm[q]] = remap(cycle.x_images[q])
        zs[perm[q]] = remap(cycle.z_images[q])
    return CliffordTableau(n, tuple(xs), tuple(zs))


# -- cycle benchmarking -----------------------------------------------------------

@dataclass
class PauliDecay:
    pauli: str
    depths: list
    estimates: list
    stderrs: list
    a: float = float("nan")
    f: float = float("nan")
    f_err: float = float("nan")


@dataclass
class PauliDecaySet:
    cycle: tuple
    decays: dict  # pauli label -> PauliDecay

    def process_fidelity(self) -> float:
        return float(np.mean([d.f for d in self.decays.values()]))


def cycle_order(cycle_tableau: CliffordTableau, max_order: int = 24) -> int:
    t = cycle_tableau
    for j in range(1, max_order + 1):
        if t.key() == CliffordTableau.identity(cycle_tableau.n).key():
            return j
        t = t.then(cycle_tableau)
    raise ValueError(
        "cycle has no small order; benchmark it as a dressed cycle against the identity"
    )


def cycle_tableau(model, cycle_layer, gate_defs=None) -> CliffordTableau:
    tab = CliffordTableau.identity(model.n)
    for label, qubits in cycle_layer:
        tab = tab.then(_tableau_for(model.ideal_unitary(label, gate_defs), label).embed(model.n, qubits))
    return tab


def _prep_layer(p: PauliString, gen):
    """1q layer preparing a random tensor eigenstate of p; returns (layer, sign)."""
    layer = []
    total = 1
    for q in range(p.n):
        letter = p.letter(q)
        s = 1
        if letter != "I":
            s = 1 if gen.random() < 0.5 else -1
            total *= s
        gate = eigenprep_gate(letter, s)
        if gate != "I":
            layer.append((gate, (q,)))
    return tuple(layer), total


def _meas_layer(p: PauliString):
    layer = []
    for q in range(p.n):
        g = measurement_rotation_gate(p.letter(q))
        if g != "I":
            layer.append((g, (q,)))
    return tuple(layer)


def _ztype(p: PauliString) -> PauliString:
    return PauliString(p.n, 0, p.pattern, 0)


def _pauli_parity_mean(rec, p: PauliString, n: int) -> float:
    val = 0.0
    for bstr, c in rec.counts.items():
        par = sum(int(bstr[q]) for q in range(n) if (p.zbits >> q) & 1) % 2
        val += c * (1 - 2 * par)
    return val / rec.shots


def cycle_benchmark(
    model,
    cycle,
    paulis,
    depths,
    circuits_per_depth: int,
    shots: int,
    seed,
    backend: str = "fast",
) -> PauliDecaySet:
    """Cycle benchmarking of a Clifford cycle.

    ``cycle`` is one layer ``((label, qubits), ...)``; depths must be
    multiples of the cycle's order j.  Each tracked Pauli decay fits
    ``A f_P**m``; for a cycle of order j the fitted ``f_P`` estimates the
    geometric mean of the error eigenvalues around P's orbit.
    """
    n = model.n
    cycle = tuple(cycle)
    tab = cycle_tableau(model, cycle)
    order = cycle_order(tab)
    for m in depths:
        if m % order:
            raise ValueError(f"depth {m} is not a multiple of the cycle order {order}")
    gen = rng(seed)
    decays = {}
    for p in paulis:
        p = p if isinstance(p, PauliString) else PauliString.from_label(p)
        means, errs = [], []
        for m in depths:
            samples = []
            for _ in range(circuits_per_depth):
                body = []
                prep_layer, sign = _prep_layer(p, gen)
                for _rep in range(m):
                    dressing = tuple(
                        (lab, (q,))
                        for q, lab in enumerate(
                            ("I", "X", "Y", "Z")[int(i)] for i in gen.integers(4, size=n)
                        )
                        if lab != "I"
                    )
                    if dressing:
                        body.append(dressing)
                    body.append(cycle)
                from .device import propagate_pauli

                current = propagate_pauli(model, Circuit(n, tuple(body)), p)
                layers = [prep_layer] + body
                sgn = current.sign
                if abs(sgn.imag) > 1e-12:
                    raise RuntimeError("propagated Pauli acquired a complex phase")
                sign *= 1 if sgn.real > 0 else -1
                meas = _meas_layer(current)
                if meas:
                    layers.append(meas)
                measured = _ztype(current)
                circ = Circuit(n, tuple(layers))
                sub = int(gen.integers(2**62))
                if backend == "fast":
                    vals = pauli_fastpath_signs(model, circ, measured, shots, sub, ideal_sign=sign)
                    samples.append(sign * vals.mean())
                else:
                    rec = sample_counts(model, circ, shots, sub)
                    samples.append(sign * _pauli_parity_mean(rec, measured, n))
            arr = np.asarray(samples)
            means.append(arr.mean())
            errs.append(arr.std(ddof=1) / np.sqrt(arr.size) if arr.size > 1 else 0.05)
        from .rb import fit_decay

        decay = PauliDecay(p.label, list(depths), means, errs)
        fit = fit_decay(list(depths), means, errs, fix_b=0.0)
        decay.a, decay.f, decay.f_err = fit.a, fit.f, fit.f_err
        decays[p.label] = decay
    return PauliDecaySet(cycle, decays)


def cb_decay_oracle(error_eigenvalues: np.ndarray, cycle_tab: CliffordTableau, p: PauliString) -> float:
    """Prediction for f_P: geometric mean of the post-cycle error eigenvalues
    along the orbit of P under the cycle."""
    order = cycle_order(cycle_tab)
    lam = 1.0
    current = p
    for _ in range(order):
        current = cycle_tab.conjugate(current).hermitian()
        lam *= float(error_eigenvalues[current.index])
    return float(lam ** (1.0 / order))


# -- cycle error reconstruction ----------------------------------------------------

@dataclass
class CERRate:
    bodies: tuple
    pauli: str
    rate: float
    stderr: float
    degeneracy_group: int  # -1 when the defining fidelities are learnable

    def as_row(self):
        return {
            "bodies": list(self.bodies),
            "pauli": self.pauli,
            "rate": self.rate,
            "stderr": self.stderr,
            "degeneracy_group": self.degeneracy_group,
        }


def cer(decay_set: PauliDecaySet, n: int, cycle_tab: CliffordTableau, bodies):
    """Marginal Pauli error rates on qubit subsets from CB decays.

    For each subset, the marginal error distribution restricted to those
    qubits is the partial Walsh-Hadamard inverse of the fidelities of the
    Paulis supported there (each reported k-body rate therefore marginalizes
    over all higher-weight errors on the other qubits).  Rates built from
    fidelities that are not individually learnable carry a shared
    degeneracy-group id; their values reflect the CB geometric-mean
    estimates over the unlearnable orbit.
    """
    report = learnability(cycle_tab)
    group_of = {}
    next_group = [0]

    def group_id(full: PauliString) -> int:
        orbit = frozenset(_orbit(cycle_tab, full))
        if orbit not in group_of:
            group_of[orbit] = next_group[0]
            next_group[0] += 1
        return group_of[orbit]

    out = []
    for subset in bodies:
        subset = tuple(subset)
        k = len(subset)
        lam = np.ones(4**k)
        var = np.zeros(4**k)
        tainted = {}
        for local_idx in range(1, 4**k):
            local = PauliString.from_index(local_idx, k)
            full = local.embed(n, subset)
            lab = full.label
            if lab not in decay_set.decays:
                raise ValueError(f"missing CB decay for Pauli {lab}")
            lam[local_idx] = decay_set.decays[lab].f
            var[local_idx] = decay_set.decays[lab].f_err ** 2
            if not report.learnable[lab]:
                tainted[local_idx] = group_id(full)
        rates = walsh_hadamard(lam, "eigenvalues-to-rates")
        stderr = float(np.sqrt(var.sum()) / 4**k)
        for local_idx in range(1, 4**k):
            local = PauliString.from_index(local_idx, k)
            out.append(
                CERRate(subset, local.label, float(rates[local_idx]), stderr, tainted.get(local_idx, -1))
            )
    return out


def _orbit(cycle_tab: CliffordTableau, p: PauliString):
    start = p.hermitian().label
    orbit = [start]
    current = cycle_tab.conjugate(p).hermitian()
    while current.label != start:
        orbit.append(current.label)
        current = cycle_tab.conjugate(current).hermitian()
    return orbit


# -- ACES ---------------------------------------------------------------------------

@dataclass
class ACESResult:
    parameters: list  # (gate label, qubits, pauli label) and SPAM triples
    estimates: np.ndarray
    stderrs: np.ndarray
    design_rank: int
    nullspace: np.ndarray
    reduced_chi2: float = float("nan")  # residual vs shot noise, dof-normalized

    def eigenvalue(self, label, qubits, pauli) -> float:
        return float(self.estimates[self.parameters.index((label, tuple(qubits), pauli))])

    def stderr(self, label, qubits, pauli) -> float:
        return float(self.stderrs[self.parameters.index((label, tuple(qubits), pauli))])


def aces(
    model,
    gate_layers,
    n_circuits: int,
    depth: int,
    paulis_per_circuit: int,
    shots: int,
    seed,
    assume_ideal_spam: bool = True,
    backend: str = "fast",
    randomized_compiling: bool = True,
) -> ACESResult:
    """Averaged circuit eigenvalue sampling for a crosstalk-free Pauli model.

    Parameters are the nontrivial Pauli eigenvalues of every gate appearing
    in ``gate_layers`` plus, when ``assume_ideal_spam`` is false, independent
    preparation and measurement log-fidelities per (qubit, axis) (keys
    ("PREP", (q,), axis) and ("MEAS", (q,), axis)); the prepared Pauli's
    letters pick up PREP factors and the final measured Pauli's letters MEAS
    factors.  With unknown SPAM the design matrix is rank deficient by
    exactly the unlearnable degrees of freedom, the pattern-transform cut
    count of the benchmarked cycles.

    The design combines systematic depth-1 rows (every gate probed by every
    local Pauli) with random mirror-structured Clifford circuits carrying a
    terminal randomizing layer; gates outside ``gate_layers`` (the 1q
    dressing) are assumed noiseless, mirroring the learnability analysis'
    assumptions.  Solves ``x = A^+ log b``; any estimated decay <= 0 is
    floored at 1e-6 with a warning.  ``reduced_chi2`` reports the residual
    ``b - A x`` against shot noise: consistent with 1 for in-model (Pauli)
    noise, inflated under coherent noise when ``randomized_compiling`` is
    turned off, and restored by leaving it on.
    """
    n = model.n
    gate_layers = [tuple(layer) for layer in gate_layers]
    gate_set = {(label, tuple(qubits)) for layer in gate_layers for label, qubits in layer}
    params = []
    for label, qubits in sorted(gate_set):
        for idx in range(1, 4 ** len(qubits)):
            params.append((label, qubits, pauli_label(idx, len(qubits))))
    spam_params = []
    if not assume_ideal_spam:
        for kind in ("PREP", "MEAS"):
            for q in range(n):
                for axis in "XYZ":
                    spam_params.append((kind, (q,), axis))
    all_params = params + spam_params
    col = {p: i for i, p in enumerate(all_params)}
    gen = rng(seed)

    rows, vals, variances = [], [], []

    def add_measurement(prefix_layers, prepared: PauliString):
        row = np.zeros(len(all_params))
        current = prepared
        for layer in prefix_layers:
            tab = cycle_tableau(model, layer)
            nxt = tab.conjugate(current)
            for label, qubits in layer:
                if (label, tuple(qubits)) in gate_set:
                    local = nxt.restrict(qubits).hermitian()
                    if local.weight:
                        row[col[(label, tuple(qubits), local.label)]] += 1
            current = nxt
        if not assume_ideal_spam:
            for q in range(n):
                a0 = prepared.letter(q)
                if a0 != "I":
                    row[col[("PREP", (q,), a0)]] += 1
                a1 = current.hermitian().letter(q)
                if a1 != "I":
                    row[col[("MEAS", (q,), a1)]] += 1
        sgn = current.sign
        ideal_sign = 1 if sgn.real > 0 else -1
        prep_layer, prep_sign = _prep_layer(prepared, gen)
        meas = _meas_layer(current)
        layers = (prep_layer,) + tuple(prefix_layers) + ((meas,) if meas else ())
        circ = Circuit(n, layers)
        measured = _ztype(current)
        sub = int(gen.integers(2**62))
        if backend == "fast":
            est = prep_sign * ideal_sign * pauli_fastpath_signs(
                model, circ, measured, shots, sub, ideal_sign=prep_sign * ideal_sign
            ).mean()
        else:
            rec = sample_counts(model, circ, shots, sub)
            est = prep_sign * ideal_sign * _pauli_parity_mean(rec, measured, n)
        if est <= 0:
            warnings.warn("ACES decay estimate <= 0 floored at 1e-6 (data insufficient)")
            est = 1e-6
        rows.append(row)
        vals.append(np.log(est))
        variances.append(max((1 - est**2) / shots, 1e-12) / est**2)

    # systematic depth-1 rows: every gate, every local Pauli (via a preimage)
    for layer in gate_layers:
        tab = cycle_tableau(model, layer)
        inv = tab.inverse()
        for label, qubits in layer:
            for idx in range(1, 4 ** len(qubits)):
                local = PauliString.from_index(idx, len(qubits))
                target = local.embed(n, qubits)
                add_measurement([layer], inv.conjugate(target).hermitian())

    # random mirror-structured circuits with a terminal randomizing layer
    for circuit_index in range(n_circuits):
        half = [gate_layers[int(gen.integers(len(gate_layers)))] for _ in range(depth)]
        if randomized_compiling:
            dress = [_random_1q_layer(n, gen) for _ in range(depth + 1)]
        else:
            dress = [_fixed_1q_layer(n, circuit_index) for _ in range(depth + 1)]
        seq = []
        for i in range(depth):
            seq.append(dress[i])
            seq.append(half[i])
        seq.append(dress[depth])
        for i in range(depth - 1, -1, -1):
            seq.append(tuple((INVERSE_LABEL.get(lbl, lbl), qs) for lbl, qs in half[i]))
            seq.append(tuple((INVERSE_LABEL[lbl], qs) for lbl, qs in dress[i]))
        seq.append(_random_1q_layer(n, gen))  # terminal randomizing layer
        for _ in range(paulis_per_circuit):
            p = PauliString.from_index(int(gen.integers(1, 4**n)), n)
            add_measurement(seq, p)

    a = np.array(rows)
    b = np.array(vals)
    pinv = np.linalg.pinv(a, rcond=1e-10)
    x = pinv @ b
    cov = pinv @ np.diag(variances) @ pinv.T
    rank = int(np.linalg.matrix_rank(a, tol=1e-8))
    _, _, vt = np.linalg.svd(a)
    null = vt[rank:]
    resid = b - a @ x
    dof = max(len(b) - rank, 1)
    reduced_chi2 = float(np.sum(resid**2 / np.asarray(variances)) / dof)
    return ACESResult(
        all_params,
        np.exp(x),
        np.sqrt(np.clip(np.diag(cov), 0, None)) * np.exp(x),
        rank,
        null,
        reduced_chi2,
    )


def _random_1q_layer(n, gen):
    names = ("I", "X", "Y", "Z", "H", "S", "SDG", "X90", "Y90")
    layer = []
    for q in range(n):
        g = names[int(gen.integers(len(names)))]
        if g != "I":
            layer.append((g, (q,)))
    return tuple(layer)


def _fixed_1q_layer(n, circuit_index):
    """Deterministic dressing used when randomized compiling is off: the
    same non-random basis change at every occurrence, so coherent errors add
    systematically instead of being twirled."""
    names = ("H", "S", "X90")
    g = names[circuit_index % len(names)]
    return tuple((g, (q,)) for q in range(n))
