"""Randomized-benchmarking family: circuit generation, execution, decay fits.

Depth convention: ``m`` counts the random gates exclusive of the inversion,
so ``m = 0`` circuits contain one random gate and its inverse.  All decays
fit ``p(m) = A f**m + B`` by weighted least squares on per-depth means,
with a variance floor of ``(0.5 / sqrt(K N))**2`` to avoid zero-weight
degeneracy at saturated depths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.optimize
import scipy.stats

from .cliffords import (
    INVERSE_LABEL,
    CliffordTableau,
    clifford_gate_factory,
    clifford_label,
    eigenprep_gate,
    enumerate_clifford_group,
    gate_tableau,
    measurement_rotation_gate,
)
from .device import (
    Circuit,
    GateSetModel,
    circuit_probabilities,
    ideal_probabilities,
    pauli_fastpath_sample,
    pauli_fastpath_signs,
    sample_counts,
)
from .linalg import child_seeds, rng
from .metrics import convert_metric
from .paulis import PauliString


@dataclass(frozen=True)
class RBDesign:
    qubits: tuple
    depths: tuple
    circuits_per_depth: int
    shots: int
    seed: int
    variant: str = "crb"

    def __post_init__(self):
        if len(self.depths) < 3:
            raise ValueError("need at least 3 depths to fit an exponential")
        if any(m < 0 for m in self.depths):
            raise ValueError("depths must be nonnegative")


@dataclass
class DecayDataset:
    depths: list
    values: dict  # depth -> list of per-circuit success metric values
    variant: str = "crb"
    meta: dict = field(default_factory=dict)

    def means(self):
        return np.array([np.mean(self.values[m]) for m in self.depths])

    def stderrs(self):
        out = []
        for m in self.depths:
            v = np.asarray(self.values[m], dtype=float)
            out.append(v.std(ddof=1) / np.sqrt(v.size) if v.size > 1 else 0.1)
        return np.array(out)


@dataclass
class FitResult:
    a: float
    f: float
    b: float
    cov: np.ndarray
    fixed_b: bool
    f_err: float
    residuals: np.ndarray
    chi2: float
    dof: int

    @property
    def chi2_pvalue(self) -> float:
        if self.dof <= 0:
            return float("nan")
        return float(scipy.stats.chi2.sf(self.chi2, self.dof))


def fit_decay(depths, means, stderrs=None, fix_b=None, variance_floor=None) -> FitResult:
    """Weighted least-squares fit of ``A f**m (+ B)`` to per-depth means."""
    depths = np.asarray(depths, dtype=float)
    means = np.asarray(means, dtype=float)
    if not np.all(np.isfinite(means)):
        raise ValueError(f"decay means contain non-finite values: {means}")
    if stderrs is None:
        stderrs = np.full_like(means, 0.02)
    sig = np.asarray(stderrs, dtype=float).copy()
    floor = 1e-4 if variance_floor is None else np.sqrt(variance_floor)
    sig = np.maximum(sig, floor)

    b0 = 0.0 if fix_b is None else float(fix_b)
    if fix_b is None and means.size >= 4:
        b0 = float(means[np.argmax(depths)])
        b0 = min(max(b0, 0.0), 1.0)
    a0 = float(np.clip(means[np.argmin(depths)] - b0, 1e-3, 2.0))
    f0 = 0.98
    with np.errstate(all="ignore"):
        pos = (means - b0) / max(a0, 1e-9)
        good = (pos > 1e-3) & (depths > 0)
        if good.sum() >= 1:
            f0 = float(np.exp(np.log(pos[good]).min() / depths[good].max()))
    f0 = min(max(f0, 1e-3), 1.0 - 1e-9)

    if fix_b is None:
        fun = lambda m, a, f, b: a * f**m + b
        p0 = [a0, f0, b0]
        bounds = ([-2.0, 1e-9, -1.0], [2.0, 1.0, 1.0])
    else:
        fun = lambda m, a, f: a * f**m + fix_b
        p0 = [a0, f0]
        bounds = ([-2.0, 1e-9], [2.0, 1.0])
    try:
        popt, pcov = scipy.optimize.curve_fit(
            fun, depths, means, p0=p0, sigma=sig, absolute_sigma=True, bounds=bounds, maxfev=20000
        )
    except RuntimeError as exc:
        resid = means - fun(depths, *p0)
        raise RuntimeError(f"decay fit did not converge; residuals at start {resid}") from exc
    resid = means - fun(depths, *popt)
    chi2 = float(np.sum((resid / sig) ** 2))
    if fix_b is None:
        a, f, b = popt
    else:
        a, f = popt
        b = float(fix_b)
    f_err = float(np.sqrt(max(pcov[1, 1], 0.0)))
    if not np.isfinite(f_err) or f_err == 0.0:
        f_err = float(np.max(sig))  # boundary fits: fall back to data scatter
    return FitResult(float(a), float(f), float(b), pcov, fix_b is not None, f_err, resid, chi2, len(depths) - len(popt))


def epc(fit: FitResult, d: int, metric: str = "e_F") -> float:
    """Error per Clifford from a fitted polarization, in the chosen metric."""
    return convert_metric(fit.f, "f", metric, d)


def epc_err(fit: FitResult, d: int, metric: str = "e_F") -> float:
    scale = abs(convert_metric(1.0, "f", metric, d) - convert_metric(0.0, "f", metric, d))
    return scale * fit.f_err


# -- Clifford labels and models -----------------------------------------------

@lru_cache(maxsize=None)
def _group_index(n: int) -> dict:
    return {e.tableau.key(): i for i, e in enumerate(enumerate_clifford_group(n))}


def compose_clifford_labels(n: int, indices) -> int:
    group = enumerate_clifford_group(n)
    tab = CliffordTableau.identity(n)
    for i in indices:
        tab = tab.then(group[i].tableau)
    return _group_index(n)[tab.key()]


def pauli_times_clifford(n: int, pauli: PauliString, index: int, side: str) -> int:
    """Group index of ``P o C`` (side="left") or ``C o P`` (side="right")."""
    group = enumerate_clifford_group(n)
    ptab = _pauli_tableau(pauli)
    tab = group[index].tableau.then(ptab) if side == "left" else ptab.then(group[index].tableau)
    return _group_index(n)[tab.key()]


def _pauli_tableau(p: PauliString) -> CliffordTableau:
    n = p.n
    xs, zs = [], []
    for q in range(n):
        x_gen = PauliString(n, 1 << q, 0, 0)
        z_gen = PauliString(n, 0, 1 << q, 0)
        xs.append(x_gen if p.commutes(x_gen) else PauliString(n, 1 << q, 0, 2))
        zs.append(z_gen if p.commutes(z_gen) else PauliString(n, 0, 1 << q, 2))
    return CliffordTableau(n, tuple(xs), tuple(zs))


# -- standard (Clifford-group) RB ------------------------------------------------

def crb_circuits(design: RBDesign, interleave: str = None):
    """Motion-reversal circuits with a uniformly random final Pauli.

    Yields ``(depth, Circuit, success_bits)`` triples; the composed unitary
    of every circuit is proportional to the sampled Pauli, so noiseless
    execution returns ``success_bits`` with probability 1.
    """
    n = len(design.qubits)
    if n not in (1, 2):
        raise ValueError("standard RB is enumerated for 1 or 2 qubits")
    group = enumerate_clifford_group(n)
    index = _group_index(n)
    gen = rng(design.seed)
    inter_tab = gate_tableau(interleave) if interleave else None
    out = []
    for m in design.depths:
        for _ in range(design.circuits_per_depth):
            layers = []
            comp = CliffordTableau.identity(n)
            for _i in range(m + 1):
                k = int(gen.integers(len(group)))
                layers.append(((clifford_label(n, k), tuple(range(n))),))
                comp = comp.then(group[k].tableau)
                if inter_tab is not None:
                    layers.append(((interleave, tuple(range(n))),))
                    comp = comp.then(inter_tab)
            p = PauliString.from_index(int(gen.integers(4**n)), n)
            target = comp.inverse().then(_pauli_tableau(p))
            inv_idx = index[target.key()]
            layers.append(((clifford_label(n, inv_idx), tuple(range(n))),))
            bits = "".join("1" if (p.xbits >> q) & 1 else "0" for q in range(n))
            out.append((m, Circuit(n, tuple(layers)), bits))
    return out


def run_decay(model: GateSetModel, circuits, design: RBDesign, backend: str = "dense") -> DecayDataset:
    """Execute success-string circuits and collect per-circuit frequencies."""
    values = {m: [] for m in design.depths}
    seeds = child_seeds(design.seed + 1, len(circuits))
    for (m, circ, bits), s in zip(circuits, seeds):
        if backend == "fast":
            rec = pauli_fastpath_sample(model, circ, design.shots, s)
        else:
            rec = sample_counts(model, circ, design.shots, s)
        values[m].append(rec.counts.get(bits, 0) / design.shots)
    return DecayDataset(list(design.depths), values, design.variant)


def write_decay_dataset(path, entries):
    """Write an RB dataset as JSON lines.

    Each entry is ``(depth, ShotRecord, success_bits)`` plus optional design
    metadata; external (hardware) datasets in this format can be analyzed
    with :func:`load_decay_dataset` + :func:`fit_decay` without the
    simulator.
    """
    import json

    with open(path, "w") as f:
        for depth, record, bits, meta in entries:
            f.write(
                json.dumps(
                    {
                        "depth": depth,
                        "success": bits,
                        "record": json.loads(record.to_json()),
                        "meta": meta,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_decay_dataset(path, variant: str = "external") -> DecayDataset:
    """Read a JSON-lines RB dataset into a :class:`DecayDataset`."""
    import json

    from .device import ShotRecord

    values = {}
    meta = {}
    with open(path) as f:
        for line in f:
            payload = json.loads(line)
            rec = ShotRecord(**payload["record"])
            freq = rec.counts.get(payload["success"], 0) / rec.shots
            values.setdefault(payload["depth"], []).append(freq)
            meta.update(payload.get("meta") or {})
    return DecayDataset(sorted(values), values, variant, meta)


def run_crb(model: GateSetModel, design: RBDesign, backend: str = "dense"):
    """Standard RB end to end: circuits, execution, fit with B = 1/2**n."""
    n = len(design.qubits)
    circuits = crb_circuits(design)
    data = run_decay(model, circuits, design, backend)
    floor = (0.5 / np.sqrt(design.circuits_per_depth * design.shots)) ** 2
    fit = fit_decay(data.depths, data.means(), data.stderrs(), fix_b=1 / 2**n, variance_floor=floor)
    return data, fit


# -- simultaneous RB ---------------------------------------------------------------

def simultaneous_rb(model: GateSetModel, subsets, design: RBDesign, isolated_model=None, backend="dense"):
    """Isolated and simultaneous single-subset RB with the sRB number.

    ``subsets`` are disjoint qubit tuples.  Isolated runs drive one subset
    (others idle) on ``isolated_model`` (default: ``model``); the
    simultaneous run drives all subsets on ``model``.  Returns per-subset
    ``{"isolated": fit, "simultaneous": fit, "srb_number": value, "srb_err": err}``.
    """
    flat = [q for s in subsets for q in s]
    if len(flat) != len(set(flat)):
        raise ValueError("subsets must be disjoint")
    isolated_model = isolated_model or model
    n_total = model.n
    gen_seeds = child_seeds(design.seed, 2 * len(subsets) + 1)
    per_subset_circuits = {}
    for i, sub in enumerate(subsets):
        sub_design = RBDesign(tuple(sub), design.depths, design.circuits_per_depth, design.shots, gen_seeds[i], "srb")
        per_subset_circuits[sub] = crb_circuits(sub_design)

    results = {}
    for i, sub in enumerate(subsets):
        values = {m: [] for m in design.depths}
        seeds = child_seeds(gen_seeds[i] + 7, len(per_subset_circuits[sub]))
        for (m, circ, bits), s in zip(per_subset_circuits[sub], seeds):
            emb = _embed_circuit(circ, n_total, sub)
            rec = sample_counts(isolated_model, emb, design.shots, s) if backend == "dense" else pauli_fastpath_sample(isolated_model, emb, design.shots, s)
            values[m].append(_marginal_success(rec, bits, sub, n_total))
        data = DecayDataset(list(design.depths), values, "srb-isolated")
        fit = fit_decay(data.depths, data.means(), data.stderrs(), fix_b=1 / 2 ** len(sub))
        results[sub] = {"isolated": fit, "isolated_data": data}

    # simultaneous: splice the i-th circuit of every subset together
    counts = {m: min(len([c for c in per_subset_circuits[s] if c[0] == m]) for s in subsets) for m in design.depths}
    sim_values = {sub: {m: [] for m in design.depths} for sub in subsets}
    seeds = iter(child_seeds(gen_seeds[-1], sum(counts.values()) * design.circuits_per_depth + 64))
    by_depth = {
        sub: {m: [c for c in per_subset_circuits[sub] if c[0] == m] for m in design.depths} for sub in subsets
    }
    for m in design.depths:
        for j in range(counts[m]):
            pieces = {sub: by_depth[sub][m][j] for sub in subsets}
            layers = []
            depth = max(len(p[1].layers) for p in pieces.values())
            for li in range(depth):
                layer = []
                for sub in subsets:
                    circ = pieces[sub][1]
                    if li < len(circ.layers):
                        for lbl, qs in circ.layers[li]:
                            layer.append((lbl, tuple(sub[q] for q in qs)))
                layers.append(tuple(layer))
            joint = Circuit(n_total, tuple(layers))
            rec = sample_counts(model, joint, design.shots, next(seeds)) if backend == "dense" else pauli_fastpath_sample(model, joint, design.shots, next(seeds))
            for sub in subsets:
                sim_values[sub][m].append(_marginal_success(rec, pieces[sub][2], sub, n_total))
    for sub in subsets:
        data = DecayDataset(list(design.depths), sim_values[sub], "srb-simultaneous")
        fit = fit_decay(data.depths, data.means(), data.stderrs(), fix_b=1 / 2 ** len(sub))
        d = 2 ** len(sub)
        iso = results[sub]["isolated"]
        ratio = fit.f / iso.f
        srb = (d - 1) / d * (1 - ratio)
        err = (d - 1) / d * ratio * np.sqrt((fit.f_err / fit.f) ** 2 + (iso.f_err / iso.f) ** 2)
        results[sub].update({"simultaneous": fit, "simultaneous_data": data, "srb_number": srb, "srb_err": err})
    return results


def _embed_circuit(circ: Circuit, n_total: int, qubits) -> Circuit:
    layers = tuple(
        tuple((lbl, tuple(qubits[q] for q in qs)) for lbl, qs in layer) for layer in circ.layers
    )
    return Circuit(n_total, layers, circ.gate_defs)


def _marginal_success(rec, bits, sub, n_total) -> float:
    hits = 0
    for outcome, c in rec.counts.items():
        if all(outcome[sub[i]] == bits[i] for i in range(len(sub))):
            hits += c
    return hits / rec.shots


# -- interleaved RB -----------------------------------------------------------------

def interleaved_rb(model: GateSetModel, design: RBDesign, gate: str, backend="dense"):
    """Reference + interleaved CRB with the point estimate and its bounds.

    Returns a dict with fits, the process-infidelity point estimate
    ``(d**2-1)/d**2 (1 - f_D/f)`` (negative estimates are returned, never
    clamped), and the systematic-error interval for the gate's AGI and
    process infidelity.
    """
    n = len(design.qubits)
    d = 2**n
    ref_design = RBDesign(design.qubits, design.depths, design.circuits_per_depth, design.shots, design.seed, "irb-ref")
    int_design = RBDesign(design.qubits, design.depths, design.circuits_per_depth, design.shots, design.seed + 101, "irb-int")
    ref_data = run_decay(model, crb_circuits(ref_design), ref_design, backend)
    int_data = run_decay(model, crb_circuits(int_design, interleave=gate), int_design, backend)
    ref_fit = fit_decay(ref_data.depths, ref_data.means(), ref_data.stderrs(), fix_b=1 / d)
    int_fit = fit_decay(int_data.depths, int_data.means(), int_data.stderrs(), fix_b=1 / d)
    f, f_d = ref_fit.f, int_fit.f
    ratio = f_d / f
    e_f_gate = (d**2 - 1) / d**2 * (1 - ratio)
    r_gate = (d - 1) / d * (1 - ratio)
    e_sys = systematic_irb_bound(f, f_d, d)
    rel = np.sqrt((ref_fit.f_err / f) ** 2 + (int_fit.f_err / f_d) ** 2)
    stat = (d - 1) / d * abs(ratio) * rel
    return {
        "reference_fit": ref_fit,
        "interleaved_fit": int_fit,
        "e_F": e_f_gate,
        "r": r_gate,
        "stat_err_r": stat,
        # coherent cancellation can make the interleaved curve decay more
        # slowly than the reference; the estimate is returned as is
        "negative_estimate": bool(f_d > f),
        "bounds_r": (r_gate - e_sys - stat, r_gate + e_sys + stat),
        "bounds_e_F": (
            (d + 1) / d * (r_gate - e_sys - stat),
            (d + 1) / d * (r_gate + e_sys + stat),
        ),
    }


def systematic_irb_bound(f: float, f_d: float, d: int) -> float:
    """The interleaved-RB systematic error term E (minimum of two forms)."""
    first = (d - 1) / d * (abs(f - f_d / f) + (1 - f))
    second = 2 * (d**2 - 1) * (1 - f) / (d**2 * f) + 4 * np.sqrt(1 - f) * np.sqrt(d**2 - 1) / f
    return min(first, second)


# -- purity benchmarking (XRB) ---------------------------------------------------------

def _setting_layer(setting: str):
    layer = []
    for q, axis in enumerate(setting):
        g = measurement_rotation_gate(axis)
        if g != "I":
            layer.append((g, (q,)))
    return tuple(layer)


def xrb(model: GateSetModel, design: RBDesign, reference_fit: FitResult = None):
    """eXtended RB: CRB circuits without inversion, state tomography appended.

    Fits ``<gamma(m)> = A u**m`` where gamma is the unbiased estimate of the
    squared Bloch-vector length; returns (u, e_S, e_U) with ``e_U`` present
    when a reference CRB fit is supplied.
    """
    n = len(design.qubits)
    d = 2**n
    group = enumerate_clifford_group(n)
    gen = rng(design.seed)
    settings = _all_settings(n)
    values = {m: [] for m in design.depths}
    for m in design.depths:
        for _ in range(design.circuits_per_depth):
            layers = []
            for _i in range(m + 1):
                k = int(gen.integers(len(group)))
                layers.append(((clifford_label(n, k), tuple(range(n))),))
            gamma = 0.0
            per_pauli = {}
            for setting in settings:
                circ = Circuit(n, tuple(layers) + ((_setting_layer(setting)),))
                rec = sample_counts(model, circ, design.shots, int(gen.integers(2**62)))
                for pidx in range(1, 4**n):
                    p = PauliString.from_index(pidx, n)
                    if not _setting_covers(setting, p):
                        continue
                    mean = _pauli_mean_from_counts(rec, p, n)
                    per_pauli.setdefault(pidx, []).append(mean)
            for pidx, means in per_pauli.items():
                mhat = float(np.mean(means))
                nshots = design.shots * len(means)
                gamma += (nshots * mhat**2 - 1) / (nshots - 1)  # unbiased <P>**2
            values[m].append(gamma / (d - 1) * 1.0)
    data = DecayDataset(list(design.depths), values, "xrb")
    # gamma normalized by (d-1) so the noiseless value is 1 and the fit's
    # decay parameter is the unitarity
    fit = fit_decay(data.depths, data.means(), data.stderrs(), fix_b=0.0)
    u = fit.f
    e_s = 1 - np.sqrt(((d**2 - 1) * min(u, 1.0) + 1) / d**2)
    out = {"data": data, "fit": fit, "u": u, "u_err": fit.f_err, "e_S": e_s}
    if reference_fit is not None:
        out["e_F"] = convert_metric(reference_fit.f, "f", "e_F", d)
        out["e_U"] = out["e_F"] - e_s
    return out


def _all_settings(n):
    out = [""]
    for _ in range(n):
        out = [s + a for s in out for a in "XYZ"]
    return out


def _setting_covers(setting, p: PauliString) -> bool:
    return all(p.letter(q) in ("I", setting[q]) for q in range(p.n))


def _pauli_mean_from_counts(rec, p: PauliString, n: int) -> float:
    val = 0.0
    for bstr, c in rec.counts.items():
        par = sum(int(bstr[q]) for q in range(n) if p.letter(q) != "I") % 2
        val += c * (1 - 2 * par)
    return val / rec.shots


# -- layer samplers for native-gate RB ----------------------------------------------

class LayerSampler:
    """Omega distribution over composite layers (1q sublayer + 2q sublayer).

    Each sample returns a pair of layers: uniformly random single-qubit
    Cliffords on every qubit, then disjoint two-qubit gates placed on edges
    with the given density.
    """

    def __init__(self, n: int, edges=None, twoq_gate: str = "CNOT", twoq_density: float = 0.5):
        self.n = n
        self.edges = [tuple(e) for e in (edges if edges is not None else [(i, i + 1) for i in range(n - 1)])]
        self.twoq_gate = twoq_gate
        self.twoq_density = twoq_density

    def sample(self, gen):
        oneq = tuple((clifford_label(1, int(gen.integers(24))), (q,)) for q in range(self.n))
        order = list(gen.permutation(len(self.edges)))
        busy = set()
        twoq = []
        for ei in order:
            a, b = self.edges[ei]
            if a in busy or b in busy:
                continue
            if gen.random() < self.twoq_density:
                twoq.append((self.twoq_gate, (a, b)))
                busy.update((a, b))
        return oneq, tuple(twoq)

    def layer_polarization(self, model: GateSetModel, oneq, twoq) -> float:
        """Entanglement-fidelity-based polarization oracle for one layer."""
        fe = 1.0
        busy = set()
        for label, qubits in tuple(oneq) + tuple(twoq):
            err = model.error_channel(label, len(qubits))
            fe *= err.to_chi()[0, 0].real
            busy.update(qubits)
        if model.idle is not None:
            for q in range(self.n):
                if q not in busy:
                    fe *= model.idle.to_chi()[0, 0].real
        d = 2**self.n
        return (d**2 * fe - 1) / (d**2 - 1)


def _invert_1q_layer(layer, n):
    inv = []
    for lbl, qs in layer:
        if lbl.startswith("c1_"):
            group = enumerate_clifford_group(1)
            idx = int(lbl.split("_")[1])
            inv_idx = _group_index(1)[group[idx].tableau.inverse().key()]
            inv.append((clifford_label(1, inv_idx), qs))
        else:
            inv.append((INVERSE_LABEL[lbl], qs))
    return tuple(inv)


# -- binary RB ----------------------------------------------------------------------

def birb(model: GateSetModel, design: RBDesign, sampler: LayerSampler, backend="fast"):
    """Binary RB over the sampler's layer distribution.

    Prepares a random Pauli's tensor eigenstate, applies m composite layers,
    rotates the propagated Pauli to Z-type, and scores each shot +1/-1 by
    the measured eigenvalue.  Fits ``A f**m`` with B = 0.
    """
    n = sampler.n
    gen = rng(design.seed)
    values = {m: [] for m in design.depths}
    for m in design.depths:
        for _ in range(design.circuits_per_depth):
            pidx = int(gen.integers(1, 4**n))
            p = PauliString.from_index(pidx, n)
            layers = []
            prep = []
            sign_total = 1
            for q in range(n):
                letter = p.letter(q)
                if letter == "I":
                    continue
                s = 1 if gen.random() < 0.5 else -1
                sign_total *= s
                g = eigenprep_gate(letter, s)
                if g != "I":
                    prep.append((g, (q,)))
            layers.append(tuple(prep))
            body = []
            for _i in range(m):
                oneq, twoq = sampler.sample(gen)
                body.append(oneq)
                body.append(twoq)
            layers.extend(body)
            from .device import propagate_pauli

            current = propagate_pauli(model, Circuit(n, tuple(body)), p)
            sgn = current.sign
            if abs(sgn.imag) > 1e-9:
                raise RuntimeError("propagated Pauli has a complex sign")
            sign_total *= 1 if sgn.real > 0 else -1
            meas_layer = []
            for q in range(n):
                letter = current.letter(q)
                g = measurement_rotation_gate(letter)
                if g != "I":
                    meas_layer.append((g, (q,)))
            layers.append(tuple(meas_layer))
            measured = PauliString(n, 0, current.pattern, 0)
            circ = Circuit(n, tuple(layers))
            sub = int(gen.integers(2**62))
            if backend == "fast":
                signs = pauli_fastpath_signs(model, circ, measured, design.shots, sub, ideal_sign=sign_total)
                values[m].append(sign_total * signs.mean())
            else:
                rec = sample_counts(model, circ, design.shots, sub)
                values[m].append(sign_total * _pauli_mean_from_counts(rec, measured, n))
    data = DecayDataset(list(design.depths), values, "birb")
    fit = fit_decay(data.depths, data.means(), data.stderrs(), fix_b=0.0)
    return {"data": data, "fit": fit, "f": fit.f, "f_err": fit.f_err}


# -- mirror RB ---------------------------------------------------------------------

def mirror_circuit(sampler: LayerSampler, m: int, gen) -> Circuit:
    """A randomized mirror circuit of benchmark depth m (m/2 layers + inverses).

    Structure: random 1q-Clifford layer L0; m/2 sampled composite layers;
    the layer-by-layer inverse; L0 inverse.  Adjacent 1q sublayers are
    merged, and randomized compiling dresses every 2q sublayer with Paulis
    compiled into the neighboring 1q layers, leaving depth unchanged and
    the ideal action a definite bit string.
    """
    if m % 2:
        raise ValueError("mirror benchmark depth must be even")
    n = sampler.n
    half = [sampler.sample(gen) for _ in range(m // 2)]
    l0 = tuple((clifford_label(1, int(gen.integers(24))), (q,)) for q in range(n))
    ident = tuple((clifford_label(1, _identity_index()), (q,)) for q in range(n))
    # flat alternation u[0] t[0] u[1] t[1] ... u[m]; the center and edge 1q
    # layers absorb L0, its inverse, and the turnaround
    oneq_layers = []
    twoq_layers = []
    h = m // 2
    if h == 0:
        oneq_layers = [_compose_1q_layers(l0, _invert_1q_layer(l0, n), n)]
    else:
        oneq_layers.append(_compose_1q_layers(l0, half[0][0], n))
        twoq_layers.append(half[0][1])
        for i in range(1, h):
            oneq_layers.append(half[i][0])
            twoq_layers.append(half[i][1])
        oneq_layers.append(ident)  # turnaround between t_h and its inverse
        for i in range(h - 1, 0, -1):
            twoq_layers.append(tuple((INVERSE_LABEL[lbl], qs) for lbl, qs in half[i][1]))
            oneq_layers.append(_invert_1q_layer(half[i][0], n))
        twoq_layers.append(tuple((INVERSE_LABEL[lbl], qs) for lbl, qs in half[0][1]))
        oneq_layers.append(
            _compose_1q_layers(_invert_1q_layer(half[0][0], n), _invert_1q_layer(l0, n), n)
        )
    dressed_oneq, dressed_twoq = _randomized_compile(oneq_layers, twoq_layers, n, gen)
    layers = []
    for i, oneq in enumerate(dressed_oneq):
        layers.append(oneq)
        if i < len(dressed_twoq):
            layers.append(dressed_twoq[i])
    return Circuit(n, tuple(layers))


def _compose_1q_layers(first, second, n):
    """Single 1q layer equal to applying ``first`` then ``second``."""
    group = enumerate_clifford_group(1)
    idx = _group_index(1)
    per_qubit = {q: CliffordTableau.identity(1) for q in range(n)}
    for layer in (first, second):
        for lbl, (q,) in layer:
            if lbl.startswith("c1_"):
                tab = group[int(lbl.split("_")[1])].tableau
            else:
                tab = gate_tableau(lbl)
            per_qubit[q] = per_qubit[q].then(tab)
    return tuple((clifford_label(1, idx[per_qubit[q].key()]), (q,)) for q in range(n))


def _randomized_compile(oneq_layers, twoq_layers, n, gen, which_layers=None):
    """Dress 2q sublayers E as C E D with D a random Pauli layer and
    C = E D E^dag; C and D are compiled into the neighboring 1q layers so
    the ideal action and depth are unchanged.  ``which_layers`` restricts
    the dressing to the listed 2q-layer indices (default: all)."""
    from .device import _tableau_for
    from .cliffords import GATE_UNITARIES

    oneq_layers = [list(l) for l in oneq_layers]
    targets = set(range(len(twoq_layers))) if which_layers is None else set(which_layers)
    for i, twoq in enumerate(twoq_layers):
        if i not in targets:
            continue
        d_pauli = PauliString.from_index(int(gen.integers(4**n)), n)
        tab = CliffordTableau.identity(n)
        for label, qubits in twoq:
            tab = tab.then(_tableau_for(GATE_UNITARIES[label], label).embed(n, qubits))
        c_pauli = tab.conjugate(d_pauli).hermitian()
        # D composed after layer i's 1q gates; C composed before layer i+1's
        oneq_layers[i] = list(_compose_1q_with_pauli(tuple(oneq_layers[i]), d_pauli, n, before=False))
        oneq_layers[i + 1] = list(_compose_1q_with_pauli(tuple(oneq_layers[i + 1]), c_pauli, n, before=True))
    return [tuple(map(tuple, oneq_layers)), list(twoq_layers)]


def _compose_1q_with_pauli(layer, pauli: PauliString, n, before: bool):
    group = enumerate_clifford_group(1)
    idx = _group_index(1)
    by_qubit = {qs[0]: lbl for lbl, qs in layer}
    out = []
    for q in range(n):
        lbl = by_qubit.get(q, clifford_label(1, _identity_index()))
        base = group[int(lbl.split("_")[1])].tableau if lbl.startswith("c1_") else gate_tableau(lbl)
        letter = pauli.letter(q)
        ptab = gate_tableau(letter) if letter != "I" else None
        if ptab is None:
            tab = base
        else:
            tab = ptab.then(base) if before else base.then(ptab)
        out.append((clifford_label(1, idx[tab.key()]), (q,)))
    return tuple(out)


@lru_cache(maxsize=None)
def _identity_index() -> int:
    return _group_index(1)[CliffordTableau.identity(1).key()]


def adjusted_success_probability(counts: dict, target: str, n: int) -> float:
    """Hamming-weighted success metric from an outcome histogram."""
    shots = sum(counts.values())
    hk = np.zeros(n + 1)
    for bstr, c in counts.items():
        k = sum(1 for a, b in zip(bstr, target) if a != b)
        hk[k] += c / shots
    weights = (-0.5) ** np.arange(n + 1)
    return float(4**n / (4**n - 1) * np.dot(weights, hk) - 1 / (4**n - 1))


def mrb(model: GateSetModel, design: RBDesign, sampler: LayerSampler, backend="fast"):
    """Mirror RB over the sampler's layer distribution.

    The randomized compiling in :func:`mirror_circuit` preserves the exact
    ideal action, so every mirror circuit's target string is all zeros.
    """
    n = sampler.n
    gen = rng(design.seed)
    target = "0" * n
    values = {m: [] for m in design.depths}
    for m in design.depths:
        for _ in range(design.circuits_per_depth):
            circ = mirror_circuit(sampler, m, gen)
            sub = int(gen.integers(2**62))
            if backend == "fast":
                rec = pauli_fastpath_sample(model, circ, design.shots, sub, ideal_bits=np.zeros(n, dtype=np.uint8))
            else:
                rec = sample_counts(model, circ, design.shots, sub)
            values[m].append(adjusted_success_probability(rec.counts, target, n))
    data = DecayDataset(list(design.depths), values, "mrb")
    fit = fit_decay(data.depths, data.means(), data.stderrs(), fix_b=0.0)
    return {"data": data, "fit": fit, "f": fit.f, "f_err": fit.f_err}


# -- cross-entropy benchmarking and speckle purity -----------------------------------

def haar_su4_layer_sampler(n: int, seed):
    """Layer generator: Haar-random SU(4) on a random disjoint pairing."""
    state = {"k": 0}
    gen = rng(seed)

    def sample():
        from .linalg import haar_random_unitary

        perm = list(gen.permutation(n))
        layer = []
        defs = {}
        for i in range(0, n - 1, 2):
            a, b = perm[i], perm[i + 1]
            label = f"su4_{state['k']}"
            state["k"] += 1
            defs[label] = haar_random_unitary(4, gen)
            layer.append((label, (min(a, b), max(a, b))))
        return tuple(layer), defs

    return sample


def xeb(model: GateSetModel, design: RBDesign, layer_sample, min_depth: int = 0):
    """XEB over scrambling layers: per-depth linear-fit estimator of F_XEB.

    ``layer_sample()`` must return (layer, gate_defs).  Depths below the
    user-declared scrambling depth ``min_depth`` are refused; the choice is
    recorded in the result.
    """
    n = model.n
    if any(m < min_depth for m in design.depths):
        raise ValueError(f"XEB depths below the declared scrambling depth {min_depth}")
    gen = rng(design.seed)
    d = 2**n
    per_depth_f = []
    bitstring_probs = {m: [] for m in design.depths}
    for m in design.depths:
        xs, ys = [], []
        for _ in range(design.circuits_per_depth):
            layers = []
            defs = {}
            for _i in range(m):
                layer, dd = layer_sample()
                layers.append(layer)
                defs.update(dd)
            circ = Circuit(n, tuple(layers), defs)
            ideal = ideal_probabilities(circ, model)
            rec = sample_counts(model, circ, design.shots, int(gen.integers(2**62)))
            pmap = ideal.as_dict()
            h_pq = d / design.shots * sum(pmap[b] * c for b, c in rec.counts.items()) - 1
            h_pp = d * float(np.sum(ideal.probs**2)) - 1
            xs.append(h_pp)
            ys.append(h_pq)
            emp = np.zeros(d)
            for b, c in rec.counts.items():
                emp[int(b, 2)] = c / design.shots
            bitstring_probs[m].append(emp)
        xs, ys = np.asarray(xs), np.asarray(ys)
        per_depth_f.append(float(xs @ ys / (xs @ xs)))
    fit = fit_decay(design.depths, per_depth_f, np.full(len(design.depths), 0.03), fix_b=0.0)
    return {
        "per_depth_f_xeb": per_depth_f,
        "fit": fit,
        "f": fit.f,
        "f_err": fit.f_err,
        "min_depth": min_depth,
        "bitstring_probs": bitstring_probs,
    }


def porter_thomas_variance(d: int) -> float:
    return (d - 1) / (d**2 * (d + 1))


def speckle_purity(bitstring_probs: dict, shots: int, d: int):
    """Purity decay from the variance of the bit-string probability speckle.

    ``bitstring_probs[m]`` is a list of empirical probability vectors (one
    per random circuit).  The per-cell multinomial sampling variance is
    subtracted before fitting ``var(m) = sigma_PT**2 * eps**(2m)``.
    """
    depths = sorted(bitstring_probs)
    variances = []
    for m in depths:
        cells = np.concatenate([np.asarray(v) for v in bitstring_probs[m]])
        var = cells.var(ddof=1)
        shot_var = float(np.mean(cells * (1 - cells))) / (shots - 1)
        variances.append(max(var - shot_var, 1e-12))
    sig_pt = porter_thomas_variance(d)
    ys = np.sqrt(np.asarray(variances) / sig_pt)  # eps**m
    fit = fit_decay(depths, ys, np.full(len(depths), 0.05), fix_b=0.0)
    eps = fit.f
    return {"variances": dict(zip(depths, variances)), "eps": eps, "u": eps**2, "fit": fit}
