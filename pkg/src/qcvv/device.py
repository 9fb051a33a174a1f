"""Gate-set device model and circuit-execution backends.

Three backends cover complementary regimes:

* ``circuit_probabilities`` / ``sample_counts``: dense propagation of the
  state's normalized-Pauli superket (width <= 6);
* ``statevector_run``: pure-state amplitudes for unitary circuits
  (width <= 14), used for ideal XEB/QV probabilities;
* ``pauli_fastpath_sample`` / ``pauli_fastpath_signs``: stochastic fault
  propagation through Clifford circuits for models whose noise is
  stochastic-Pauli, vectorized over shots (tens of qubits).

Noise attaches to gate labels: a model resolves each label to a noisy
channel, composed as post-gate error by default (``G = E Gbar``), pre-gate
behind a flag.  Idle qubits in a layer receive the model's explicit idle
channel (default: identity).  Barriers between layers are hard; nothing is
ever compiled across them.

Readout confusion matrices are column-stochastic, ``C[i, j] = p(read i |
true j)``, applied after the ideal POVM.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channels import Channel
from .cliffords import (
    GATE_UNITARIES,
    CliffordTableau,
    clifford_gate_factory,
    gate_tableau,
    tableau_from_unitary,
)
from .linalg import child_seeds, kron_all, rng
from .paulis import PauliString


@dataclass(frozen=True)
class Circuit:
    """Ordered layers of (gate label, qubit tuple) with disjoint supports.

    ``gate_defs`` carries inline unitaries for ad-hoc labels (e.g. sampled
    SU(4) gates); it is excluded from equality so circuits compare by
    structure.
    """

    width: int
    layers: tuple
    gate_defs: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        norm = []
        for layer in self.layers:
            layer = tuple((str(lbl), tuple(int(q) for q in qs)) for lbl, qs in layer)
            used = [q for _, qs in layer for q in qs]
            if len(used) != len(set(used)):
                raise ValueError("overlapping gate supports within a layer")
            if used and (min(used) < 0 or max(used) >= self.width):
                raise ValueError("qubit index out of range")
            norm.append(layer)
        object.__setattr__(self, "layers", tuple(norm))

    @property
    def depth(self) -> int:
        return len(self.layers)

    def then(self, other: "Circuit") -> "Circuit":
        defs = dict(self.gate_defs)
        defs.update(other.gate_defs)
        return Circuit(max(self.width, other.width), self.layers + other.layers, defs)

    def to_json(self) -> str:
        return json.dumps(
            {"width": self.width, "layers": [[[lbl, list(qs)] for lbl, qs in layer] for layer in self.layers]},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        payload = json.loads(text)
        layers = tuple(tuple((lbl, tuple(qs)) for lbl, qs in layer) for layer in payload["layers"])
        return cls(payload["width"], layers)


@dataclass(frozen=True)
class ShotRecord:
    circuit_id: str
    counts: dict
    shots: int
    seed: int
    timestamp_index: int = 0

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to shots")

    def to_json(self) -> str:
        return json.dumps(
            {
                "circuit_id": self.circuit_id,
                "counts": dict(sorted(self.counts.items())),
                "shots": self.shots,
                "seed": self.seed,
                "timestamp_index": self.timestamp_index,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ShotRecord":
        return cls(**json.loads(text))


class GateSetModel:
    """Native preparation, labeled gate channels, POVM, optional confusion.

    ``gates`` maps label -> (Channel, arity) for explicitly modeled gates.
    Labels absent from the dict resolve through ``gate_factory`` (default:
    the enumerated-Clifford ``c1_<i>``/``c2_<i>`` factory), then a circuit's
    inline ``gate_defs``, then the builtin Clifford names; in the fallback
    cases ``noise_rule(label, arity)`` supplies the error channel attached
    to the ideal unitary.
    """

    def __init__(
        self,
        n: int,
        gates: dict = None,
        noise_rule=None,
        gate_factory=None,
        confusion: dict = None,
        idle: Channel = None,
        pre_gate_noise: bool = False,
        preparation: np.ndarray = None,
    ):
        self.n = n
        self.gates = dict(gates or {})
        self.noise_rule = noise_rule
        self.gate_factory = clifford_gate_factory if gate_factory is None else gate_factory
        self.confusion = {}
        self.idle = idle
        self.pre_gate_noise = pre_gate_noise
        self._resolved = {}
        self._prep = None if preparation is None else np.asarray(preparation, dtype=float).reshape(-1)
        self._effect_transform = None
        for q, c in (confusion or {}).items():
            c = np.asarray(c, dtype=float)
            if c.shape != (2, 2) or np.any(np.abs(c.sum(axis=0) - 1) > 1e-9):
                raise ValueError(f"confusion matrix for qubit {q} must be 2x2 column-stochastic")
            self.confusion[int(q)] = c

    # -- resolution --------------------------------------------------------
    def _attach_noise(self, ideal: Channel, label: str, arity: int) -> Channel:
        noise = self.noise_rule(label, arity) if self.noise_rule else None
        if noise is None:
            return ideal
        return ideal.compose(noise) if self.pre_gate_noise else noise.compose(ideal)

    def resolve(self, label: str, arity: int, gate_defs: dict = None) -> Channel:
        key = (label, arity)
        if key in self._resolved:
            return self._resolved[key]
        adhoc = False
        if label in self.gates:
            ch, ar = self.gates[label]
            if ar != arity:
                raise ValueError(f"gate {label!r} has arity {ar}, used on {arity} qubits")
        else:
            made = self.gate_factory(label) if self.gate_factory else None
            if made is not None:
                ch = made if isinstance(made, Channel) else Channel.from_unitary(made)
                ch = self._attach_noise(ch, label, arity)
            elif gate_defs and label in gate_defs:
                ch = self._attach_noise(Channel.from_unitary(gate_defs[label]), label, arity)
                adhoc = True
            elif label in GATE_UNITARIES:
                ch = self._attach_noise(Channel.from_unitary(GATE_UNITARIES[label]), label, arity)
            else:
                raise KeyError(f"unknown gate label {label!r}")
        if ch.dim != 2**arity:
            raise ValueError(f"gate {label!r} dimension does not match its support")
        if not adhoc:
            self._resolved[key] = ch
        return ch

    def ideal_unitary(self, label: str, gate_defs: dict = None) -> np.ndarray:
        if gate_defs and label in gate_defs:
            return np.asarray(gate_defs[label], dtype=complex)
        if label in self.gates and self.gates[label][0].unitary is not None:
            return self.gates[label][0].unitary
        if label in GATE_UNITARIES:
            return GATE_UNITARIES[label]
        if self.gate_factory is not None:
            made = self.gate_factory(label)
            if made is not None:
                u = made.unitary if isinstance(made, Channel) else np.asarray(made, dtype=complex)
                if u is not None:
                    return u
        raise KeyError(f"gate {label!r} has no known unitary")

    def error_channel(self, label: str, arity: int, gate_defs: dict = None) -> Channel:
        """The gate's error channel relative to its ideal unitary."""
        noisy = self.resolve(label, arity, gate_defs)
        ideal_ptm = Channel.from_unitary(self.ideal_unitary(label, gate_defs)).ptm
        if self.pre_gate_noise:
            return Channel(ideal_ptm.T @ noisy.ptm)
        return Channel(noisy.ptm @ ideal_ptm.T)

    # -- variants ----------------------------------------------------------
    def replace(self, **kwargs) -> "GateSetModel":
        base = dict(
            n=self.n,
            gates=self.gates,
            noise_rule=self.noise_rule,
            gate_factory=self.gate_factory,
            confusion=self.confusion,
            idle=self.idle,
            pre_gate_noise=self.pre_gate_noise,
            preparation=self._prep,
        )
        base.update(kwargs)
        return GateSetModel(**base)

    def with_confusion(self, confusion: dict) -> "GateSetModel":
        return self.replace(confusion=confusion)


def ideal_model(n: int) -> GateSetModel:
    return GateSetModel(n)


def noisy_model(
    n: int, noise_rule, confusion=None, idle=None, pre_gate_noise=False, gate_factory=None
) -> GateSetModel:
    """Model whose every gate resolves to noise attached to its ideal unitary."""
    return GateSetModel(
        n,
        noise_rule=noise_rule,
        confusion=confusion,
        idle=idle,
        pre_gate_noise=pre_gate_noise,
        gate_factory=gate_factory,
    )


# -- dense superket backend ---------------------------------------------------

_PREP0 = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2)  # |0><0| in normalized Paulis
_MEAS = np.array([[1.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, -1.0]]) / np.sqrt(2)

DENSE_WIDTH_CAP = 6
STATEVECTOR_WIDTH_CAP = 14


def _apply_local_ptm(state: np.ndarray, ptm: np.ndarray, qubits) -> np.ndarray:
    k = len(qubits)
    op = ptm.reshape((4,) * (2 * k))
    state = np.tensordot(op, state, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(state, list(range(k)), list(qubits))


def _layer_apply(model: GateSetModel, state: np.ndarray, layer, gate_defs) -> np.ndarray:
    busy = set()
    for label, qubits in layer:
        ch = model.resolve(label, len(qubits), gate_defs)
        state = _apply_local_ptm(state, ch.ptm, qubits)
        busy.update(qubits)
    if model.idle is not None:
        for q in range(model.n):
            if q not in busy:
                state = _apply_local_ptm(state, model.idle.ptm, (q,))
    return state


def _initial_state(model: GateSetModel) -> np.ndarray:
    if model._prep is not None:
        return model._prep.reshape((4,) * model.n).copy()
    return kron_all([_PREP0.reshape(1, -1)] * model.n).real.reshape((4,) * model.n)


def _effect_rows(n: int, confusion: dict) -> np.ndarray:
    """Rows: normalized-Pauli superbras of the 2**n computational effects."""
    out = np.ones((1, 1))
    for q in range(n):
        m = _MEAS if q not in confusion else confusion[q] @ _MEAS
        out = np.kron(out, m)
    return out


def circuit_probabilities(model: GateSetModel, circuit: Circuit):
    """Outcome distribution over bit strings from the dense PTM backend."""
    if circuit.width != model.n:
        raise ValueError("circuit width does not match the model")
    if model.n > DENSE_WIDTH_CAP:
        raise ValueError(f"dense backend capped at width {DENSE_WIDTH_CAP}")
    state = _initial_state(model)
    for layer in circuit.layers:
        state = _layer_apply(model, state, layer, circuit.gate_defs)
    flat = state.reshape(-1)
    if model._effect_transform is not None:
        flat = model._effect_transform @ flat
    probs = _effect_rows(model.n, model.confusion) @ flat
    total = probs.sum()
    if abs(total - 1.0) > 1e-7:
        raise ValueError(f"distribution normalizes to {total}; model is not TP")
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    from .metrics import ProbDist

    labels = [format(i, f"0{model.n}b") for i in range(2**model.n)]
    return ProbDist(labels, probs)


def sample_counts(model: GateSetModel, circuit: Circuit, shots: int, seed, timestamp_index=0) -> ShotRecord:
    """Multinomial draw from the dense backend's distribution."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    dist = circuit_probabilities(model, circuit)
    gen = rng(seed)
    draws = gen.multinomial(shots, dist.probs)
    counts = {lbl: int(c) for lbl, c in zip(dist.outcomes, draws) if c}
    seed_val = int(seed) if not isinstance(seed, np.random.Generator) else -1
    return ShotRecord(circuit.to_json(), counts, shots, seed_val, timestamp_index)


def sample_counts_drifting(model_at, circuit: Circuit, shots: int, seed, segments: int = 16) -> ShotRecord:
    """Drift fixture: ``model_at(t)`` gives the model at scaled time t in [0, 1].

    Shots are split into ``segments`` equal batches along the schedule; this
    is a test harness for rastering and model-violation studies, not a
    physics claim.
    """
    seeds = child_seeds(seed, segments)
    per = [shots // segments] * segments
    for i in range(shots - sum(per)):
        per[i] += 1
    counts = {}
    for i, (s, n_i) in enumerate(zip(seeds, per)):
        if n_i == 0:
            continue
        rec = sample_counts(model_at(i / max(segments - 1, 1)), circuit, n_i, s)
        for k, v in rec.counts.items():
            counts[k] = counts.get(k, 0) + v
    return ShotRecord(circuit.to_json(), counts, shots, seed)


# -- statevector backend ------------------------------------------------------

def statevector_run(circuit: Circuit, model: GateSetModel = None) -> np.ndarray:
    """Amplitudes of a unitary circuit applied to |0...0>."""
    n = circuit.width
    if n > STATEVECTOR_WIDTH_CAP:
        raise ValueError(f"statevector backend capped at width {STATEVECTOR_WIDTH_CAP}")
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for layer in circuit.layers:
        for label, qubits in layer:
            if model is not None:
                u = model.ideal_unitary(label, circuit.gate_defs)
            elif label in circuit.gate_defs:
                u = np.asarray(circuit.gate_defs[label], dtype=complex)
            elif label in GATE_UNITARIES:
                u = GATE_UNITARIES[label]
            else:
                raise KeyError(f"unknown gate label {label!r}")
            k = len(qubits)
            op = u.reshape((2,) * (2 * k))
            psi = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), list(qubits)))
            psi = np.moveaxis(psi, list(range(k)), list(qubits))
    return psi.reshape(-1)


def ideal_probabilities(circuit: Circuit, model: GateSetModel = None):
    amps = statevector_run(circuit, model)
    from .metrics import ProbDist

    labels = [format(i, f"0{circuit.width}b") for i in range(2**circuit.width)]
    p = np.abs(amps) ** 2
    return ProbDist(labels, p / p.sum())


# -- stochastic-Pauli fast path ------------------------------------------------

class _FastPathProgram:
    """Preprocessed circuit: per layer, the gate list plus one sampled fault
    distribution per noisy gate (drawn from the gate's *error* channel)."""

    def __init__(self, model: GateSetModel, circuit: Circuit):
        if circuit.width != model.n:
            raise ValueError("circuit width does not match the model")
        self.n = model.n
        self.model = model
        self.circuit = circuit
        self.layers = []
        if not hasattr(model, "_noise_dist_cache"):
            model._noise_dist_cache = {}
        cache = model._noise_dist_cache
        idle_dist = None
        if model.idle is not None:
            if "idle" not in cache:
                cache["idle"] = _noise_dist(model.idle.ptm, "idle")
            idle_dist = cache["idle"]
        for layer in circuit.layers:
            gate_ops = []
            noise_ops = []
            busy = set()
            for label, qubits in layer:
                key = (label, len(qubits))
                adhoc = label in circuit.gate_defs
                if adhoc or key not in cache:
                    err = model.error_channel(label, len(qubits), circuit.gate_defs)
                    dist = _noise_dist(err.ptm, label)
                    if not adhoc:
                        cache[key] = dist
                else:
                    dist = cache[key]
                gate_ops.append((label, qubits))
                if dist is not None:
                    noise_ops.append((qubits, dist))
                busy.update(qubits)
            if idle_dist is not None:
                for q in range(model.n):
                    if q not in busy:
                        noise_ops.append(((q,), idle_dist))
            self.layers.append((gate_ops, noise_ops, model.pre_gate_noise))

    def ideal_bits(self):
        return ideal_outcome_bits(self.model, self.circuit)


def ideal_outcome_bits(model: GateSetModel, circuit: Circuit):
    """Definite ideal outcome bits of a Clifford circuit on |0...0>, or None.

    The output state's stabilizer generators are the forward images of the
    Z_q; the outcome is definite iff every image is Z-type, and the bits
    follow by solving for each +-Z_q in the group over GF(2).
    """
    n = model.n
    imgs = [propagate_pauli(model, circuit, PauliString(n, 0, 1 << q, 0)) for q in range(n)]
    if any(img.xbits for img in imgs):
        return None
    bits = np.zeros(n, dtype=np.uint8)
    # Gaussian elimination over GF(2) with pivot tracking; the member mask
    # records which images multiply into each reduced row
    work = [(img.zbits, 1 << i) for i, img in enumerate(imgs)]
    pivots = []
    for col in range(n):
        pidx = None
        for i, (zb, _) in enumerate(work):
            if (zb >> col) & 1 and all(p != i for p, _ in pivots):
                pidx = i
                break
        if pidx is None:
            return None
        pivots.append((pidx, col))
        pz, pm = work[pidx]
        for i in range(len(work)):
            if i != pidx and (work[i][0] >> col) & 1:
                work[i] = (work[i][0] ^ pz, work[i][1] ^ pm)
    for pidx, col in pivots:
        zb, mask = work[pidx]
        if zb != (1 << col):
            return None
        acc = PauliString.identity(n)
        for i in range(n):
            if (mask >> i) & 1:
                acc = acc * imgs[i]
        sign = acc.sign
        if abs(sign.imag) > 1e-12:
            return None
        bits[col] = 1 if sign.real < 0 else 0
    return bits


def propagate_pauli(model: GateSetModel, circuit: Circuit, p: PauliString) -> PauliString:
    """Conjugate a Pauli through a Clifford circuit's ideal action, with sign.

    Cost is O(depth * gates); uses per-gate lookup tables, so it stays cheap
    at large width.
    """
    x, z, k = p.xbits, p.zbits, p.phase
    for layer in circuit.layers:
        for label, qubits in layer:
            codes, phases = _conj_table(model, label, qubits, circuit.gate_defs)
            c = 0
            for i, q in enumerate(qubits):
                c |= (((x >> q) & 1) << (2 * i + 1)) | (((z >> q) & 1) << (2 * i))
            k = (k + int(phases[c])) % 4
            c2 = int(codes[c])
            for i, q in enumerate(qubits):
                x = (x & ~(1 << q)) | (((c2 >> (2 * i + 1)) & 1) << q)
                z = (z & ~(1 << q)) | (((c2 >> (2 * i)) & 1) << q)
    return PauliString(model.n, x, z, k)


_TAB_CACHE = {}


def _tableau_for(u: np.ndarray, label: str) -> CliffordTableau:
    if label in GATE_UNITARIES:
        return gate_tableau(label)
    key = (label, u.tobytes())
    if key not in _TAB_CACHE:
        _TAB_CACHE[key] = tableau_from_unitary(u)
    return _TAB_CACHE[key]


def _noise_dist(err_ptm: np.ndarray, label: str):
    """(cdf, x codes, z codes) over local Pauli faults of an error channel."""
    diag = np.diag(err_ptm)
    if not np.allclose(err_ptm - np.diag(diag), 0, atol=1e-8):
        raise ValueError(f"noise on gate {label!r} is not stochastic Pauli")
    from .cycles import walsh_hadamard

    probs = walsh_hadamard(diag, "eigenvalues-to-rates")
    if probs.min() < -1e-9:
        raise ValueError(f"gate {label!r} diagonal is not a Pauli channel")
    probs = np.clip(probs, 0, None)
    probs /= probs.sum()
    if probs[0] > 1 - 1e-15:
        return None
    k = (probs.size.bit_length() - 1) // 2
    xs = np.zeros(probs.size, dtype=np.uint8)
    zs = np.zeros(probs.size, dtype=np.uint8)
    # base-4 index, leftmost qubit most significant; bit i of the codes is
    # the i-th qubit of the local support
    for idx in range(probs.size):
        rem = idx
        for i in range(k - 1, -1, -1):
            axis = rem % 4
            rem //= 4
            x, z = ((0, 0), (1, 0), (1, 1), (0, 1))[axis]
            xs[idx] |= x << i
            zs[idx] |= z << i
    return np.cumsum(probs), xs, zs


_CONJ_CACHE = {}


def _conj_table(model: GateSetModel, label: str, qubits, gate_defs):
    """(image codes, phase exponents) of local-Pauli conjugation by a gate."""
    arity = len(qubits)
    if label in GATE_UNITARIES:
        key = (label, arity)
        u = None
    else:
        u = model.ideal_unitary(label, gate_defs)
        key = (label, arity, u.tobytes())
    if key in _CONJ_CACHE:
        return _CONJ_CACHE[key]
    tab = _tableau_for(GATE_UNITARIES[label] if u is None else u, label)
    size = 4**arity
    codes = np.zeros(size, dtype=np.int64)
    phases = np.zeros(size, dtype=np.int64)
    for code in range(size):
        x = z = 0
        for i in range(arity):
            x |= ((code >> (2 * i + 1)) & 1) << i
            z |= ((code >> (2 * i)) & 1) << i
        img = tab.conjugate(PauliString(arity, x, z, 0))
        c = 0
        for i in range(arity):
            c |= ((img.xbits >> i) & 1) << (2 * i + 1)
            c |= ((img.zbits >> i) & 1) << (2 * i)
        codes[code] = c
        phases[code] = img.phase
    _CONJ_CACHE[key] = (codes, phases)
    return _CONJ_CACHE[key]


def _inject_faults(fx, fz, qubits, dist, gen):
    cdf, xs, zs = dist
    shots = fx.shape[0]
    idx = np.minimum(np.searchsorted(cdf, gen.random(shots), side="right"), len(cdf) - 1)
    for i, q in enumerate(qubits):
        fx[:, q] ^= (xs[idx] >> i) & 1
        fz[:, q] ^= (zs[idx] >> i) & 1


def _propagate_faults(model: GateSetModel, program: _FastPathProgram, shots: int, gen):
    n = program.n
    fx = np.zeros((shots, n), dtype=np.uint8)
    fz = np.zeros((shots, n), dtype=np.uint8)
    gate_defs = program.circuit.gate_defs
    for gate_ops, noise_ops, pre in program.layers:
        if pre:
            for qubits, dist in noise_ops:
                _inject_faults(fx, fz, qubits, dist, gen)
        for label, qubits in gate_ops:
            table, _ = _conj_table(model, label, qubits, gate_defs)
            code = np.zeros(shots, dtype=np.int64)
            for i, q in enumerate(qubits):
                code |= (fx[:, q].astype(np.int64) << (2 * i + 1)) | (
                    fz[:, q].astype(np.int64) << (2 * i)
                )
            code = table[code]
            for i, q in enumerate(qubits):
                fx[:, q] = (code >> (2 * i + 1)) & 1
                fz[:, q] = (code >> (2 * i)) & 1
        if not pre:
            for qubits, dist in noise_ops:
                _inject_faults(fx, fz, qubits, dist, gen)
    return fx, fz


def pauli_fastpath_sample(
    model: GateSetModel, circuit: Circuit, shots: int, seed, ideal_bits=None
) -> ShotRecord:
    """Fault-propagation sampler for definite-outcome Clifford circuits.

    Requires every gate Clifford, every error channel stochastic Pauli,
    preparation |0...0>, and a circuit whose ideal action fixes the
    computational outcome (mirror/motion-reversal structure).  The marginal
    outcome distribution matches the dense backend's.  Callers that know
    the ideal outcome (e.g. mirror generators) may pass ``ideal_bits`` to
    skip its derivation.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    program = _FastPathProgram(model, circuit)
    bits0 = np.asarray(ideal_bits, dtype=np.uint8) if ideal_bits is not None else program.ideal_bits()
    if bits0 is None:
        raise ValueError("circuit outcome is not definite; use pauli_fastpath_signs")
    gen = rng(seed)
    fx, _ = _propagate_faults(model, program, shots, gen)
    bits = bits0[None, :] ^ fx
    for q in range(model.n):
        if q in model.confusion:
            c = model.confusion[q]
            pflip = np.where(bits[:, q] == 1, c[0, 1], c[1, 0])
            bits[:, q] ^= (gen.random(shots) < pflip).astype(np.uint8)
    ints = np.zeros(shots, dtype=np.int64)
    for q in range(model.n):
        ints = (ints << 1) | bits[:, q]
    labels, cts = np.unique(ints, return_counts=True)
    counts = {format(int(v), f"0{model.n}b"): int(c) for v, c in zip(labels, cts)}
    seed_val = int(seed) if not isinstance(seed, np.random.Generator) else -1
    return ShotRecord(circuit.to_json(), counts, shots, seed_val)


def pauli_fastpath_signs(
    model: GateSetModel, circuit: Circuit, measured: PauliString, shots: int, seed, ideal_sign: int = 1
) -> np.ndarray:
    """Per-shot +/-1 parity samples of a Z-type Pauli after a Clifford circuit.

    The caller supplies the measured Pauli (already rotated to Z-type by the
    circuit's final layer) and its ideal eigenvalue ``ideal_sign`` on the
    noiseless output state; returned samples are absolute measured parities,
    matching what the dense backend's counts would give.  Readout confusion
    is applied as a symmetric flip at the mean of the two error rates.
    """
    if measured.xbits != 0:
        raise ValueError("measured Pauli must be Z-type")
    program = _FastPathProgram(model, circuit)
    gen = rng(seed)
    fx, _ = _propagate_faults(model, program, shots, gen)
    signs = np.full(shots, ideal_sign, dtype=np.int8)
    for q in range(model.n):
        if not (measured.zbits >> q) & 1:
            continue
        signs *= 1 - 2 * fx[:, q].astype(np.int8)
        if q in model.confusion:
            c = model.confusion[q]
            pflip = (c[1, 0] + c[0, 1]) / 2
            signs *= np.where(gen.random(shots) < pflip, -1, 1).astype(np.int8)
    return signs


# -- gauge transformations -------------------------------------------------------

def apply_gauge(model: GateSetModel, m: np.ndarray) -> GateSetModel:
    """Similarity-transform a full-width model by an invertible PTM-basis matrix.

    Gates map to ``M G M^-1``, the preparation to ``M |rho>>`` and effects to
    ``<<E| M^-1``; all circuit probabilities are unchanged.  Only models
    whose explicit gates span the full register are supported (local gates
    would need a tensor-product gauge).
    """
    m = np.asarray(m, dtype=float)
    d2 = 4**model.n
    if m.shape != (d2, d2):
        raise ValueError("gauge matrix must be d**2 x d**2 for the full register")
    try:
        minv = np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise ValueError("gauge matrix is singular") from exc
    gates = {}
    for label, (ch, ar) in model.gates.items():
        if ar != model.n:
            raise ValueError("gauge transforms require full-width gates")
        gates[label] = (Channel(m @ ch.ptm @ minv), ar)
    if model.noise_rule is not None:
        raise ValueError("gauge transforms require fully explicit gate dictionaries")
    prep = _initial_state(model).reshape(-1)
    out = GateSetModel(model.n, gates=gates, confusion=model.confusion, preparation=m @ prep)
    out._effect_transform = minv
    return out
