"""Statevector simulation, Pauli-trajectory noise and the quantum-volume test.

Noise is injected before every entanglement gate: MQ layers of a compiled
circuit, or individual pair gates of the sequential two-qubit baseline
(which is represented as a compiled circuit whose MQ layers couple a single
pair each). Random numbers for a circuit depend only on its seed, never on
the error rate, so threshold bisection sees common random numbers.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .cartan import cartan_decompose
from .circuit_ir import (
    CircuitIR,
    CompiledCircuit,
    SingleQubitLayer,
    absorb_permutations,
    apply_pair,
    apply_permutation,
    apply_single,
    generate_qv_circuit,
)
from .linalg import H, S, dagger
from .mqlayer import MQLayer
from .noise import NoiseModel
from .optimizer import CompileOptions, compile_circuit

MAX_SIM_QUBITS = 14
NORM_ATOL = 1e-10
TQ_MODE = "sequentialTQ"
SIM_MODES = ("naive3L", "fused", "fused+optimized", TQ_MODE)
SHOT_CHUNK = 256


# ---------------------------------------------------------------------------
# Gate application


def zero_state(n: int) -> np.ndarray:
    if not 1 <= n <= MAX_SIM_QUBITS:
        raise ValueError(f"simulator supports 1..{MAX_SIM_QUBITS} qubits, got {n}")
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def apply_gate(psi: np.ndarray, gate, qubits: int | Sequence[int] | None = None) -> np.ndarray:
    """Apply a 2x2 gate, a 4x4 pair gate or an :class:`MQLayer` to a state.

    ``psi`` may be a single state or a batch of shape ``(batch, 2**n)``.
    """
    psi = np.asarray(psi, dtype=complex)
    single = psi.ndim == 1
    st = psi[None] if single else psi
    n = int(round(math.log2(st.shape[1])))
    if isinstance(gate, MQLayer):
        if gate.n_qubits != n:
            raise ValueError(f"MQ layer on {gate.n_qubits} qubits applied to {n}-qubit state")
        out = st * gate.phase_vector()[None, :]
    else:
        g = np.asarray(gate)
        qs = [qubits] if np.isscalar(qubits) else list(qubits or ())
        for q in qs:
            if not 0 <= q < n:
                raise IndexError(f"qubit {q} out of range for {n} qubits")
        if g.shape == (2, 2) and len(qs) == 1:
            out = apply_single(st, g, qs[0], n)
        elif g.shape == (4, 4) and len(qs) == 2 and qs[0] != qs[1]:
            out = apply_pair(st, g, qs[0], qs[1], n)
        else:
            raise ValueError(f"gate of shape {g.shape} does not match qubits {qs}")
    return out[0] if single else out


def _run(states: np.ndarray, cc: CompiledCircuit, hook=None) -> np.ndarray:
    n = cc.n_qubits
    for k, op in enumerate(cc.ops):
        if isinstance(op, MQLayer):
            if hook is not None:
                states = hook(states, k, op)
            states = states * op.phase_vector()[None, :]
        else:
            for q, g in op.gates.items():
                states = apply_single(states, g, q, n)
    if cc.output_permutation is not None:
        states = apply_permutation(states, cc.output_permutation, n)
    return states


def final_state(cc: CompiledCircuit) -> np.ndarray:
    return _run(zero_state(cc.n_qubits)[None], cc)[0]


def ideal_probabilities(cc: CompiledCircuit) -> np.ndarray:
    p = np.abs(final_state(cc)) ** 2
    return p / p.sum()


def heavy_set(probs: np.ndarray) -> np.ndarray:
    """Boolean mask of outcomes strictly above the median probability."""
    return probs > np.median(probs)


# ---------------------------------------------------------------------------
# Sequential two-qubit baseline

_K = S @ H


def sequential_tq_realization(c: CircuitIR) -> CompiledCircuit:
    """Every block becomes three single-pair ZZ gates dressed by Cartan locals."""
    c, sigma = absorb_permutations(c)
    n = c.n_qubits
    ops: list = []
    for layer in c.layers:
        for (a, b), g in zip(layer.pairs, layer.gates):
            f = cartan_decompose(g)
            key = (min(a, b), max(a, b))
            ops.append(SingleQubitLayer(n, {a: H @ f.pre_gates[0], b: H @ f.pre_gates[1]}))
            ops.append(MQLayer(n, {key: f.theta_xx}))
            k = dagger(_K) @ H
            ops.append(SingleQubitLayer(n, {a: k, b: k}))
            ops.append(MQLayer(n, {key: f.theta_yy}))
            ops.append(SingleQubitLayer(n, {a: _K, b: _K}))
            ops.append(MQLayer(n, {key: f.theta_zz}))
            ops.append(SingleQubitLayer(n, {a: f.post_gates[0], b: f.post_gates[1]}))
    perm = None if tuple(sigma) == tuple(range(n)) else tuple(sigma)
    return CompiledCircuit(n, tuple(ops), perm)


def realize(c: CircuitIR, mode: str, opts: CompileOptions | None = None) -> CompiledCircuit:
    """Compile ``c`` in one of :data:`SIM_MODES`."""
    if mode == TQ_MODE:
        return sequential_tq_realization(c)
    if mode not in SIM_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    return compile_circuit(c, replace(opts or CompileOptions(), mode=mode))[0]


def dephasing_events(cc: CompiledCircuit) -> int:
    """Number of (entanglement gate, participating qubit) injection sites."""
    return sum(len(layer.active_qubits()) for layer in cc.mq_layers)


# ---------------------------------------------------------------------------
# Trajectories


@lru_cache(maxsize=None)
def _bit_tables(n: int):
    idx = np.arange(2**n)
    flips, signs = [], []
    for q in range(n):
        m = 1 << (n - 1 - q)
        flips.append(idx ^ m)
        signs.append(1.0 - 2.0 * ((idx & m) != 0))
    return flips, signs


def _inject(states, probs, rng, noise_kind, n):
    """Sample and apply Pauli errors for one entanglement gate on every shot."""
    shots = states.shape[0]
    u = rng.random((shots, n))
    pick = rng.integers(0, 3, size=(shots, n))  # 0: X, 1: Y, 2: Z
    hit = u < probs[None, :]
    if not hit.any():
        return states
    flips, signs = _bit_tables(n)
    for q in np.flatnonzero(hit.any(axis=0)):
        rows = hit[:, q]
        if noise_kind == "dephasing":
            xs, zs = np.zeros(shots, bool), rows
        else:
            xs = rows & (pick[:, q] <= 1)
            zs = rows & (pick[:, q] >= 1)
        if xs.any():
            states[xs] = states[xs][:, flips[q]]
        if zs.any():
            states[zs] = states[zs] * signs[q][None, :]
    return states


def _layer_probs(cc: CompiledCircuit, noise: NoiseModel) -> dict[int, np.ndarray]:
    return {k: noise.probabilities(op) for k, op in enumerate(cc.ops) if isinstance(op, MQLayer)}


def sample_outcomes(cc: CompiledCircuit, noise: NoiseModel, shots: int, seed) -> np.ndarray:
    """Computational-basis outcomes of ``shots`` noisy trajectories."""
    if shots < 1:
        raise ValueError("shots must be positive")
    n = cc.n_qubits
    rng = np.random.default_rng(seed)
    if noise.kind == "none" or noise.p_tq == 0:
        cdf = np.cumsum(ideal_probabilities(cc))
        out = np.searchsorted(cdf, rng.random(shots) * cdf[-1], side="right")
        return np.minimum(out, 2**n - 1)
    probs = _layer_probs(cc, noise)
    res = []
    for start in range(0, shots, SHOT_CHUNK):
        m = min(SHOT_CHUNK, shots - start)
        st = np.repeat(zero_state(n)[None], m, axis=0)

        def hook(s, k, _op):
            return _inject(s, probs[k], rng, noise.kind, n)

        st = _run(st, cc, hook)
        p = np.abs(st) ** 2
        cdf = np.cumsum(p, axis=1)
        u = rng.random(m) * cdf[:, -1]
        o = (cdf < u[:, None]).sum(axis=1)
        res.append(np.minimum(o, 2**n - 1))
    return np.concatenate(res)


def heavy_output_probability(cc: CompiledCircuit, noise: NoiseModel | None = None, shots: int = 200, seed=0, heavy=None) -> float:
    """Fraction of sampled outcomes that lie in the ideal heavy set."""
    noise = noise or NoiseModel()
    if heavy is None:
        heavy = heavy_set(ideal_probabilities(cc))
    return float(heavy[sample_outcomes(cc, noise, shots, seed)].mean())


# ---------------------------------------------------------------------------
# Quantum-volume decision and threshold scan


def default_shots(n: int) -> int:
    return int(round(1e4 * max((n / 10) ** 4, 1.0)))


def resolution(n: int) -> float:
    return 1e-3 * min((10 / n) ** 2, 1.0)


@dataclass
class QVReport:
    n: int
    compile_mode: str
    noise_kind: str
    p_tq: float
    n_circuits: int
    shots_per_circuit: int
    shot_cap: int | None
    hops: list[float]
    mean_hop: float
    stderr: float
    passed: bool
    threshold: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> dict:
        d = self.to_dict()
        d.pop("hops")
        d.pop("threshold")
        return d


def decide(hops: Sequence[float]) -> tuple[float, float, bool]:
    """Mean HOP, its binomial standard error over circuits, and the 2-sigma verdict."""
    h = np.asarray(hops, dtype=float)
    mean = float(h.mean())
    se = math.sqrt(max(mean * (1 - mean), 0.0) / len(h))
    return mean, se, mean - 2 * se > 2 / 3


class QVHarness:
    """Fixed set of QV circuits, compiled once, evaluated at many error rates."""

    def __init__(
        self,
        n: int,
        compile_mode: str,
        n_circuits: int = 100,
        shots: int | None = None,
        shot_cap: int | None = 1000,
        seed: int = 0,
        opts: CompileOptions | None = None,
    ):
        if n > MAX_SIM_QUBITS:
            raise ValueError(f"QV simulation limited to {MAX_SIM_QUBITS} qubits")
        self.n, self.mode, self.seed = n, compile_mode, seed
        r = default_shots(n) if shots is None else shots
        self.shot_cap = shot_cap
        self.shots = min(r, shot_cap) if shot_cap else r
        self.circuit_seeds = [seed * 1_000_003 + k for k in range(n_circuits)]
        self.compiled = []
        self.heavy = []
        for cs in self.circuit_seeds:
            cc = realize(generate_qv_circuit(n, cs), compile_mode, opts)
            self.compiled.append(cc)
            self.heavy.append(heavy_set(ideal_probabilities(cc)))

    def report(self, noise: NoiseModel) -> QVReport:
        hops = [
            heavy_output_probability(cc, noise, self.shots, (cs, 7), hv)
            for cc, hv, cs in zip(self.compiled, self.heavy, self.circuit_seeds)
        ]
        mean, se, ok = decide(hops)
        return QVReport(self.n, self.mode, noise.kind, noise.p_tq, len(hops), self.shots, self.shot_cap, hops, mean, se, ok)

    def threshold(self, noise_kind: str, p_hi: float = 0.5, dp: float | None = None) -> tuple[float, list[QVReport]]:
        """Largest passing ``p_tq`` by bisection to resolution ``dp``."""
        dp = resolution(self.n) if dp is None else dp
        trail = [self.report(NoiseModel(noise_kind, 0.0))]
        if not trail[-1].passed:
            return 0.0, trail
        trail.append(self.report(NoiseModel(noise_kind, p_hi)))
        if trail[-1].passed:
            return p_hi, trail
        lo, hi = 0.0, p_hi
        while hi - lo > dp:
            mid = 0.5 * (lo + hi)
            trail.append(self.report(NoiseModel(noise_kind, mid)))
            if trail[-1].passed:
                lo = mid
            else:
                hi = mid
        return lo, trail


def qv_pass(n: int, compile_mode: str, noise: NoiseModel, n_circuits: int = 100, shots: int | None = None, shot_cap: int | None = 1000, seed: int = 0) -> QVReport:
    return QVHarness(n, compile_mode, n_circuits, shots, shot_cap, seed).report(noise)


def threshold_scan(n: int, compile_mode: str, noise_kind: str, n_circuits: int = 100, shots: int | None = None, shot_cap: int | None = 1000, seed: int = 0, p_hi: float = 0.5) -> float:
    h = QVHarness(n, compile_mode, n_circuits, shots, shot_cap, seed)
    return h.threshold(noise_kind, p_hi)[0]


def reports_to_csv(reports: Sequence[QVReport]) -> str:
    buf = io.StringIO()
    rows = [r.csv_row() for r in reports]
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()
