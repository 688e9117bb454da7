"""Compilation of layered SU(4) circuits into ZZ multi-qubit layers.

Three modes are provided:

* ``naive3L``: every block is Cartan-decomposed and each of its XX, YY, ZZ
  factors is a separate MQ layer (3L layers).
* ``fused``: blocks are LH-decomposed, their trailing single-qubit gates are
  pushed into the next layer and adjacent ZZ gates are fused (2L+1 layers).
* ``fused+optimized``: as ``fused``, with R_Y pairs inserted between layers
  and chosen to reduce the nuclear norm of the fused boundary layers.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .cartan import DecompositionError, cartan_decompose, l1_phases
from .circuit_ir import CircuitIR, CompiledCircuit, SingleQubitLayer, absorb_permutations
from .lhdecomp import LHFactors, lh_decompose, lh_phases_batch
from .linalg import H, I2, S, dagger, kron, ry, ry_batch
from .mqlayer import GAUGE, MQLayer, nuclear_norm, nuclear_norm_matrix
from .pullback import LHBareFactors, LHRHFactors, PullbackError, pullback_phases, split_lh, y_pullback

log = logging.getLogger(__name__)

MODES = ("naive3L", "fused", "fused+optimized")
# "nuc": exact boundary nuclear norm plus phase L1; "l1": phase L1 only.
OBJECTIVES = ("nuc", "l1")
HALF_PI = math.pi / 2


class CompileError(RuntimeError):
    """Decomposition failure with the layer, pair and stage where it happened."""

    def __init__(self, layer: int, pair, stage: str, cause: Exception):
        self.layer, self.pair, self.stage = layer, pair, stage
        super().__init__(f"layer {layer}, pair {pair}, stage {stage}: {cause}")


@dataclass(frozen=True)
class CompileOptions:
    mode: str = "fused+optimized"
    ry_grid_points: int = 24
    refine_tolerance: float = 1e-8
    sweeps: int = 2
    seed: int = 0
    objective: str = "l1"

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.ry_grid_points < 8:
            raise ValueError("ry_grid_points must be at least 8")
        if not self.refine_tolerance > 0:
            raise ValueError("refine_tolerance must be positive")
        if self.sweeps < 0:
            raise ValueError("sweeps must be non-negative")


@dataclass
class OptimizerReport:
    mode: str
    layer_nuc: list[float]
    total_nuc: float
    cartan_baseline_nuc: float
    ratio: float
    wall_time: float
    mq_count: int
    fell_back_to_fused: bool = False
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "mq_count": self.mq_count,
            "total_nuc": self.total_nuc,
            "cartan_baseline_nuc": self.cartan_baseline_nuc,
            "ratio": self.ratio,
            "layer_nuc": list(self.layer_nuc),
            "wall_time": self.wall_time,
            "fell_back_to_fused": self.fell_back_to_fused,
            "warnings": list(self.warnings),
        }


class _Emitter:
    """Collects single-qubit gates per qubit and flushes them before MQ layers."""

    def __init__(self, n: int):
        self.n = n
        self.ops: list = []
        self.pending: dict[int, np.ndarray] = {}

    def single(self, q: int, g: np.ndarray) -> None:
        self.pending[q] = g @ self.pending.get(q, I2)

    def _flush(self, qubits) -> None:
        gates = {q: self.pending.pop(q) for q in sorted(qubits) if q in self.pending}
        if gates:
            self.ops.append(SingleQubitLayer(self.n, gates))

    def mq(self, couplings: dict) -> None:
        layer = MQLayer(self.n, couplings)
        self._flush(layer.qubits())
        self.ops.append(layer)

    def finish(self, perm=None) -> CompiledCircuit:
        self._flush(list(self.pending))
        if perm is not None and tuple(perm) == tuple(range(self.n)):
            perm = None
        return CompiledCircuit(self.n, tuple(self.ops), None if perm is None else tuple(perm))


def _pair_key(p):
    a, b = p
    return (a, b) if a < b else (b, a)


def _add(d: dict, pair, t: float) -> None:
    k = _pair_key(pair)
    d[k] = d.get(k, 0.0) + float(t)


# ---------------------------------------------------------------------------
# Naive three-layer compilation

# exp(i t YY) = (K (x) K) exp(i t ZZ) (K (x) K)^dag with K Z K^dag = Y.
_K = S @ H


def compile_naive(c: CircuitIR) -> CompiledCircuit:
    """Three MQ layers per circuit layer, one per Cartan axis."""
    c, sigma = absorb_permutations(c)
    em = _Emitter(c.n_qubits)
    for li, layer in enumerate(c.layers):
        facs = []
        for pair, g in zip(layer.pairs, layer.gates):
            try:
                facs.append(cartan_decompose(g))
            except (DecompositionError, ValueError) as exc:
                raise CompileError(li, pair, "cartan", exc) from exc
        for (a, b), f in zip(layer.pairs, facs):
            em.single(a, H @ f.pre_gates[0])
            em.single(b, H @ f.pre_gates[1])
        em.mq({_pair_key(p): f.theta_xx for p, f in zip(layer.pairs, facs)})
        for a, b in layer.pairs:
            em.single(a, dagger(_K) @ H)
            em.single(b, dagger(_K) @ H)
        em.mq({_pair_key(p): f.theta_yy for p, f in zip(layer.pairs, facs)})
        for a, b in layer.pairs:
            em.single(a, _K)
            em.single(b, _K)
        em.mq({_pair_key(p): f.theta_zz for p, f in zip(layer.pairs, facs)})
        for (a, b), f in zip(layer.pairs, facs):
            em.single(a, f.post_gates[0])
            em.single(b, f.post_gates[1])
    return em.finish(sigma)


# ---------------------------------------------------------------------------
# Per-block R_Y optimisation


@dataclass
class BlockRYResult:
    """Outcome of :func:`optimize_block_ry`; unpacks as ``(y0, y1, factors)``."""

    y0: float
    y1: float
    factors: LHFactors
    l1: float
    cartan_l1: float
    bound_met: bool

    def __iter__(self):
        return iter((self.y0, self.y1, self.factors))


def _ry_pairs(y0: np.ndarray, y1: np.ndarray) -> np.ndarray:
    return np.einsum("nij,nkl->nikjl", ry_batch(y0), ry_batch(y1)).reshape(-1, 4, 4)


def _grid(points: int) -> np.ndarray:
    return np.linspace(-HALF_PI, HALF_PI, points, endpoint=False)


def optimize_block_ry(g: np.ndarray, opts: CompileOptions | None = None) -> BlockRYResult:
    """Find ``y0, y1`` minimizing the LH L1 of ``g (R_Y(y0) (x) R_Y(y1))``.

    Coarse grid over [-pi/2, pi/2)^2 followed by Nelder-Mead from the best
    cells. The target is the Cartan L1 of ``g``.
    """
    opts = opts or CompileOptions()
    g = np.asarray(g, dtype=complex)
    target = l1_phases(cartan_decompose(g))
    y = _grid(opts.ry_grid_points)
    y0, y1 = (a.ravel() for a in np.meshgrid(y, y, indexing="ij"))
    x, th = lh_phases_batch(g[None] @ _ry_pairs(y0, y1))
    vals = np.abs(x) + np.abs(th).sum(-1)

    def f(p):
        xx, tt = lh_phases_batch((g @ kron(ry(p[0]), ry(p[1])))[None])
        return float(abs(xx[0]) + np.abs(tt[0]).sum())

    best_p, best_v = np.array([y0[np.argmin(vals)], y1[np.argmin(vals)]]), float(vals.min())
    for j in np.argsort(vals, kind="stable")[:4]:
        r = minimize(
            f,
            [y0[j], y1[j]],
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxfev": 2000},
        )
        if r.fun < best_v:
            best_p, best_v = np.asarray(r.x), float(r.fun)
        if best_v <= target + opts.refine_tolerance:
            break
    lh = lh_decompose(g @ kron(ry(best_p[0]), ry(best_p[1])))
    l1 = lh.l1()
    met = l1 <= target + opts.refine_tolerance
    if not met:
        log.warning("R_Y optimisation missed the Cartan bound by %.3g", l1 - target)
    return BlockRYResult(float(best_p[0]), float(best_p[1]), lh, l1, target, met)


# ---------------------------------------------------------------------------
# Boundary objective for the inter-layer R_Y phases


class _Boundary:
    """Objective state for choosing the R_Y angles between layers l and l+1."""

    def __init__(self, n, cur, nxt_pairs, nxt_gates, carry, objective="nuc"):
        self.n = n
        self.objective = objective
        self.cur = cur  # list of (pair, A, bare)
        self.nxt_pairs = nxt_pairs
        self.var = np.zeros(n, dtype=bool)
        self.cur_of = {}
        for i, (pair, _, _) in enumerate(cur):
            for pos, q in enumerate(pair):
                self.var[q] = True
                self.cur_of[q] = (i, pos)
        base = []
        for q in range(n):
            base.append(carry[q] if q not in self.cur_of else None)
        for pair, a_gates, _ in cur:
            base[pair[0]], base[pair[1]] = a_gates
        # W_j = G_j (C_a (x) C_b); candidates right-multiply by R_Y(-phi) pairs.
        self.w = [g @ kron(base[a], base[b]) for (a, b), g in zip(nxt_pairs, nxt_gates)]
        self.phi = np.zeros(n)
        self.gt = np.array([bare.gamma for _, _, bare in cur])
        self.bt = np.array([bare.beta for _, _, bare in cur])
        x, th = lh_phases_batch(np.array(self.w)) if self.w else (np.zeros(0), np.zeros((0, 3)))
        self.al, self.nb, self.ng = x, th[:, 1], th[:, 0]
        self._components()

    def _components(self):
        parent = list(range(self.n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for pair, _, _ in self.cur:
            parent[find(pair[0])] = find(pair[1])
        for a, b in self.nxt_pairs:
            parent[find(a)] = find(b)
        self.comp_of = [find(q) for q in range(self.n)]

    def _comp_nuc(self, root, cur_vals: dict, nxt_vals: dict, k: int) -> np.ndarray:
        nodes = [q for q in range(self.n) if self.comp_of[q] == root]
        idx = {q: i for i, q in enumerate(nodes)}
        m = np.zeros((k, len(nodes), len(nodes)))
        for i, (pair, _, _) in enumerate(self.cur):
            if self.comp_of[pair[0]] != root:
                continue
            v = cur_vals.get(i, self.gt[i])
            a, b = idx[pair[0]], idx[pair[1]]
            m[:, a, b] += v / 2
            m[:, b, a] += v / 2
        for j, (p, q) in enumerate(self.nxt_pairs):
            if self.comp_of[p] != root:
                continue
            v = nxt_vals.get(j, self.al[j])
            a, b = idx[p], idx[q]
            m[:, a, b] += v / 2
            m[:, b, a] += v / 2
        return nuclear_norm_matrix(m)

    def evaluate(self, j: int, qs: list[int], cand: np.ndarray):
        """Partial objective for next-layer block ``j`` with angles ``cand`` on ``qs``."""
        k = cand.shape[0]
        phi = np.repeat(self.phi[None, :], k, axis=0)
        for col, q in enumerate(qs):
            phi[:, q] = cand[:, col]
        a, b = self.nxt_pairs[j]
        ra = np.where(self.var[a], -phi[:, a], 0.0)
        rb = np.where(self.var[b], -phi[:, b], 0.0)
        x, th = lh_phases_batch(self.w[j][None] @ _ry_pairs(ra, rb))
        touched = sorted({self.cur_of[q][0] for q in qs})
        cur_vals = {}
        cost = GAUGE * (np.abs(th[:, 1]) + np.abs(th[:, 0]))
        extra = {}
        for i in touched:
            (p0, p1), _, bare = self.cur[i]
            g_t, b_t = pullback_phases(bare.gamma, bare.beta, phi[:, p0], phi[:, p1])
            cur_vals[i] = g_t
            extra[i] = b_t
            cost = cost + GAUGE * np.abs(b_t)
            if self.objective == "l1":
                cost = cost + GAUGE * np.abs(g_t)
        if self.objective == "l1":
            cost = cost + GAUGE * np.abs(x)
        else:
            cost = cost + self._comp_nuc(self.comp_of[a], cur_vals, {j: x}, k)
        return cost, (x, th, cur_vals, extra)

    def commit(self, j, qs, values, aux):
        x, th, cur_vals, extra = aux
        for col, q in enumerate(qs):
            self.phi[q] = values[col]
        self.al[j], self.nb[j], self.ng[j] = x[0], th[0, 1], th[0, 0]
        for i in cur_vals:
            self.gt[i] = cur_vals[i][0]
            self.bt[i] = extra[i][0]


def _choose_phi(n, cur, nxt_pairs, nxt_gates, carry, opts: CompileOptions) -> np.ndarray:
    st = _Boundary(n, cur, nxt_pairs, nxt_gates, carry, opts.objective)
    grid = _grid(opts.ry_grid_points)
    for _ in range(opts.sweeps):
        for j, (a, b) in enumerate(nxt_pairs):
            qs = [q for q in (a, b) if st.var[q]]
            if not qs:
                continue
            now = st.phi[qs][None, :]
            base_cost, _ = st.evaluate(j, qs, now)
            if len(qs) == 2:
                g0, g1 = np.meshgrid(grid, grid, indexing="ij")
                cand = np.stack([g0.ravel(), g1.ravel()], axis=1)
            else:
                cand = grid[:, None]
            vals, _ = st.evaluate(j, qs, cand)
            start = cand[int(np.argmin(vals))]

            def f(p, j=j, qs=qs):
                return float(st.evaluate(j, qs, np.asarray(p)[None, :])[0][0])

            r = minimize(f, start, method="Nelder-Mead", options={"xatol": 1e-4, "fatol": 1e-7, "maxfev": 120})
            best = np.asarray(r.x) if r.fun < vals.min() else start
            cost, aux = st.evaluate(j, qs, best[None, :])
            if cost[0] < base_cost[0] - 1e-12:
                st.commit(j, qs, best, aux)
    return st.phi


# ---------------------------------------------------------------------------
# LH-based compilation (fused and optimized)


def _as_lhrh(bare: LHBareFactors) -> LHRHFactors:
    return LHRHFactors(bare.alpha, bare.gamma, bare.beta, (I2, I2), bare.b_gates, 0, 0, bare.pair)


def _split_layer(li, pairs, gates, carry, em, pre_rotate, opts, warnings):
    out = []
    for (a, b), g in zip(pairs, gates):
        u = g @ kron(carry[a], carry[b])
        carry[a] = carry[b] = I2
        try:
            if pre_rotate:
                res = optimize_block_ry(u, opts)
                if not res.bound_met:
                    warnings.append(f"layer {li} pair {(a, b)}: R_Y bound missed by {res.l1 - res.cartan_l1:.3g}")
                u = u @ kron(ry(res.y0), ry(res.y1))
                em.single(a, ry(-res.y0))
                em.single(b, ry(-res.y1))
            push, bare = split_lh(u, (a, b))
        except (DecompositionError, ValueError) as exc:
            raise CompileError(li, (a, b), "lh-split", exc) from exc
        out.append(((a, b), push, bare))
    return out


def _compile_lh(c: CircuitIR, opts: CompileOptions, optimize: bool):
    c, sigma = absorb_permutations(c)
    n, layers = c.n_qubits, c.layers
    em = _Emitter(n)
    warnings: list[str] = []
    carry = [I2] * n
    if not layers:
        return em.finish(sigma), warnings
    cur = _split_layer(0, layers[0].pairs, layers[0].gates, carry, em, optimize, opts, warnings)
    prev_gamma: dict = {}
    for li in range(len(layers)):
        last = li == len(layers) - 1
        if optimize and not last:
            nxt = layers[li + 1]
            phi = _choose_phi(n, cur, nxt.pairs, nxt.gates, carry, opts)
        else:
            phi = np.zeros(n)
        blocks = []
        for pair, push, bare in cur:
            try:
                blk = y_pullback(bare, phi[pair[0]], phi[pair[1]]) if optimize else _as_lhrh(bare)
            except PullbackError as exc:
                raise CompileError(li, pair, "y-pullback", exc) from exc
            blocks.append((pair, push, blk))
        boundary = dict(prev_gamma)
        for pair, _, blk in blocks:
            _add(boundary, pair, blk.alpha)
        em.mq(boundary)
        for (a, b), _, blk in blocks:
            b0, b1 = blk.b_absorbed()
            em.single(a, H @ b0)
            em.single(b, H @ b1)
        em.mq({_pair_key(p): blk.beta_tilde for p, _, blk in blocks})
        prev_gamma = {}
        for (a, b), push, blk in blocks:
            a0, a1 = blk.a_absorbed()
            em.single(a, a0 @ H)
            em.single(b, a1 @ H)
            _add(prev_gamma, (a, b), blk.gamma_tilde)
            carry[a] = push[0] @ ry(-phi[a])
            carry[b] = push[1] @ ry(-phi[b])
        if not last:
            nxt = layers[li + 1]
            cur = _split_layer(li + 1, nxt.pairs, nxt.gates, carry, em, False, opts, warnings)
    em.mq(prev_gamma)
    for q in range(n):
        em.single(q, carry[q])
    return em.finish(sigma), warnings


def compile_fused(c: CircuitIR) -> CompiledCircuit:
    """LH decomposition with push-forward and boundary fusion: 2L+1 MQ layers."""
    return _compile_lh(c, CompileOptions(mode="fused"), optimize=False)[0]


def circuit_nuc(cc: CompiledCircuit) -> list[float]:
    return [nuclear_norm(layer) for layer in cc.mq_layers]


def cartan_baseline_nuc(c: CircuitIR) -> float:
    """Sum over blocks of the nuclear norm of their three disjoint Cartan couplings."""
    tot = 0.0
    for _, _, _, g in c.blocks():
        tot += GAUGE * l1_phases(cartan_decompose(g))
    return tot


def _report(mode, cc, baseline, t0, warnings, fell_back=False) -> OptimizerReport:
    nucs = circuit_nuc(cc)
    total = float(sum(nucs))
    ratio = total / baseline if baseline > 0 else float("nan")
    return OptimizerReport(mode, nucs, total, baseline, ratio, time.perf_counter() - t0, cc.mq_count, fell_back, warnings)


def compile_optimized(c: CircuitIR, opts: CompileOptions | None = None):
    """Layer-by-layer nuclear-norm optimisation; returns ``(compiled, report)``.

    If the optimised circuit ends up with a larger total nuclear norm than
    plain fusion, the fused circuit is returned and the report says so.
    """
    opts = opts or CompileOptions()
    t0 = time.perf_counter()
    baseline = cartan_baseline_nuc(c)
    cc, warnings = _compile_lh(c, opts, optimize=True)
    rep = _report(opts.mode, cc, baseline, t0, warnings)
    fused = compile_fused(c)
    fused_total = float(sum(circuit_nuc(fused)))
    if rep.total_nuc > fused_total + 1e-9:
        rep = _report(opts.mode, fused, baseline, t0, warnings, fell_back=True)
        return fused, rep
    return cc, rep


def compile_circuit(c: CircuitIR, opts: CompileOptions | None = None):
    """Dispatch on ``opts.mode``; always returns ``(compiled, report)``."""
    opts = opts or CompileOptions()
    if opts.mode == "fused+optimized":
        return compile_optimized(c, opts)
    t0 = time.perf_counter()
    cc = compile_naive(c) if opts.mode == "naive3L" else compile_fused(c)
    return cc, _report(opts.mode, cc, cartan_baseline_nuc(c), t0, [])
