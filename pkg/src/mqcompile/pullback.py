"""LH-bare split and the Y-pullback that turns it into a ZZ...ZZ block.

An LH-bare block is

    e^{i gamma ZZ} e^{i beta XX} (B0 (x) B1) e^{i alpha ZZ}

and the matching push-forward pair ``(A0, A1)`` completes the source gate.
The pullback rewrites ``(R_Y(t0) (x) R_Y(t1))`` times a bare block as

    e^{i gt ZZ} (ZZ)^lz (At0 (x) At1) e^{i bt XX} (XX)^lx (Bt0 (x) Bt1) e^{i alpha ZZ}

which begins and ends with ZZ rotations. Every operator between the two
alpha/gt gates commutes with ``Y (x) Y``, so the rewrite splits into two
independent SU(2) problems, one per ``YY`` eigenspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cartan import _perm_cliffords
from .lhdecomp import lh_decompose
from .linalg import (
    I2,
    X,
    Z,
    dagger,
    euler_decompose,
    exp_pp,
    exp_zz,
    kron,
    phase_distance,
    ry,
    rz,
)

QUARTER = math.pi / 4
RECON_ATOL = 1e-9
TRIVIAL_ATOL = 1e-12

# Columns span the YY = +1 and YY = -1 eigenspaces; second vector is -i (Y (x) I) e1.
_R2 = 1 / math.sqrt(2)
_E = {
    +1: np.array([[_R2, 0], [0, _R2], [0, _R2], [-_R2, 0]], dtype=complex),
    -1: np.array([[_R2, 0], [0, -_R2], [0, _R2], [_R2, 0]], dtype=complex),
}


class PullbackError(RuntimeError):
    pass


@dataclass(frozen=True)
class LHBareFactors:
    """``e^{i gamma ZZ} e^{i beta XX} (B0 (x) B1) e^{i alpha ZZ}``; phases in radians."""

    gamma: float
    beta: float
    alpha: float
    b_gates: tuple[np.ndarray, np.ndarray]
    pair: tuple[int, int] = (0, 1)
    dropped_yy: float = 0.0

    def unitary(self) -> np.ndarray:
        return exp_zz(self.gamma) @ exp_pp("X", self.beta) @ kron(*self.b_gates) @ exp_zz(self.alpha)

    def quarter_turns(self) -> tuple[float, float, float]:
        """``(gamma, beta, alpha)`` in units of pi/4."""
        return self.gamma / QUARTER, self.beta / QUARTER, self.alpha / QUARTER


@dataclass(frozen=True)
class LHRHFactors:
    """Pulled-back block; the first and last gates applied are ZZ rotations."""

    alpha: float
    gamma_tilde: float
    beta_tilde: float
    a_gates: tuple[np.ndarray, np.ndarray]
    b_gates: tuple[np.ndarray, np.ndarray]
    parity_x: int = 0
    parity_z: int = 0
    pair: tuple[int, int] = (0, 1)

    def a_absorbed(self) -> tuple[np.ndarray, np.ndarray]:
        """``A`` gates with the ZZ parity folded in."""
        if self.parity_z:
            return Z @ self.a_gates[0], Z @ self.a_gates[1]
        return self.a_gates

    def b_absorbed(self) -> tuple[np.ndarray, np.ndarray]:
        """``B`` gates with the XX parity folded in."""
        if self.parity_x:
            return X @ self.b_gates[0], X @ self.b_gates[1]
        return self.b_gates

    def unitary(self) -> np.ndarray:
        zp = kron(Z, Z) if self.parity_z else np.eye(4)
        xp = kron(X, X) if self.parity_x else np.eye(4)
        return (
            exp_zz(self.gamma_tilde)
            @ zp
            @ kron(*self.a_gates)
            @ exp_pp("X", self.beta_tilde)
            @ xp
            @ kron(*self.b_gates)
            @ exp_zz(self.alpha)
        )

    def quarter_turns(self) -> tuple[float, float, float]:
        return self.gamma_tilde / QUARTER, self.beta_tilde / QUARTER, self.alpha / QUARTER


def split_lh(u: np.ndarray, pair: tuple[int, int] = (0, 1)):
    """Return ``(push_forward, bare)`` with ``u ~ (A0 (x) A1) bare``."""
    lh = lh_decompose(u)
    r = lh.residual
    # Largest phase onto ZZ, middle onto XX, the vanishing one onto YY.
    c = _perm_cliffords()[(2, 0, 1)]
    cd = dagger(c)
    a = (r.post_gates[0] @ c, r.post_gates[1] @ c)
    b = (cd @ r.pre_gates[0], cd @ r.pre_gates[1])
    if abs(r.theta_xx) < TRIVIAL_ATOL and abs(r.theta_yy) < TRIVIAL_ATOL:
        # Nothing between the two ZZ slots: keep every local gate in the push-forward.
        a = (a[0] @ b[0], a[1] @ b[1])
        b = (I2, I2)
    bare = LHBareFactors(r.theta_xx, r.theta_yy, lh.leading_zz_phase, b, pair, r.theta_zz)
    return a, bare


def _fold(x):
    """Shift by multiples of pi/2 into (-pi/4, pi/4]; also return the shift parity."""
    x = np.asarray(x, dtype=float)
    n = np.round(x / (2 * QUARTER))
    y = x - n * 2 * QUARTER
    low = y <= -QUARTER
    y = np.where(low, y + 2 * QUARTER, y)
    n = np.where(low, n - 1, n)
    return y, (n.astype(int) % 2)


def pullback_phases(gamma, beta, t0, t1):
    """Closed-form ``(gamma_tilde, beta_tilde)`` after pulling back ``R_Y(t0) (x) R_Y(t1)``.

    Broadcasts over all arguments. Both outputs lie in (-pi/4, pi/4].
    """
    gamma, beta, t0, t1 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (gamma, beta, t0, t1)))
    w = {}
    for s in (1, -1):
        # Block image of R_Y (x) R_Y e^{i gamma ZZ} e^{i beta XX} is R_y(a) R_z(c).
        a = t0 + s * t1
        c = 2 * s * beta - 2 * gamma
        w[s] = (-np.sin(c) * np.cos(a), np.cos(c))
    dx = w[1][0] - w[-1][0]
    dy = w[1][1] - w[-1][1]
    tiny = np.hypot(dx, dy) < 1e-14
    phi = np.where(tiny, 0.0, np.arctan2(-dy, dx))
    yc = np.clip(np.sin(phi) * w[1][0] + np.cos(phi) * w[1][1], -1.0, 1.0)
    m = np.arccos(yc)
    g, _ = _fold(phi / 2)
    b, _ = _fold(m / 2)
    return g, b


def _so3_y(u: np.ndarray) -> np.ndarray:
    """Image of the y axis under the rotation of the 2x2 unitary ``u``."""
    y = np.array([[0, -1j], [1j, 0]])
    m = u @ y @ dagger(u)
    return np.array([m[1, 0].real, m[1, 0].imag, (m[0, 0] - m[1, 1]).real / 2])


def _yzy(h: np.ndarray) -> tuple[float, float, float]:
    """``h ~ R_y(p) R_z(m) R_y(q)`` with m in [0, pi]; returns (p, m, q)."""
    e = euler_decompose(h, "YZY")
    q, m, p = e.angles
    return p, m, q


def _sign(h: np.ndarray, g: np.ndarray) -> int:
    return 1 if np.real(np.trace(dagger(g) @ h)) >= 0 else -1


def y_pullback(bare: LHBareFactors, t0: float, t1: float) -> LHRHFactors:
    """Pull ``R_Y(t0) (x) R_Y(t1)`` (applied after ``bare``) back through it.

    Angles are in radians with ``R_Y(t) = exp(-i t Y / 2)``. The leading
    ``alpha`` is carried over unchanged.
    """
    w4 = kron(ry(t0), ry(t1)) @ exp_zz(bare.gamma) @ exp_pp("X", bare.beta)
    blocks = {s: dagger(_E[s]) @ w4 @ _E[s] for s in (1, -1)}
    ws = {s: _so3_y(blocks[s]) for s in (1, -1)}
    d = ws[1] - ws[-1]
    phi = 0.0 if math.hypot(d[0], d[1]) < 1e-14 else math.atan2(-d[1], d[0])
    gt = phi / 2
    ang = {}
    sgn = {}
    for s in (1, -1):
        h = rz(2 * gt) @ blocks[s]
        p, m, q = _yzy(h)
        if s == -1:
            p, m, q = p + math.pi, -m, q - math.pi
        ang[s] = (p, m, q)
        sgn[s] = _sign(h, ry(p) @ rz(m) @ ry(q))
    if abs(ang[1][1] + ang[-1][1]) > 1e-7:
        raise PullbackError(f"block middle angles disagree: {ang[1][1]} vs {-ang[-1][1]}")
    pp, pm = ang[1][0], ang[-1][0]
    if sgn[1] != sgn[-1]:
        pm += 2 * math.pi
    u0, u1 = (pp + pm) / 2, (pp - pm) / 2
    v0, v1 = (ang[1][2] + ang[-1][2]) / 2, (ang[1][2] - ang[-1][2]) / 2
    bt = ang[1][1] / 2

    gt_f, lz = _fold(gt)
    bt_f, lx = _fold(bt)
    out = LHRHFactors(
        bare.alpha,
        float(gt_f),
        float(bt_f),
        (ry(u0), ry(u1)),
        (ry(v0) @ bare.b_gates[0], ry(v1) @ bare.b_gates[1]),
        int(lx),
        int(lz),
        bare.pair,
    )
    err = phase_distance(out.unitary(), kron(ry(t0), ry(t1)) @ bare.unitary())
    if err > RECON_ATOL:
        raise PullbackError(f"pullback reconstruction error {err:.3g}")
    return out
