"""Left- and right-handed decompositions with a single outer ZZ rotation.

Right-multiplying ``U`` by ``exp(-i xi ZZ)`` moves its Cartan volume along a
pure sinusoid in ``xi``. Its zero ``xi0`` makes one entanglement phase
vanish, so

    U = Cartan(U exp(-i xi0 ZZ)) exp(i xi0 ZZ)

starts with a ZZ gate and carries only two interior phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .cartan import CartanFactors, cartan_decompose, cartan_phases_batch, l1_phases
from .linalg import MAGIC, MAGIC_DAG, ZZ_DIAG, check_unitary, dagger, exp_zz

QUARTER = math.pi / 4
DEGENERATE_ATOL = 1e-12


@dataclass(frozen=True)
class CVSinusoid:
    """``CV(U exp(-i xi ZZ)) = orientation * amplitude * sin(2 (xi - xi0))``.

    ``xi0`` lies in (-pi/4, pi/4] and ``amplitude >= 0``; keeping both
    constraints forces the extra ``orientation`` sign.
    """

    amplitude: float
    xi0: float
    orientation: int
    a_r: float
    a_i: float
    b_r: float
    b_i: float
    degenerate: bool = False

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return 0.25 * ((self.a_i + self.b_i) * np.cos(2 * xi) + (self.b_r - self.a_r) * np.sin(2 * xi))

    def model(self, xi):
        return self.orientation * self.amplitude * np.sin(2 * (np.asarray(xi, dtype=float) - self.xi0))


def _fold_quarter(x: float) -> tuple[float, int]:
    """Shift ``x`` by multiples of pi/2 into (-pi/4, pi/4]; returns the shift parity sign."""
    n = round(x / (2 * QUARTER))
    y = x - n * 2 * QUARTER
    if y <= -QUARTER:
        y += 2 * QUARTER
        n -= 1
    return y, -1 if n % 2 else 1


def _magic_su(u: np.ndarray) -> np.ndarray:
    u = check_unitary(u)
    u = u / np.linalg.det(u) ** 0.25
    return MAGIC_DAG @ u @ MAGIC


def shifted_volume(u: np.ndarray, xi: float) -> float:
    """``CV(U exp(-i xi ZZ))`` by the trace formula, without forming the product."""
    umb = _magic_su(u)
    col = np.sum(umb * umb, axis=0)
    return float(0.25 * np.sum(col * np.exp(-2j * xi * ZZ_DIAG)).imag)


def cv_sinusoid(u: np.ndarray) -> CVSinusoid:
    """Coefficients, amplitude and in-range zero of the shifted Cartan volume."""
    umb = _magic_su(u)
    col = np.sum(umb * umb, axis=0)
    a = col[0] + col[3]
    b = col[1] + col[2]
    c_cos = 0.25 * (a.imag + b.imag)
    c_sin = 0.25 * (b.real - a.real)
    amp = math.hypot(c_cos, c_sin)
    if amp < DEGENERATE_ATOL:
        return CVSinusoid(amp, 0.0, 1, a.real, a.imag, b.real, b.imag, True)
    # c_cos cos2x + c_sin sin2x = amp sin(2(x - x0)) with this x0.
    xi0, orient = _fold_quarter(0.5 * math.atan2(-c_cos, c_sin))
    s = CVSinusoid(amp, xi0, orient, a.real, a.imag, b.real, b.imag)
    r = float(s(xi0))
    if abs(r) > 1e-12:
        xi0, o2 = _fold_quarter(xi0 - r / (2 * orient * amp))
        s = CVSinusoid(amp, xi0, orient * o2, a.real, a.imag, b.real, b.imag)
    return s


@dataclass(frozen=True)
class LHFactors:
    """``U = residual.unitary() @ exp(i leading_zz_phase ZZ)`` (up to phase)."""

    leading_zz_phase: float
    residual: CartanFactors
    degenerate: bool = False

    def unitary(self) -> np.ndarray:
        return self.residual.unitary() @ exp_zz(self.leading_zz_phase)

    def l1(self) -> float:
        return abs(self.leading_zz_phase) + l1_phases(self.residual)


@dataclass(frozen=True)
class RHFactors:
    """``U = exp(i trailing_zz_phase ZZ) @ residual.unitary()`` (up to phase)."""

    trailing_zz_phase: float
    residual: CartanFactors
    degenerate: bool = False

    def unitary(self) -> np.ndarray:
        return exp_zz(self.trailing_zz_phase) @ self.residual.unitary()

    def l1(self) -> float:
        return abs(self.trailing_zz_phase) + l1_phases(self.residual)


def _degenerate_root(u: np.ndarray) -> float:
    """Pick ``xi`` minimizing ``|xi| + L1(U exp(-i xi ZZ))`` when every xi is a root."""
    cand = [0.0]
    for t in cartan_decompose(u).thetas:
        cand += [float(t), -float(t)]
    grid = np.linspace(-QUARTER, QUARTER, 129)[1:]
    xs = np.concatenate([np.array(cand), grid])
    xs = np.array([_fold_quarter(x)[0] for x in xs])
    res = np.abs(cartan_phases_batch(u[None] @ exp_zz(-xs))).sum(-1)

    def f(x):
        return abs(x) + float(np.abs(cartan_phases_batch((u @ exp_zz(-x))[None])).sum())

    j = int(np.argmin(np.abs(xs) + res))
    lo = max(-QUARTER, xs[j] - math.pi / 128)
    hi = min(QUARTER, xs[j] + math.pi / 128)
    opt = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if opt.fun < abs(xs[j]) + res[j] - 1e-12:
        xs = np.append(xs, opt.x)
        res = np.append(res, opt.fun - abs(opt.x))
    tot = np.abs(xs) + res
    best = tot.min()
    ties = np.flatnonzero(tot <= best + 1e-9)
    key = sorted(ties, key=lambda i: (round(res[i], 9), abs(xs[i]), xs[i]))
    return float(xs[key[0]])


def lh_decompose(u: np.ndarray) -> LHFactors:
    """Factor ``u`` so that the first gate applied is a pure ZZ rotation."""
    u = check_unitary(u)
    s = cv_sinusoid(u)
    xi0 = _degenerate_root(u) if s.degenerate else s.xi0
    residual = cartan_decompose(u @ exp_zz(-xi0))
    return LHFactors(xi0, residual, s.degenerate)


def _dagger_factors(f: CartanFactors) -> CartanFactors:
    return CartanFactors(
        (dagger(f.post_gates[0]), dagger(f.post_gates[1])),
        (dagger(f.pre_gates[0]), dagger(f.pre_gates[1])),
        -f.theta_xx,
        -f.theta_yy,
        -f.theta_zz,
        -f.global_phase,
        f.center_sign,
        f.ortho_residual,
    )


def rh_decompose(u: np.ndarray) -> RHFactors:
    """Mirror of :func:`lh_decompose`: the last gate applied is a pure ZZ rotation."""
    lh = lh_decompose(dagger(check_unitary(u)))
    return RHFactors(-lh.leading_zz_phase, _dagger_factors(lh.residual), lh.degenerate)


def lh_phases_batch(us: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Leading phase and canonical residual phases for a stack of unitaries.

    Degenerate inputs (vanishing sinusoid) get ``xi0 = 0``; use
    :func:`lh_decompose` where the minimal-L1 choice matters.
    """
    us = np.asarray(us, dtype=complex)
    us = us / (np.linalg.det(us) ** 0.25)[:, None, None]
    umb = MAGIC_DAG @ us @ MAGIC
    col = np.sum(umb * umb, axis=-2)
    a = col[:, 0] + col[:, 3]
    b = col[:, 1] + col[:, 2]
    c_cos = 0.25 * (a.imag + b.imag)
    c_sin = 0.25 * (b.real - a.real)
    amp = np.hypot(c_cos, c_sin)
    x = 0.5 * np.arctan2(-c_cos, c_sin)
    x = x - 2 * QUARTER * np.round(x / (2 * QUARTER))
    x = np.where(x <= -QUARTER, x + 2 * QUARTER, x)
    x = np.where(amp < DEGENERATE_ATOL, 0.0, x)
    res = us * np.exp(-1j * x[:, None] * ZZ_DIAG)[:, None, :]
    return x, cartan_phases_batch(res)


def lh_l1_batch(us: np.ndarray) -> np.ndarray:
    x, th = lh_phases_batch(us)
    return np.abs(x) + np.abs(th).sum(-1)
