"""Cartan (KAK) decomposition of two-qubit gates in the magic basis.

Every ``u`` in U(4) is written as

    u = e^{i theta0} (A1 (x) B1) exp(i (tx XX + ty YY + tz ZZ)) (A0 (x) B0)

with ``A, B`` in SU(2). Phases are canonicalized to the minimum-L1
representative: each in (-pi/4, pi/4], ``|tx| >= |ty| >= |tz|`` and at most
one negative value, carried by ``tz``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .linalg import (
    I2,
    MAGIC,
    MAGIC_DAG,
    MAGIC_SIGNS,
    PAULI,
    X,
    Y,
    Z,
    canonical_exp,
    check_unitary,
    dagger,
    kron,
    kron_factor,
    _cliffords,
)

QUARTER = math.pi / 4
AXES = ("X", "Y", "Z")
ORTHO_ATOL = 1e-8

# Mixing ratios for the joint diagonalisation of Re(G) and Im(G).
_MIX = (1.0, 0.6180339887498949, -1.4142135623730951, 2.718281828459045, -0.3183098861837907)


class DecompositionError(RuntimeError):
    """Raised when a factorisation fails its own internal consistency check."""


@dataclass(frozen=True)
class CartanFactors:
    """``e^{i global_phase} (post) exp(i(tx XX + ty YY + tz ZZ)) (pre)``."""

    pre_gates: tuple[np.ndarray, np.ndarray]
    post_gates: tuple[np.ndarray, np.ndarray]
    theta_xx: float
    theta_yy: float
    theta_zz: float
    global_phase: float = 0.0
    center_sign: int = 1
    ortho_residual: float = field(default=0.0, compare=False)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([self.theta_xx, self.theta_yy, self.theta_zz])

    def interaction(self) -> np.ndarray:
        return canonical_exp(self.theta_xx, self.theta_yy, self.theta_zz)

    def unitary(self) -> np.ndarray:
        post = kron(*self.post_gates)
        pre = kron(*self.pre_gates)
        return np.exp(1j * self.global_phase) * post @ self.interaction() @ pre

    def volume(self) -> float:
        """Sin-product of the phases, signed for the determinant-one representative.

        Multiplying an SU(4) element by ``i`` flips the trace-formula volume
        while leaving the canonical phases alone; ``center_sign`` records it.
        """
        return self.center_sign * float(np.prod(np.sin(2 * self.thetas)))


def _normalize(u: np.ndarray) -> np.ndarray:
    return u / np.linalg.det(u) ** 0.25


def _joint_eigvecs(g: np.ndarray) -> tuple[np.ndarray, float]:
    """Real orthogonal P with ``P^T G P`` diagonal for complex symmetric unitary G."""
    re, im = g.real, g.imag
    best, best_res = None, np.inf
    for r in _MIX:
        _, p = np.linalg.eigh(re + r * im)
        d = p.T @ g @ p
        res = float(np.max(np.abs(d - np.diag(np.diag(d)))))
        if res < best_res:
            best, best_res = p, res
        if res < 1e-12:
            break
    if best_res > 1e-9:
        rng = np.random.default_rng(0)
        for _ in range(20):
            r = rng.standard_normal()
            _, p = np.linalg.eigh(re + r * im)
            d = p.T @ g @ p
            res = float(np.max(np.abs(d - np.diag(np.diag(d)))))
            if res < best_res:
                best, best_res = p, res
            if res < 1e-12:
                break
    if np.linalg.det(best) < 0:
        best = best.copy()
        best[:, 0] *= -1
    return best, best_res


@lru_cache(maxsize=None)
def _perm_cliffords() -> dict[tuple[int, int, int], np.ndarray]:
    """Map each axis permutation ``pi`` to a Clifford C with ``C^dag P_a C = +-P_pi(a)``."""
    out: dict[tuple[int, int, int], np.ndarray] = {}
    paulis = [X, Y, Z]
    for c in _cliffords():
        cd = dagger(c)
        perm = []
        for p in paulis:
            q = cd @ p @ c
            perm.append(int(np.argmax([abs(np.trace(q @ s)) for s in paulis])))
        out.setdefault(tuple(perm), c)
    return out


class _Tracker:
    """Accumulates local moves while rewriting the interaction phases."""

    def __init__(self, pre: np.ndarray, post: np.ndarray, th: np.ndarray):
        self.pre, self.post, self.th = pre, post, th.astype(float).copy()

    def fold(self) -> None:
        for k, ax in enumerate(AXES):
            n = round(self.th[k] / (2 * QUARTER))
            if self.th[k] - n * 2 * QUARTER <= -QUARTER:
                n -= 1
            if n:
                # exp(i t PP) = exp(i (t - n pi/2) PP) (i PP)^n
                self.th[k] -= n * 2 * QUARTER
                if n % 2:
                    p = PAULI[ax]
                    self.pre = kron(p, p) @ self.pre

    def flip(self, j: int, k: int) -> None:
        """Negate phases j and k by conjugating with the Pauli on the third axis."""
        (m,) = {0, 1, 2} - {j, k}
        p = kron(PAULI[AXES[m]], I2)
        self.th[[j, k]] *= -1
        self.pre = p @ self.pre
        self.post = self.post @ p

    def permute(self, order: list[int]) -> None:
        """Reorder so that new phase i is old phase ``order[i]``."""
        if list(order) == [0, 1, 2]:
            return
        # C^dag P_a C = P_perm[a]: old axis a becomes new axis perm[a].
        perm = [0, 0, 0]
        for new, old in enumerate(order):
            perm[old] = new
        c = _perm_cliffords()[tuple(perm)]
        cc = kron(c, c)
        self.th = self.th[list(order)]
        self.pre = dagger(cc) @ self.pre
        self.post = self.post @ cc

    def canonicalize(self) -> None:
        self.fold()
        order = sorted(range(3), key=lambda k: -abs(self.th[k]))
        self.permute(order)
        neg = [k for k in range(3) if self.th[k] < 0]
        if len(neg) >= 2:
            self.flip(neg[0], neg[1])
        elif len(neg) == 1 and neg[0] != 2:
            self.flip(neg[0], 2)
        self.fold()


def cartan_decompose(u: np.ndarray) -> CartanFactors:
    """Canonical KAK factorisation of a two-qubit unitary."""
    u = check_unitary(u)
    su = _normalize(u)
    umb = MAGIC_DAG @ su @ MAGIC
    g = umb.T @ umb
    p, res = _joint_eigvecs(g)
    d2 = np.diag(p.T @ g @ p)
    d = np.sqrt(d2)
    if np.real(np.prod(d)) < 0:
        d[0] = -d[0]
    k1c = umb @ p / d[None, :]
    ortho_res = max(res, float(np.max(np.abs(k1c.imag))))
    if ortho_res > ORTHO_ATOL:
        raise DecompositionError(
            f"orthogonal factor extraction left residual {ortho_res:.3g}"
        )
    k1 = k1c.real
    phi = np.angle(d)
    th = MAGIC_SIGNS.T @ phi / 4
    post = MAGIC @ k1 @ MAGIC_DAG
    pre = MAGIC @ p.T @ MAGIC_DAG

    t = _Tracker(pre, post, th)
    t.canonicalize()
    _, a0, b0 = kron_factor(t.pre)
    _, a1, b1 = kron_factor(t.post)
    recon = kron(a1, b1) @ canonical_exp(*t.th) @ kron(a0, b0)
    gp = float(np.angle(np.vdot(recon, u)))
    k = round(float(np.angle(np.vdot(recon, su))) / (2 * QUARTER))
    return CartanFactors(
        (a0, b0),
        (a1, b1),
        float(t.th[0]),
        float(t.th[1]),
        float(t.th[2]),
        gp,
        -1 if k % 2 else 1,
        ortho_res,
    )


def canonical_phases(th: np.ndarray) -> np.ndarray:
    """Canonical representative of raw phase triples, shape ``(..., 3)``."""
    th = np.asarray(th, dtype=float)
    half = 2 * QUARTER
    f = th - half * np.round(th / half)
    f = np.where(f <= -QUARTER, f + half, f)
    a = -np.sort(-np.abs(f), axis=-1)
    nneg = np.sum(f < 0, axis=-1)
    a[..., 2] = np.where(nneg % 2 == 1, -a[..., 2], a[..., 2])
    # A negative -pi/4 is equivalent to +pi/4.
    a[..., 2] = np.where(a[..., 2] <= -QUARTER, -a[..., 2], a[..., 2])
    return a


def cartan_phases_batch(us: np.ndarray) -> np.ndarray:
    """Canonical entanglement phases for a stack of unitaries, shape ``(n, 3)``.

    Uses only the spectrum of ``U_MB^T U_MB``, so no local factors are built.
    """
    us = np.asarray(us, dtype=complex)
    us = us / (np.linalg.det(us) ** 0.25)[:, None, None]
    umb = MAGIC_DAG @ us @ MAGIC
    g = np.swapaxes(umb, -1, -2) @ umb
    lam = np.linalg.eigvals(g)
    phi = np.angle(lam) / 2
    odd = np.round(phi.sum(axis=-1) / math.pi).astype(int) % 2 == 1
    phi[:, 0] += np.where(odd, math.pi, 0.0)
    return canonical_phases(phi @ MAGIC_SIGNS / 4)


def l1_batch(us: np.ndarray) -> np.ndarray:
    return np.abs(cartan_phases_batch(us)).sum(axis=-1)


def cartan_volume(u: np.ndarray) -> float:
    """``sin(2tx) sin(2ty) sin(2tz)`` via the magic-basis trace formula."""
    u = _normalize(check_unitary(u))
    umb = MAGIC_DAG @ u @ MAGIC
    return float(0.25 * np.trace(umb.T @ umb).imag)


def l1_phases(f: CartanFactors) -> float:
    return abs(f.theta_xx) + abs(f.theta_yy) + abs(f.theta_zz)
