"""Small dense complex-matrix kernel shared by every other module.

Conventions used throughout the package:

* Qubit 0 is the most significant tensor factor: ``kron(X, I) |00> = |10>``.
* Single-qubit rotations are ``R_a(t) = exp(-i t P_a / 2)``.
* Correlated rotations are written directly as ``exp(+i theta P_a (x) P_a)``,
  matching the sign of the multi-qubit Ising gate ``exp(i sum phi_nm Z_n Z_m)``.
* Equality of gates is always modulo a global phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
S = np.diag([1, 1j]).astype(complex)
PAULI = {"X": X, "Y": Y, "Z": Z}

XX = np.kron(X, X)
YY = np.kron(Y, Y)
ZZ = np.kron(Z, Z)
ZZ_DIAG = np.array([1.0, -1.0, -1.0, 1.0])

MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / math.sqrt(2)
MAGIC_DAG = MAGIC.conj().T

# Diagonal of M^dag (P (x) P) M for P = X, Y, Z; columns are the three axes.
MAGIC_SIGNS = np.real(
    np.stack([np.diag(MAGIC_DAG @ P @ MAGIC) for P in (XX, YY, ZZ)], axis=1)
)

UNITARY_ATOL = 1e-8
GIMBAL_ATOL = 1e-9


class NotUnitaryError(ValueError):
    pass


def kron(*mats) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def unitarity_residual(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(dagger(m) @ m - np.eye(m.shape[-1]))))


def is_unitary(m: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and unitarity_residual(m) < atol


def check_unitary(m: np.ndarray, atol: float = UNITARY_ATOL) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotUnitaryError(f"expected a square matrix, got shape {m.shape}")
    res = unitarity_residual(m)
    if res >= atol:
        raise NotUnitaryError(f"matrix is not unitary (residual {res:.3g})")
    return m


def to_special_unitary(u: np.ndarray) -> np.ndarray:
    """Divide out ``det(u) ** (1/d)`` using the principal root."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[-1]
    det = np.linalg.det(u)
    return u / (det ** (1.0 / d))[..., None, None] if u.ndim > 2 else u / det ** (1.0 / d)


def rot(axis: str, t: float) -> np.ndarray:
    """Single-qubit rotation ``exp(-i t P / 2)``."""
    return math.cos(t / 2) * I2 - 1j * math.sin(t / 2) * PAULI[axis]


def rx(t: float) -> np.ndarray:
    return rot("X", t)


def ry(t: float) -> np.ndarray:
    return rot("Y", t)


def rz(t: float) -> np.ndarray:
    return rot("Z", t)


def ry_batch(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    c, s = np.cos(t / 2), np.sin(t / 2)
    out = np.empty(t.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def exp_pp(axis: str, theta: float) -> np.ndarray:
    """Correlated rotation ``exp(i theta P (x) P)``."""
    p = PAULI[axis]
    return math.cos(theta) * np.eye(4) + 1j * math.sin(theta) * np.kron(p, p)


def exp_zz(theta) -> np.ndarray:
    """``exp(i theta Z (x) Z)``; accepts scalars or arrays (returns diagonals stacked)."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 0:
        return np.diag(np.exp(1j * float(theta) * ZZ_DIAG))
    d = np.exp(1j * theta[..., None] * ZZ_DIAG)
    out = np.zeros(theta.shape + (4, 4), dtype=complex)
    idx = np.arange(4)
    out[..., idx, idx] = d
    return out


def canonical_exp(tx: float, ty: float, tz: float) -> np.ndarray:
    """``exp(i (tx XX + ty YY + tz ZZ))``, built in the magic basis."""
    phases = MAGIC_SIGNS @ np.array([tx, ty, tz])
    return MAGIC @ np.diag(np.exp(1j * phases)) @ MAGIC_DAG


def to_magic_basis(u: np.ndarray) -> np.ndarray:
    """Return ``M^dag u M``. Rejects non-unitary input."""
    u = check_unitary(u)
    return MAGIC_DAG @ u @ MAGIC


def from_magic_basis(m: np.ndarray) -> np.ndarray:
    return MAGIC @ m @ MAGIC_DAG


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """``min_phi ||u - e^{i phi} v||_F``, evaluated at the optimal phase."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {v.shape}")
    t = np.vdot(v, u)  # Tr(v^dag u)
    ph = t / abs(t) if abs(t) > 0 else 1.0
    return float(np.linalg.norm(u - ph * v))


def kron_factor(m: np.ndarray) -> tuple[complex, np.ndarray, np.ndarray]:
    """Split a 4x4 product ``g * (a (x) b)`` into ``(g, a, b)`` with ``a, b`` in SU(2).

    The input is assumed to be a tensor product up to a scalar; no check is
    made beyond what the caller verifies by reconstruction.
    """
    t = np.asarray(m, dtype=complex).reshape(2, 2, 2, 2)  # (a_r, b_r, a_c, b_c)
    # Pick the b entry with the largest weight to read off a.
    norms = np.einsum("ijkl,ijkl->jl", t, t.conj()).real
    br, bc = np.unravel_index(np.argmax(norms), norms.shape)
    a = t[:, br, :, bc].copy()
    a /= np.sqrt(np.linalg.det(a))
    ar, ac = np.unravel_index(np.argmax(np.abs(a)), a.shape)
    b = t[ar, :, ac, :] / a[ar, ac]
    db = np.sqrt(np.linalg.det(b))
    b /= db
    return complex(db), a, b


@dataclass(frozen=True)
class EulerAngles:
    """Angles ``(t1, t2, t3)`` with ``g ~ R_a3(t3) R_a2(t2) R_a1(t1)``."""

    axis_order: str
    angles: tuple[float, float, float]
    degenerate: bool = False

    def matrix(self) -> np.ndarray:
        a1, a2, a3 = self.axis_order
        t1, t2, t3 = self.angles
        return rot(a3, t3) @ rot(a2, t2) @ rot(a1, t1)


def _wrap(t: float) -> float:
    """Fold an angle into (-pi, pi]."""
    w = math.remainder(t, 2 * math.pi)
    return math.pi if w <= -math.pi else w


def _cliffords() -> list[np.ndarray]:
    """The 24 single-qubit Cliffords (modulo phase), generated by H and S."""
    found: list[np.ndarray] = [I2]
    frontier = [I2]
    while frontier:
        nxt = []
        for c in frontier:
            for g in (H, S):
                m = g @ c
                if all(phase_distance(m, f) > 1e-6 for f in found):
                    found.append(m)
                    nxt.append(m)
        frontier = nxt
    return found


_AXIS_MAPS: dict[tuple[str, str], tuple[np.ndarray, float]] = {}


def _axis_map(a: str, b: str) -> tuple[np.ndarray, float]:
    """Clifford C with ``C^dag P_a C = Z`` and ``C^dag P_b C = Y``.

    Also returns the sign s with ``C^dag P_c C = s X`` for the remaining axis c.
    """
    key = (a, b)
    if key not in _AXIS_MAPS:
        (c,) = set("XYZ") - {a, b}
        for cl in _cliffords():
            cd = dagger(cl)
            if np.allclose(cd @ PAULI[a] @ cl, Z) and np.allclose(cd @ PAULI[b] @ cl, Y):
                sign = 1.0 if np.allclose(cd @ PAULI[c] @ cl, X) else -1.0
                _AXIS_MAPS[key] = (cl, sign)
                break
    return _AXIS_MAPS[key]


def _zyz(g: np.ndarray) -> tuple[float, float, float, bool]:
    """``g ~ R_z(t3) R_y(t2) R_z(t1)`` with t2 in [0, pi]; ``g`` in SU(2)."""
    t2 = 2 * math.atan2(abs(g[1, 0]), abs(g[0, 0]))
    # g11 = e^{i(t3+t1)/2} cos(t2/2) and g10 = e^{i(t3-t1)/2} sin(t2/2).
    hs = cmath_phase(g[1, 1] + g[0, 0].conjugate())
    hd = cmath_phase(g[1, 0] - g[0, 1].conjugate())
    if t2 < GIMBAL_ATOL:
        return _wrap(2 * hs), 0.0, 0.0, True
    if math.pi - t2 < GIMBAL_ATOL:
        return _wrap(-2 * hd), math.pi, 0.0, True
    return _wrap(hs - hd), t2, _wrap(hs + hd), False


def _so3(g: np.ndarray) -> np.ndarray:
    paulis = (X, Y, Z)
    gd = dagger(g)
    return np.array(
        [[0.5 * np.trace(pi @ g @ pj @ gd).real for pj in paulis] for pi in paulis]
    )


def _zyx(g: np.ndarray) -> tuple[float, float, float, bool]:
    """``g ~ R_x(t3) R_y(t2) R_z(t1)`` with t2 in [-pi/2, pi/2]."""
    r = _so3(g)
    t2 = math.atan2(r[0, 2], math.hypot(r[0, 0], r[0, 1]))
    if math.pi / 2 - abs(t2) < GIMBAL_ATOL:
        return _wrap(math.atan2(r[1, 0], r[1, 1])), t2, 0.0, True
    return math.atan2(-r[0, 1], r[0, 0]), t2, math.atan2(-r[1, 2], r[2, 2]), False


def cmath_phase(z: complex) -> float:
    return math.atan2(z.imag, z.real)


def euler_decompose(g: np.ndarray, axis_order: str = "ZYZ") -> EulerAngles:
    """Three-rotation Euler factorisation ``g ~ R_a3(t3) R_a2(t2) R_a1(t1)``.

    ``axis_order`` lists the axes in application order (``a1 a2 a3``) and
    needs distinct adjacent axes. For symmetric orders (``ZYZ``) the middle
    angle lies in [0, pi]; for asymmetric orders (``ZYX``) in [-pi/2, pi/2].
    Outer angles lie in (-pi, pi]. At gimbal lock the third angle is set to
    zero and the whole outer rotation is carried by the first.
    """
    axis_order = axis_order.upper()
    if len(axis_order) != 3 or set(axis_order) - set("XYZ"):
        raise ValueError(f"invalid Euler axis order {axis_order!r}")
    a1, a2, a3 = axis_order
    if a1 == a2 or a2 == a3:
        raise ValueError(f"adjacent Euler axes must differ: {axis_order!r}")
    g = np.asarray(g, dtype=complex)
    g = g / np.sqrt(np.linalg.det(g))
    cl, sign = _axis_map(a1, a2)
    gp = dagger(cl) @ g @ cl
    if a1 == a3:
        t1, t2, t3, degenerate = _zyz(gp)
    else:
        t1, t2, t3, degenerate = _zyx(gp)
        t3 = sign * t3
    return EulerAngles(axis_order, (t1, t2, t3), degenerate)
