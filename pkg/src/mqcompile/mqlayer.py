"""Multi-qubit Ising layers ``exp(i sum_{n<m} theta_nm Z_n Z_m)``.

A layer stores one phase ``theta`` per unordered pair. The symmetric
coupling matrix used for the nuclear norm and participation carries
``theta / 2`` on each ordered entry, so the layer is also
``exp(i sum_{n,m} phi_nm Z_n Z_m)`` with the double sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .linalg import H, I2

# A fully entangling pair (pair phase pi/4) has radian nuc pi/4; report it as 1/2.
GAUGE = 2 / math.pi


def _norm_pair(n: int, m: int) -> tuple[int, int]:
    if n == m:
        raise ValueError(f"self-coupling on qubit {n}")
    return (n, m) if n < m else (m, n)


@dataclass(frozen=True)
class MQLayer:
    """A ZZ-type multi-qubit gate on ``n_qubits`` qubits.

    ``couplings`` maps sorted pairs ``(n, m)`` to the pair phase ``theta``
    in radians (``exp(i theta Z_n Z_m)``).
    """

    n_qubits: int
    couplings: Mapping[tuple[int, int], float] = field(default_factory=dict)
    axis: str = "ZZ"

    def __post_init__(self):
        clean: dict[tuple[int, int], float] = {}
        for (n, m), t in dict(self.couplings).items():
            if not (0 <= n < self.n_qubits and 0 <= m < self.n_qubits):
                raise ValueError(f"pair ({n}, {m}) out of range for {self.n_qubits} qubits")
            key = _norm_pair(int(n), int(m))
            clean[key] = clean.get(key, 0.0) + float(t)
        object.__setattr__(self, "couplings", dict(sorted(clean.items())))

    @classmethod
    def from_matrix(cls, phi: np.ndarray) -> "MQLayer":
        """Build from a symmetric coupling matrix (``theta = 2 phi_nm``)."""
        phi = np.asarray(phi, dtype=float)
        n = phi.shape[0]
        if not np.allclose(phi, phi.T, atol=1e-12):
            raise ValueError("coupling matrix is not symmetric")
        iu = np.triu_indices(n, 1)
        return cls(n, {(int(a), int(b)): 2 * float(phi[a, b]) for a, b in zip(*iu) if phi[a, b] != 0})

    def matrix(self) -> np.ndarray:
        phi = np.zeros((self.n_qubits, self.n_qubits))
        for (n, m), t in self.couplings.items():
            phi[n, m] = phi[m, n] = t / 2
        return phi

    def qubits(self) -> set[int]:
        return {q for pair in self.couplings for q in pair}

    def active_qubits(self, atol: float = 0.0) -> set[int]:
        return {q for pair, t in self.couplings.items() if abs(t) > atol for q in pair}

    def nonzero_count(self, atol: float = 1e-12) -> int:
        return sum(abs(t) > atol for t in self.couplings.values())

    def phase_vector(self) -> np.ndarray:
        """Diagonal of the layer unitary in the computational basis."""
        n = self.n_qubits
        idx = np.arange(2**n)
        ang = np.zeros(2**n)
        for (a, b), t in self.couplings.items():
            za = 1 - 2 * ((idx >> (n - 1 - a)) & 1)
            zb = 1 - 2 * ((idx >> (n - 1 - b)) & 1)
            ang += t * za * zb
        return np.exp(1j * ang)

    def unitary(self) -> np.ndarray:
        return np.diag(self.phase_vector())

    def scaled(self, c: float) -> "MQLayer":
        return MQLayer(self.n_qubits, {k: c * t for k, t in self.couplings.items()})


def nuclear_norm_matrix(phi: np.ndarray) -> float:
    """Gauge-unit nuclear norm of a symmetric coupling matrix (or a stack of them)."""
    ev = np.linalg.eigvalsh(np.abs(phi))
    return GAUGE * np.abs(ev).sum(axis=-1)


def nuclear_norm(layer: MQLayer) -> float:
    """Sum of absolute eigenvalues of ``|phi|`` in gauge units.

    A single pair with phase pi/4 gives 1/2.
    """
    if not layer.couplings:
        return 0.0
    return float(nuclear_norm_matrix(layer.matrix()))


def participation(layer: MQLayer) -> np.ndarray:
    """Relative share ``alpha_n`` of each qubit in the total absolute coupling."""
    a = np.abs(layer.matrix())
    tot = a.sum()
    if tot == 0:
        raise ValueError("participation is undefined for an all-zero layer")
    return a.sum(axis=1) / tot


def fuse(a: MQLayer, b: MQLayer) -> MQLayer:
    """Merge two ZZ layers on the same register; the unitary is ``U_b U_a``."""
    if a.axis != "ZZ" or b.axis != "ZZ":
        raise ValueError("only ZZ layers can be fused")
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"register mismatch: {a.n_qubits} vs {b.n_qubits}")
    c = dict(a.couplings)
    for k, t in b.couplings.items():
        c[k] = c.get(k, 0.0) + t
    return MQLayer(a.n_qubits, c)


def xx_to_zz(pair: tuple[int, int], phase: float):
    """Express ``exp(i phase X_n X_m)`` as Hadamard-dressed ZZ.

    Returns ``(pre, zz, post)`` where ``pre`` and ``post`` map qubit to a 2x2
    gate; ``exp(i t XX) = (H (x) H) exp(i t ZZ) (H (x) H)``.
    """
    n, m = pair
    if phase == 0:
        dress = {n: I2, m: I2}
    else:
        dress = {n: H, m: H}
    return dress, {_norm_pair(n, m): float(phase)}, dict(dress)
