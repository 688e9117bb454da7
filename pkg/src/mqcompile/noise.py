"""Per-qubit error probabilities of entanglement layers.

Depolarization scales with each qubit's share of the layer's nuclear norm
and is gauged so that one fully entangling pair reproduces the two-qubit
gate error ``p_tq``. Dephasing charges ``p_tq`` to every participant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mqlayer import MQLayer, nuclear_norm, participation

KINDS = ("depolarization", "dephasing", "none")
_ALIASES = {"depol": "depolarization", "dephase": "dephasing"}

# nuc of a single pair at phase pi/4, in gauge units.
NUC_PAIR = 0.5


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "none"
    p_tq: float = 0.0

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not 0.0 <= self.p_tq < 1.0:
            raise ValueError(f"p_tq must lie in [0, 1), got {self.p_tq}")

    @property
    def delta_sq(self) -> float:
        """Squared detuning ratio fixed by the two-qubit gauge."""
        if self.kind != "depolarization":
            raise ValueError("delta_sq is defined for depolarization only")
        if self.p_tq == 0:
            raise ValueError("delta_sq diverges at p_tq = 0")
        return NUC_PAIR * (1 - self.p_tq) / (2 * self.p_tq)

    def with_p(self, p: float) -> "NoiseModel":
        return NoiseModel(self.kind, p)

    def probabilities(self, layer: MQLayer) -> np.ndarray:
        if self.kind == "depolarization":
            return depol_probabilities(layer, self)
        if self.kind == "dephasing":
            return dephase_probabilities(layer, self)
        return np.zeros(layer.n_qubits)


def _alpha_nuc(layer: MQLayer) -> np.ndarray | None:
    if layer.nonzero_count(0.0) == 0:
        return None
    return participation(layer) * nuclear_norm(layer)


def depol_probabilities(layer: MQLayer, model: NoiseModel) -> np.ndarray:
    """``p_n = a_n nuc / (a_n nuc + delta^2)``, written without the division by ``p_tq``."""
    if model.kind != "depolarization":
        raise ValueError(f"expected a depolarization model, got {model.kind}")
    an = _alpha_nuc(layer)
    if an is None or model.p_tq == 0:
        return np.zeros(layer.n_qubits)
    p = model.p_tq
    return 4 * an * p / (1 + p * (4 * an - 1))


def depol_probabilities_ratio(layer: MQLayer, model: NoiseModel) -> np.ndarray:
    """Same probabilities through the explicit ``delta_sq`` form."""
    an = _alpha_nuc(layer)
    if an is None or model.p_tq == 0:
        return np.zeros(layer.n_qubits)
    return an / (an + model.delta_sq)


def dephase_probabilities(layer: MQLayer, model: NoiseModel) -> np.ndarray:
    """``p_tq`` on every qubit with a nonzero coupling, else 0."""
    if model.kind != "dephasing":
        raise ValueError(f"expected a dephasing model, got {model.kind}")
    out = np.zeros(layer.n_qubits)
    out[sorted(layer.active_qubits())] = model.p_tq
    return out
