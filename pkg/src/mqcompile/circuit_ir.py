"""Circuit containers, builders, dense evaluation and the ``.qvc`` text format.

Two circuit shapes are used:

* :class:`CircuitIR`: layers of SU(4) blocks on disjoint qubit pairs, as in
  a quantum-volume circuit, optionally followed by a qubit permutation.
* :class:`CompiledCircuit`: an alternating list of single-qubit layers and
  :class:`~mqcompile.mqlayer.MQLayer` records.

Operation lists are always in application order (first applied first).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .linalg import H, I2, check_unitary, rz
from .mqlayer import MQLayer

FORMAT_VERSION = 1
MAX_DENSE_QUBITS = 12


class FormatError(ValueError):
    """Malformed circuit document; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str, line: int | None = None):
        self.path, self.line = path, line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{path}: {msg}")


def _check_perm(perm: Sequence[int], n: int, path: str = "permutation") -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(n)):
        raise FormatError(path, f"not a permutation of range({n}): {perm}")
    return perm


@dataclass(frozen=True)
class SU4Layer:
    """Disjoint two-qubit blocks applied in parallel.

    ``gates[k]`` acts on ``pairs[k]`` with the first qubit of the pair as
    the more significant tensor factor. ``permutation[i] = j`` sends the
    state of wire ``i`` to wire ``j`` after the blocks.
    """

    pairs: tuple[tuple[int, int], ...]
    gates: tuple[np.ndarray, ...]
    permutation: tuple[int, ...] | None = None

    def validate(self, n: int, path: str = "layer") -> None:
        if len(self.pairs) != len(self.gates):
            raise FormatError(path, "pairs and gates differ in length")
        seen: set[int] = set()
        for k, (a, b) in enumerate(self.pairs):
            for q in (a, b):
                if not 0 <= q < n:
                    raise FormatError(f"{path}.pairs[{k}]", f"qubit {q} out of range [0, {n})")
                if q in seen:
                    raise FormatError(f"{path}.pairs[{k}]", f"qubit {q} used twice in the layer")
                seen.add(q)
            if a == b:
                raise FormatError(f"{path}.pairs[{k}]", "pair must name two qubits")
            g = np.asarray(self.gates[k])
            if g.shape != (4, 4):
                raise FormatError(f"{path}.gates[{k}]", f"expected 4x4, got {g.shape}")
        if self.permutation is not None:
            _check_perm(self.permutation, n, f"{path}.permutation")


@dataclass(frozen=True)
class CircuitIR:
    n_qubits: int
    layers: tuple[SU4Layer, ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise FormatError("n_qubits", "must be positive")
        for i, layer in enumerate(self.layers):
            layer.validate(self.n_qubits, f"layers[{i}]")

    @property
    def depth(self) -> int:
        return len(self.layers)

    def blocks(self) -> Iterable[tuple[int, int, tuple[int, int], np.ndarray]]:
        for li, layer in enumerate(self.layers):
            for k, (p, g) in enumerate(zip(layer.pairs, layer.gates)):
                yield li, k, p, g


@dataclass(frozen=True)
class SingleQubitLayer:
    """Independent single-qubit gates; qubits not listed are idle."""

    n_qubits: int
    gates: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for q in self.gates:
            if not 0 <= q < self.n_qubits:
                raise FormatError("gates", f"qubit {q} out of range")
        object.__setattr__(self, "gates", dict(sorted(self.gates.items())))


Op = Union[SingleQubitLayer, MQLayer]


@dataclass(frozen=True)
class CompiledCircuit:
    n_qubits: int
    ops: tuple[Op, ...] = ()
    output_permutation: tuple[int, ...] | None = None

    @property
    def mq_layers(self) -> list[MQLayer]:
        return [op for op in self.ops if isinstance(op, MQLayer)]

    @property
    def mq_count(self) -> int:
        return len(self.mq_layers)

    def coupling_count(self, atol: float = 1e-12) -> int:
        return sum(layer.nonzero_count(atol) for layer in self.mq_layers)


# ---------------------------------------------------------------------------
# Haar sampling and builders


class HaarSampler:
    """Deterministic stream of Haar-random special unitaries."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.counter = 0
        self.rng = np.random.default_rng(self.seed)

    def unitary(self, d: int = 4) -> np.ndarray:
        z = (self.rng.standard_normal((d, d)) + 1j * self.rng.standard_normal((d, d))) / math.sqrt(2)
        q, r = np.linalg.qr(z)
        ph = np.diag(r) / np.abs(np.diag(r))
        self.counter += 1
        return q * ph[None, :]

    def su(self, d: int = 4) -> np.ndarray:
        u = self.unitary(d)
        return u / np.linalg.det(u) ** (1.0 / d)

    def su4(self) -> np.ndarray:
        return self.su(4)

    def permutation(self, n: int) -> np.ndarray:
        return self.rng.permutation(n)


def random_pairs(sampler: HaarSampler, n: int) -> tuple[tuple[int, int], ...]:
    """Uniform perfect matching from a random permutation; odd n leaves one qubit idle."""
    p = sampler.permutation(n)
    return tuple((int(p[2 * k]), int(p[2 * k + 1])) for k in range(n // 2))


def generate_qv_circuit(n: int, seed: int, depth: int | None = None) -> CircuitIR:
    """Quantum-volume circuit: ``depth`` (default ``n``) layers of Haar SU(4) blocks."""
    if n < 2:
        raise ValueError(f"quantum-volume circuits need at least 2 qubits, got {n}")
    s = HaarSampler(seed)
    layers = []
    for _ in range(n if depth is None else depth):
        pairs = random_pairs(s, n)
        layers.append(SU4Layer(pairs, tuple(s.su4() for _ in pairs)))
    return CircuitIR(n, tuple(layers))


def toffoli_mq_circuit() -> CompiledCircuit:
    """Toffoli on 3 qubits (target 0, controls 1 and 2) with three MQ layers.

    Exponentials ``exp(-i t Z)`` are written as ``R_z(2t)``.
    """
    n = 3
    q8, q4 = math.pi / 8, math.pi / 4
    big = MQLayer(n, {(0, 1): q4, (0, 2): q4})
    loc = SingleQubitLayer(n, {1: rz(2 * q4), 2: rz(2 * q4)})
    had = SingleQubitLayer(n, {0: H})
    ops: list[Op] = [
        big,
        loc,
        had,
        SingleQubitLayer(n, {0: rz(-2 * q8)}),
        had,
        big,
        loc,
        had,
        MQLayer(n, {(0, 1): q8, (0, 2): q8, (1, 2): q8}),
        SingleQubitLayer(n, {0: rz(2 * q8), 1: rz(2 * q8), 2: rz(2 * q8)}),
        had,
    ]
    return CompiledCircuit(n, tuple(ops))


def toffoli_matrix() -> np.ndarray:
    """8x8 Toffoli with target qubit 0 (most significant) and controls 1, 2."""
    t = np.eye(8, dtype=complex)
    t[[3, 7]] = t[[7, 3]]
    return t


# ---------------------------------------------------------------------------
# Dense kernels on batches of states, shape (batch, 2**n)


def apply_single(states: np.ndarray, g: np.ndarray, q: int, n: int) -> np.ndarray:
    b = states.shape[0]
    t = states.reshape(b, 2**q, 2, 2 ** (n - q - 1))
    return np.einsum("ij,bajc->baic", g, t).reshape(b, -1)


def apply_pair(states: np.ndarray, g: np.ndarray, q1: int, q2: int, n: int) -> np.ndarray:
    b = states.shape[0]
    t = states.reshape((b,) + (2,) * n)
    g4 = np.asarray(g).reshape(2, 2, 2, 2)
    out = np.tensordot(t, g4, axes=([q1 + 1, q2 + 1], [2, 3]))
    out = np.moveaxis(out, [-2, -1], [q1 + 1, q2 + 1])
    return out.reshape(b, -1)


def apply_permutation(states: np.ndarray, perm: Sequence[int], n: int) -> np.ndarray:
    b = states.shape[0]
    t = states.reshape((b,) + (2,) * n)
    t = np.moveaxis(t, [1 + i for i in range(n)], [1 + p for p in perm])
    return t.reshape(b, -1)


def apply_ops(states: np.ndarray, c: Union[CircuitIR, CompiledCircuit]) -> np.ndarray:
    n = c.n_qubits
    if isinstance(c, CircuitIR):
        for layer in c.layers:
            for (a, b), g in zip(layer.pairs, layer.gates):
                states = apply_pair(states, g, a, b, n)
            if layer.permutation is not None:
                states = apply_permutation(states, layer.permutation, n)
        return states
    for op in c.ops:
        if isinstance(op, MQLayer):
            states = states * op.phase_vector()[None, :]
        else:
            for q, g in op.gates.items():
                states = apply_single(states, g, q, n)
    if c.output_permutation is not None:
        states = apply_permutation(states, c.output_permutation, n)
    return states


def circuit_unitary(c: Union[CircuitIR, CompiledCircuit]) -> np.ndarray:
    """Dense unitary of a circuit; refuses registers above 12 qubits."""
    n = c.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense unitary limited to {MAX_DENSE_QUBITS} qubits, got {n}")
    basis = np.eye(2**n, dtype=complex)
    return apply_ops(basis, c).T


def permutation_matrix(perm: Sequence[int], n: int) -> np.ndarray:
    return apply_permutation(np.eye(2**n, dtype=complex), perm, n).T


def absorb_permutations(c: CircuitIR) -> tuple[CircuitIR, tuple[int, ...]]:
    """Fold permutation layers into the pairings of later layers.

    Returns ``(c2, sigma)`` with ``U(c) = P_sigma U(c2)`` and no permutations in ``c2``.
    """
    n = c.n_qubits
    where = list(range(n))  # where[w]: wire in c2 holding what c sees on wire w
    layers = []
    sigma = list(range(n))  # sigma[i]: final wire in c of the data on wire i of c2
    for layer in c.layers:
        pairs = tuple((where[a], where[b]) for a, b in layer.pairs)
        layers.append(SU4Layer(pairs, layer.gates))
        if layer.permutation is not None:
            new_where = [0] * n
            for w in range(n):
                new_where[layer.permutation[w]] = where[w]
            where = new_where
    for w in range(n):
        sigma[where[w]] = w
    return CircuitIR(n, tuple(layers)), tuple(sigma)


# ---------------------------------------------------------------------------
# Serialization


def _cmat(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _dump(obj) -> str:
    return json.dumps(obj, separators=(", ", ": "), allow_nan=False)


def serialize(c: Union[CircuitIR, CompiledCircuit]) -> str:
    """``.qvc`` text: a JSON document with one layer per line."""
    if isinstance(c, CircuitIR):
        kind = "ir"
        layers = []
        for layer in c.layers:
            d = {"kind": "su4", "pairs": [list(p) for p in layer.pairs], "gates": [_cmat(g) for g in layer.gates]}
            if layer.permutation is not None:
                d["permutation"] = list(layer.permutation)
            layers.append(d)
        extra = {}
    else:
        kind = "compiled"
        layers = []
        for op in c.ops:
            if isinstance(op, MQLayer):
                layers.append({"kind": "mq", "couplings": [[a, b, t] for (a, b), t in op.couplings.items()]})
            else:
                layers.append({"kind": "single", "gates": [[q, _cmat(g)] for q, g in op.gates.items()]})
        extra = {}
        if c.output_permutation is not None:
            extra["output_permutation"] = list(c.output_permutation)
    head = {"version": FORMAT_VERSION, "type": kind, "n_qubits": c.n_qubits, **extra}
    lines = ["{"]
    for k, v in head.items():
        lines.append(f"  {json.dumps(k)}: {_dump(v)},")
    lines.append('  "layers": [')
    body = [f"    {_dump(d)}" for d in layers]
    lines.append(",\n".join(body))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _parse_cmat(v, shape: tuple[int, int], path: str) -> np.ndarray:
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(path, f"bad complex matrix ({exc})") from None
    if a.shape != shape + (2,):
        raise FormatError(path, f"expected {shape} complex entries as [re, im], got shape {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def _layer_lines(text: str) -> list[int]:
    """Best-effort line number of each layer entry (one layer per line when written by us)."""
    out = []
    for i, line in enumerate(text.splitlines(), 1):
        if line.lstrip().startswith('{"kind"'):
            out.append(i)
    return out


def deserialize(text: str) -> Union[CircuitIR, CompiledCircuit]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("<document>", exc.msg, exc.lineno) from None
    if not isinstance(doc, dict):
        raise FormatError("<document>", "top level must be an object")
    lines = _layer_lines(text)
    if "version" not in doc:
        raise FormatError("version", "missing mandatory field")
    if doc["version"] != FORMAT_VERSION:
        raise FormatError("version", f"unsupported version {doc['version']!r}")
    n = doc.get("n_qubits")
    if not isinstance(n, int) or n < 1:
        raise FormatError("n_qubits", f"must be a positive integer, got {n!r}")
    kind = doc.get("type")
    layers = doc.get("layers")
    if not isinstance(layers, list):
        raise FormatError("layers", "must be a list")

    def line_of(i):
        return lines[i] if len(lines) == len(layers) else None

    if kind == "ir":
        out = []
        for i, d in enumerate(layers):
            path = f"layers[{i}]"
            if not isinstance(d, dict) or d.get("kind") != "su4":
                raise FormatError(f"{path}.kind", "IR documents hold only 'su4' layers", line_of(i))
            try:
                pairs = tuple((int(a), int(b)) for a, b in d["pairs"])
                gates = tuple(_parse_cmat(g, (4, 4), f"{path}.gates[{k}]") for k, g in enumerate(d["gates"]))
                perm = d.get("permutation")
                layer = SU4Layer(pairs, gates, None if perm is None else tuple(int(p) for p in perm))
                layer.validate(n, path)
            except FormatError as exc:
                raise FormatError(exc.path, str(exc).split(": ", 1)[-1], line_of(i)) from None
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(path, f"malformed su4 layer ({exc})", line_of(i)) from None
            out.append(layer)
        return CircuitIR(n, tuple(out))
    if kind == "compiled":
        ops: list[Op] = []
        for i, d in enumerate(layers):
            path = f"layers[{i}]"
            k = d.get("kind") if isinstance(d, dict) else None
            try:
                if k == "mq":
                    cp = {}
                    for j, item in enumerate(d["couplings"]):
                        a, b, t = item
                        if not (0 <= int(a) < n and 0 <= int(b) < n) or a == b:
                            raise FormatError(f"{path}.couplings[{j}]", f"bad pair ({a}, {b})")
                        cp[(int(a), int(b))] = cp.get((int(a), int(b)), 0.0) + float(t)
                    ops.append(MQLayer(n, cp))
                elif k == "single":
                    gates = {}
                    for j, (q, g) in enumerate(d["gates"]):
                        if not 0 <= int(q) < n:
                            raise FormatError(f"{path}.gates[{j}]", f"qubit {q} out of range")
                        gates[int(q)] = _parse_cmat(g, (2, 2), f"{path}.gates[{j}]")
                    ops.append(SingleQubitLayer(n, gates))
                else:
                    raise FormatError(f"{path}.kind", f"expected 'mq' or 'single', got {k!r}")
            except FormatError as exc:
                raise FormatError(exc.path, str(exc).split(": ", 1)[-1], line_of(i)) from None
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(path, f"malformed layer ({exc})", line_of(i)) from None
        perm = doc.get("output_permutation")
        if perm is not None:
            perm = _check_perm(perm, n, "output_permutation")
        return CompiledCircuit(n, tuple(ops), perm)
    raise FormatError("type", f"expected 'ir' or 'compiled', got {kind!r}")


def save(c: Union[CircuitIR, CompiledCircuit], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(c))


def load(path: str) -> Union[CircuitIR, CompiledCircuit]:
    with open(path, encoding="utf-8") as fh:
        return deserialize(fh.read())
