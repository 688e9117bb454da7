import math

import numpy as np
import pytest

from conftest import haar_su4
from mqcompile.cartan import cartan_decompose, l1_phases
from mqcompile.circuit_ir import CircuitIR, SU4Layer, circuit_unitary, generate_qv_circuit, serialize
from mqcompile.linalg import canonical_exp, phase_distance
from mqcompile.optimizer import (
    CompileOptions,
    cartan_baseline_nuc,
    compile_circuit,
    compile_fused,
    compile_naive,
    compile_optimized,
    optimize_block_ry,
)

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def _identity_circuit(n, depth):
    pairs = tuple((2 * k, 2 * k + 1) for k in range(n // 2))
    return CircuitIR(n, tuple(SU4Layer(pairs, tuple(np.eye(4, dtype=complex) for _ in pairs)) for _ in range(depth)))


def test_options_validation():
    with pytest.raises(ValueError):
        CompileOptions(mode="fast")
    with pytest.raises(ValueError):
        CompileOptions(ry_grid_points=4)
    with pytest.raises(ValueError):
        CompileOptions(refine_tolerance=0)
    with pytest.raises(ValueError):
        CompileOptions(objective="l2")


def test_single_layer_counts():
    c = generate_qv_circuit(2, 0, depth=1)
    assert compile_naive(c).mq_count == 3
    assert compile_fused(c).mq_count == 3


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_modes_preserve_unitary(n):
    c = generate_qv_circuit(n, 10 + n)
    u = circuit_unitary(c)
    for mode in ("naive3L", "fused", "fused+optimized"):
        cc, rep = compile_circuit(c, CompileOptions(mode=mode))
        assert phase_distance(circuit_unitary(cc), u) < 1e-7
        assert cc.mq_count == (3 * n if mode == "naive3L" else 2 * n + 1)


def test_identity_blocks():
    c = _identity_circuit(4, 3)
    for cc in (compile_naive(c), compile_fused(c), compile_optimized(c)[0]):
        assert all(abs(t) < 1e-9 for layer in cc.mq_layers for t in layer.couplings.values())
    cc, rep = compile_optimized(c)
    assert rep.total_nuc < 1e-9
    assert cartan_baseline_nuc(c) < 1e-12


def test_cartan_baseline_values():
    c = CircuitIR(2, (SU4Layer(((0, 1),), (CNOT,)),))
    assert abs(cartan_baseline_nuc(c) - 0.5) < 1e-10
    c2 = generate_qv_circuit(4, 3)
    head = CircuitIR(4, c2.layers[:2])
    tail = CircuitIR(4, c2.layers[2:])
    assert abs(cartan_baseline_nuc(c2) - cartan_baseline_nuc(head) - cartan_baseline_nuc(tail)) < 1e-12


def test_block_ry_known_cases():
    r = optimize_block_ry(canonical_exp(0.1, 0.2, 0.3))
    assert r.bound_met and abs(r.l1 - 0.6) < 1e-6
    r = optimize_block_ry(CNOT)
    assert abs(r.l1 - math.pi / 4) < 1e-6
    y0, y1, lh = r
    assert abs(lh.l1() - r.l1) < 1e-15


def test_block_ry_haar_subset():
    for s in range(10):
        g = haar_su4(500 + s)
        r = optimize_block_ry(g)
        assert r.bound_met
        assert r.l1 <= l1_phases(cartan_decompose(g)) + 1e-8


def test_optimized_not_worse_than_fused():
    for seed in range(3):
        c = generate_qv_circuit(6, seed)
        _, fused = compile_circuit(c, CompileOptions(mode="fused"))
        _, opt = compile_circuit(c)
        assert opt.total_nuc <= fused.total_nuc + 1e-9
        assert opt.ratio <= 1 + 1e-9
        assert abs(opt.ratio - opt.total_nuc / opt.cartan_baseline_nuc) < 1e-15
        assert abs(sum(opt.layer_nuc) - opt.total_nuc) < 1e-12


def test_nuc_objective_variant_is_valid():
    c = generate_qv_circuit(4, 2)
    cc, rep = compile_circuit(c, CompileOptions(objective="nuc"))
    assert phase_distance(circuit_unitary(cc), circuit_unitary(c)) < 1e-7
    assert rep.ratio < 1


def test_determinism():
    c = generate_qv_circuit(5, 3)
    a, ra = compile_circuit(c)
    b, rb = compile_circuit(c)
    assert serialize(a) == serialize(b)
    assert ra.total_nuc == rb.total_nuc


def test_report_dict_keys():
    _, rep = compile_circuit(generate_qv_circuit(3, 0), CompileOptions(mode="fused"))
    d = rep.to_dict()
    assert {"total_nuc", "cartan_baseline_nuc", "ratio", "layer_nuc", "wall_time", "mq_count"} <= set(d)
