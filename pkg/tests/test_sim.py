import math

import numpy as np
import pytest

from mqcompile.circuit_ir import CompiledCircuit, SingleQubitLayer, circuit_unitary, generate_qv_circuit
from mqcompile.linalg import H, phase_distance
from mqcompile.mqlayer import MQLayer
from mqcompile.noise import NoiseModel
from mqcompile.sim import (
    TQ_MODE,
    QVHarness,
    _inject,
    apply_gate,
    decide,
    default_shots,
    dephasing_events,
    final_state,
    heavy_output_probability,
    heavy_set,
    ideal_probabilities,
    qv_pass,
    realize,
    reports_to_csv,
    resolution,
    sequential_tq_realization,
    zero_state,
)


def _random_state(rng, n):
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return v / np.linalg.norm(v)


def test_apply_zero_mq_is_identity(rng):
    psi = _random_state(rng, 3)
    assert np.allclose(apply_gate(psi, MQLayer(3, {})), psi)


def test_mq_matches_dense(rng):
    layer = MQLayer(4, {(0, 1): 0.3, (1, 3): -0.7, (0, 2): 1.1})
    psi = _random_state(rng, 4)
    out = apply_gate(psi, layer)
    assert np.abs(out - layer.unitary() @ psi).max() < 1e-12
    assert abs(np.linalg.norm(out) - 1) < 1e-12


def test_bell_statistics():
    psi = zero_state(2)
    psi = apply_gate(apply_gate(psi, H, 0), H, 1)
    psi = apply_gate(psi, MQLayer(2, {(0, 1): math.pi / 4}))
    psi = apply_gate(apply_gate(psi, H, 0), H, 1)
    assert np.allclose(np.abs(psi) ** 2, [0.5, 0, 0, 0.5], atol=1e-12)


def test_gate_errors(rng):
    psi = _random_state(rng, 2)
    with pytest.raises(IndexError):
        apply_gate(psi, H, 5)
    with pytest.raises(ValueError):
        apply_gate(psi, np.eye(4), 0)


def test_norm_preserved_through_circuit():
    cc = realize(generate_qv_circuit(5, 1), "fused")
    assert abs(np.linalg.norm(final_state(cc)) - 1) < 1e-10


def test_heavy_set_strict_median(rng):
    for n in (2, 4, 6):
        p = rng.dirichlet(np.ones(2**n))
        assert heavy_set(p).sum() <= 2 ** (n - 1)
    # Identity circuit: median is 0 so only the certain outcome is heavy.
    cc = CompiledCircuit(3, (SingleQubitLayer(3, {}),))
    assert heavy_set(ideal_probabilities(cc)).sum() == 1
    assert heavy_output_probability(cc, None, 50, 0) == 1.0


def test_dephasing_correlation_decay():
    # Bell pair (|00> + |11>)/sqrt2; a Z on qubit 0 flips <XX>, so <XX> = 1 - 2p.
    p, shots = 0.2, 40_000
    st = np.zeros((shots, 4), complex)
    st[:, 0] = st[:, 3] = 1 / math.sqrt(2)
    st = _inject(st, np.array([p, 0.0]), np.random.default_rng(4), "dephasing", 2)
    xx = np.real(st[:, 0].conj() * st[:, 3] + st[:, 3].conj() * st[:, 0] + st[:, 1].conj() * st[:, 2] + st[:, 2].conj() * st[:, 1])
    sigma = math.sqrt((1 - (1 - 2 * p) ** 2) / shots)
    assert abs(xx.mean() - (1 - 2 * p)) < 3 * sigma


def test_sequential_realization():
    c = generate_qv_circuit(4, 2)
    tq = sequential_tq_realization(c)
    assert tq.mq_count == 24
    assert all(len(layer.couplings) == 1 for layer in tq.mq_layers)
    assert phase_distance(circuit_unitary(tq), circuit_unitary(c)) < 1e-8


def test_sequential_gate_noise_is_gauge_anchor():
    layer = MQLayer(4, {(1, 3): math.pi / 4})
    p = NoiseModel("depolarization", 1e-3).probabilities(layer)
    assert abs(p[1] - 1e-3) < 1e-15 and abs(p[3] - 1e-3) < 1e-15


def test_event_ratio_near_two_thirds():
    c = generate_qv_circuit(6, 0)
    r = dephasing_events(realize(c, "fused")) / dephasing_events(sequential_tq_realization(c))
    assert abs(r - 13 / 18) < 1e-12


def test_schedules():
    assert default_shots(4) == 10_000 and default_shots(20) == 160_000
    assert resolution(4) == 1e-3 and abs(resolution(20) - 2.5e-4) < 1e-18


def test_decide_rule():
    mean, se, ok = decide([0.8] * 100)
    assert abs(se - math.sqrt(0.16 / 100)) < 1e-15 and ok
    assert not decide([0.7] * 100)[2]


def test_ideal_pass_and_depolarized_fail():
    rep = qv_pass(4, "fused", NoiseModel(), n_circuits=60, shots=100)
    assert rep.passed and 0.78 < rep.mean_hop < 0.9
    bad = qv_pass(6, "fused", NoiseModel("depolarization", 0.5), n_circuits=10, shots=100)
    assert not bad.passed and abs(bad.mean_hop - 0.5) < 0.06


def test_report_determinism_and_csv():
    h = QVHarness(3, TQ_MODE, n_circuits=5, shots=50)
    a = h.report(NoiseModel("dephasing", 0.05))
    b = QVHarness(3, TQ_MODE, n_circuits=5, shots=50).report(NoiseModel("dephasing", 0.05))
    assert a == b
    text = reports_to_csv([a, b])
    assert text.count("\n") == 3 and "mean_hop" in text.splitlines()[0]


def test_threshold_bisection_contract():
    h = QVHarness(4, "fused", n_circuits=60, shots=100)
    dp = 0.004
    p, trail = h.threshold("depolarization", p_hi=0.2, dp=dp)
    assert p > 0
    assert h.report(NoiseModel("depolarization", p)).passed
    assert not h.report(NoiseModel("depolarization", p + dp)).passed or p + dp > 0.2 - 1e-12
    assert trail[0].p_tq == 0.0 and trail[0].passed


def test_common_random_numbers_monotone():
    h = QVHarness(4, "fused", n_circuits=10, shots=200)
    hops = [h.report(NoiseModel("dephasing", p)).mean_hop for p in (0.0, 0.02, 0.1, 0.3)]
    assert hops[0] >= hops[-1]
