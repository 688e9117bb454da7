import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqcompile.mqlayer import MQLayer, nuclear_norm, participation
from mqcompile.noise import NoiseModel, dephase_probabilities, depol_probabilities, depol_probabilities_ratio

Q = math.pi / 4


def test_model_validation():
    with pytest.raises(ValueError):
        NoiseModel("thermal", 0.1)
    with pytest.raises(ValueError):
        NoiseModel("depolarization", 1.0)
    assert NoiseModel("depol", 0.1).kind == "depolarization"
    with pytest.raises(ValueError):
        NoiseModel("depolarization", 0.0).delta_sq


def test_delta_sq():
    m = NoiseModel("depolarization", 0.01)
    assert abs(m.delta_sq - 0.99 / 0.04) < 1e-12


@pytest.mark.parametrize("p", [1e-4, 1e-3, 1e-2, 0.2])
def test_single_pair_gauge(p):
    pn = depol_probabilities(MQLayer(3, {(0, 2): Q}), NoiseModel("depolarization", p))
    assert abs(pn[0] - p) < 1e-14 and abs(pn[2] - p) < 1e-14 and pn[1] == 0


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_disjoint_pairs_equivalence(k):
    p = 3e-3
    layer = MQLayer(2 * k, {(2 * j, 2 * j + 1): Q for j in range(k)})
    assert np.allclose(participation(layer), 1 / (2 * k))
    assert abs(nuclear_norm(layer) - k / 2) < 1e-14
    assert np.abs(depol_probabilities(layer, NoiseModel("depolarization", p)) - p).max() < 1e-14


def test_zero_rate_and_empty_layer():
    assert np.all(depol_probabilities(MQLayer(2, {(0, 1): Q}), NoiseModel("depolarization", 0.0)) == 0)
    assert np.all(depol_probabilities(MQLayer(3, {}), NoiseModel("depolarization", 0.1)) == 0)


def test_dephasing():
    m = NoiseModel("dephasing", 0.02)
    assert np.all(dephase_probabilities(MQLayer(4, {}), m) == 0)
    assert np.allclose(dephase_probabilities(MQLayer(4, {(0, 1): 1e-3, (1, 3): 0.5}), m), [0.02, 0.02, 0, 0.02])
    full = MQLayer(10, {(a, b): 0.1 for a in range(10) for b in range(a + 1, 10)})
    assert np.all(dephase_probabilities(full, m) == 0.02)
    with pytest.raises(ValueError):
        dephase_probabilities(full, NoiseModel("depolarization", 0.1))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1e-4, 1e-3, 1e-2]))
def test_closed_forms_agree(seed, p):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    layer = MQLayer(n, {(a, b): rng.uniform(-1, 1) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.5} or {(0, 1): 0.3})
    m = NoiseModel("depolarization", p)
    a, b = depol_probabilities(layer, m), depol_probabilities_ratio(layer, m)
    assert np.abs(a - b).max() < 1e-14
    assert np.all((a >= 0) & (a < 1))


def test_monotone_in_weight():
    m = NoiseModel("depolarization", 1e-3)
    ps = [depol_probabilities(MQLayer(2, {(0, 1): t}), m)[0] for t in np.linspace(0.01, 1.5, 40)]
    assert np.all(np.diff(ps) > 0)
