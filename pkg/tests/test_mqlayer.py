import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from mqcompile.linalg import H, I2, Z, exp_pp, kron, phase_distance
from mqcompile.mqlayer import MQLayer, fuse, nuclear_norm, participation, xx_to_zz


def _zz(n, a, b):
    ops = [I2] * n
    ops[a] = ops[b] = Z
    return kron(*ops)


def _random_layer(rng, n, density=0.6):
    c = {}
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < density:
                c[(a, b)] = rng.uniform(-1, 1)
    return MQLayer(n, c)


def test_unitary_matches_expm(rng):
    layer = _random_layer(rng, 4)
    gen = sum(t * _zz(4, a, b) for (a, b), t in layer.couplings.items())
    assert np.abs(layer.unitary() - expm(1j * gen)).max() < 1e-12


def test_matrix_symmetric_zero_diagonal(rng):
    m = _random_layer(rng, 5).matrix()
    assert np.allclose(m, m.T) and np.allclose(np.diag(m), 0)


def test_nuc_anchor_values():
    assert abs(nuclear_norm(MQLayer(2, {(0, 1): math.pi / 4})) - 0.5) < 1e-15
    assert nuclear_norm(MQLayer(3, {})) == 0.0
    assert abs(nuclear_norm(MQLayer(4, {(0, 1): math.pi / 4, (2, 3): math.pi / 4})) - 1.0) < 1e-14


def test_participation_cases():
    a = participation(MQLayer(3, {(0, 1): 0.3}))
    assert np.allclose(a, [0.5, 0.5, 0])
    star = participation(MQLayer(5, {(0, k): 0.2 for k in range(1, 5)}))
    assert np.allclose(star, [0.5, 0.125, 0.125, 0.125, 0.125])
    with pytest.raises(ValueError):
        participation(MQLayer(3, {}))


def test_participation_normalized(rng):
    for _ in range(20):
        layer = _random_layer(rng, 6)
        if layer.couplings:
            assert abs(participation(layer).sum() - 1) < 1e-12


def test_fuse_inverse_and_disjoint():
    a = MQLayer(4, {(0, 1): 0.3, (1, 2): -0.2})
    assert fuse(a, a.scaled(-1)).nonzero_count() == 0
    d = fuse(MQLayer(4, {(0, 1): 0.1}), MQLayer(4, {(2, 3): 0.2}))
    assert d.couplings == {(0, 1): 0.1, (2, 3): 0.2}


def test_fuse_dense_oracle(rng):
    for _ in range(100):
        n = int(rng.integers(2, 7))
        a, b = _random_layer(rng, n), _random_layer(rng, n)
        assert phase_distance(fuse(a, b).unitary(), b.unitary() @ a.unitary()) < 1e-12


def test_xx_to_zz():
    pre, zz, post = xx_to_zz((0, 1), 0.0)
    assert all(np.allclose(g, I2) for g in pre.values()) and zz[(0, 1)] == 0.0
    pre, zz, post = xx_to_zz((0, 1), math.pi / 4)
    u = kron(post[0], post[1]) @ MQLayer(2, zz).unitary() @ kron(pre[0], pre[1])
    assert phase_distance(u, exp_pp("X", math.pi / 4)) < 1e-14
    assert phase_distance(H @ H, I2) < 1e-15


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10**6), st.floats(0, 5))
def test_nuc_properties(n, seed, c):
    rng = np.random.default_rng(seed)
    layer = _random_layer(rng, n)
    nuc = nuclear_norm(layer)
    assert abs(nuclear_norm(layer.scaled(c)) - c * nuc) < 1e-10 * (1 + c * nuc)
    perm = rng.permutation(n)
    relabeled = MQLayer(n, {(int(perm[a]), int(perm[b])): t for (a, b), t in layer.couplings.items()})
    assert abs(nuclear_norm(relabeled) - nuc) < 1e-12
    # Direct sum with a disjoint copy doubles the norm.
    shifted = MQLayer(2 * n, {**layer.couplings, **{(a + n, b + n): t for (a, b), t in layer.couplings.items()}})
    assert abs(nuclear_norm(shifted) - 2 * nuc) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_fuse_algebra(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (_random_layer(rng, 5) for _ in range(3))
    ab = fuse(fuse(a, b), c).couplings
    bc = fuse(a, fuse(b, c)).couplings
    assert ab.keys() == bc.keys() and all(abs(ab[k] - bc[k]) < 1e-14 for k in ab)
    x, y = fuse(a, b).couplings, fuse(b, a).couplings
    assert all(abs(x[k] - y[k]) < 1e-15 for k in x)
