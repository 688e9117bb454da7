import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import haar_su4
from mqcompile.cartan import cartan_decompose, cartan_volume, l1_phases
from mqcompile.lhdecomp import cv_sinusoid, lh_decompose, lh_l1_batch, lh_phases_batch, rh_decompose, shifted_volume
from mqcompile.linalg import canonical_exp, dagger, exp_zz, phase_distance

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
XI = np.linspace(-math.pi / 2, math.pi / 2, 64)


def test_sinusoid_canonical_input():
    s = cv_sinusoid(canonical_exp(0.1, 0.2, 0.3))
    assert abs(s.xi0 - 0.3) < 1e-12
    assert abs(s.amplitude - math.sin(0.2) * math.sin(0.4)) < 1e-12


def test_sinusoid_cnot_degenerate():
    s = cv_sinusoid(CNOT)
    assert s.degenerate and s.amplitude < 1e-12


def test_sinusoid_law_grid():
    for seed in range(100):
        u = haar_su4(seed)
        s = cv_sinusoid(u)
        direct = np.array([cartan_volume(u @ exp_zz(-x)) for x in XI])
        assert np.abs(direct - s.model(XI)).max() < 1e-9
        assert np.abs(direct - s(XI)).max() < 1e-9
        assert s.amplitude >= 0 and -math.pi / 4 < s.xi0 <= math.pi / 4


def test_shifted_volume_matches_product():
    u = haar_su4(9)
    for x in (-0.5, 0.1, 0.7):
        assert abs(shifted_volume(u, x) - cartan_volume(u @ exp_zz(-x))) < 1e-12


def test_unique_root_in_range():
    grid = np.linspace(-math.pi / 4, math.pi / 4, 257)
    for seed in range(100):
        s = cv_sinusoid(haar_su4(seed))
        if s.amplitude <= 1e-6:
            continue
        v = s(grid)
        # v(x + pi/2) = -v(x), so the endpoint samples differ in sign and one crossing is expected.
        crossings = np.sum(np.sign(v[1:]) != np.sign(v[:-1]))
        assert crossings == 1
        k = int(np.flatnonzero(np.sign(v[1:]) != np.sign(v[:-1]))[0])
        assert grid[k] - 1e-12 <= s.xi0 <= grid[k + 1] + 1e-12


def test_lh_pure_zz():
    # Convention: the leading phase equals +theta and the residual is the identity.
    lh = lh_decompose(exp_zz(0.3))
    assert abs(lh.leading_zz_phase - 0.3) < 1e-12
    assert l1_phases(lh.residual) < 1e-12


def test_lh_cnot():
    lh = lh_decompose(CNOT)
    assert lh.degenerate
    assert phase_distance(lh.unitary(), CNOT) < 1e-10
    assert abs(lh.l1() - math.pi / 4) < 1e-10


def test_lh_haar():
    for seed in range(200):
        u = haar_su4(seed)
        lh = lh_decompose(u)
        assert phase_distance(lh.unitary(), u) < 1e-9
        assert np.min(np.abs(lh.residual.thetas)) < 1e-9
        assert abs(cartan_volume(u @ exp_zz(-lh.leading_zz_phase))) < 1e-10
        assert lh.l1() >= l1_phases(cartan_decompose(u)) - 1e-10


def test_rh_pure_zz_and_mirror():
    rh = rh_decompose(exp_zz(0.3))
    assert abs(rh.trailing_zz_phase - 0.3) < 1e-12
    for seed in range(50):
        u = haar_su4(seed)
        rh = rh_decompose(u)
        lh = lh_decompose(dagger(u))
        assert phase_distance(rh.unitary(), u) < 1e-10
        assert abs(rh.trailing_zz_phase + lh.leading_zz_phase) < 1e-12
        assert phase_distance(dagger(rh.unitary()), lh.unitary()) < 1e-10


def test_batch_matches_scalar():
    us = np.array([haar_su4(s) for s in range(64)])
    x, th = lh_phases_batch(us)
    for u, xi, l1 in zip(us, x, lh_l1_batch(us)):
        lh = lh_decompose(u)
        assert abs(xi - lh.leading_zz_phase) < 1e-9
        assert abs(l1 - lh.l1()) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**7), st.floats(-3, 3))
def test_zz_shift_moves_root(seed, t):
    u = haar_su4(seed)
    a = cv_sinusoid(u)
    b = cv_sinusoid(u @ exp_zz(t))
    # Right-multiplying by exp(i t ZZ) translates the sinusoid by t modulo pi/2.
    d = math.remainder(b.xi0 - a.xi0 - t, math.pi / 2)
    assert abs(d) < 1e-8
    assert abs(a.amplitude - b.amplitude) < 1e-10
