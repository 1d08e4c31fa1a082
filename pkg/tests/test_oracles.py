import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curveflow.oracles import (
    EXTINCT,
    DegenerateConfigurationError,
    MultiphaseStats,
    circle_radius_exact,
    double_bubble_areas,
    double_bubble_equilibrium,
    lagrange_multipliers,
    multiphase_velocities,
    radius_error,
    three_phase_velocities,
    two_circle_ode,
    two_phase_velocity,
)


@pytest.mark.parametrize("r0,t,r", [(0.35, 0.0, 0.35), (0.35, 0.03, 0.25), (0.35, 0.06125, 0.0),
                                    (0.35, 1.0, EXTINCT)])
def test_circle_radius(r0, t, r):
    assert circle_radius_exact(r0, t) == pytest.approx(r, abs=1e-12)


def test_circle_radius_vectorized():
    t = np.array([0.0, 0.02, 0.1])
    np.testing.assert_allclose(circle_radius_exact(0.3, t), [0.3, np.sqrt(0.05), 0.0])


# frozen reference values of the RK4 two-circle integrator
TWO_CIRCLE_T_EXT = 0.026848443938804988
TWO_CIRCLE_RA_END = 0.24288828707864857


def test_two_circle_frozen_values():
    t, ra, rb, t_ext = two_circle_ode(0.1996, 0.1384, 0.035, 2.5e-4)
    assert len(t) == 141
    assert t_ext == pytest.approx(TWO_CIRCLE_T_EXT, rel=1e-9)
    assert ra[-1] == pytest.approx(TWO_CIRCLE_RA_END, rel=1e-9)
    # the survivor absorbs the whole area
    assert ra[-1] == pytest.approx(math.hypot(0.1996, 0.1384), rel=1e-12)
    assert rb[-1] == 0.0


@given(st.floats(0.1, 0.3), st.floats(0.05, 0.09))
def test_two_circle_invariants(ra0, rb0):
    t, ra, rb, t_ext = two_circle_ode(ra0, rb0, 0.005, 1e-4)
    alive = rb > 0
    # RK4 is not exactly conservative as rb -> 0, where the right-hand side blows up
    np.testing.assert_allclose(ra[alive] ** 2 + rb[alive] ** 2, ra0 ** 2 + rb0 ** 2, rtol=1e-6)
    assert np.all(np.diff(ra) >= -1e-15) and np.all(np.diff(rb[alive]) <= 1e-15)


def test_two_circle_equal_radii_stationary():
    t, ra, rb, t_ext = two_circle_ode(0.2, 0.2, 0.01, 1e-3)
    np.testing.assert_allclose(ra, 0.2)
    assert math.isinf(t_ext)


def _full_bubble_areas(r1, r2, r12, n=3000):
    """Grid areas of the free double bubble with the given arcs (twice the wall halves)."""
    d = math.sqrt(r1 * r1 + r2 * r2 - r1 * r2)
    a = (d * d + r1 * r1 - r2 * r2) / (2 * d)
    yj = math.sqrt(r1 * r1 - a * a)
    cx = a + math.copysign(math.sqrt(r12 * r12 - yj * yj), -r12)
    x = np.linspace(-r1, d + r2, n)
    y = np.linspace(-max(r1, r2), max(r1, r2), n)
    X, Y = np.meshgrid(x, y)
    dA = (x[1] - x[0]) * (y[1] - y[0])
    in1 = X ** 2 + Y ** 2 <= r1 * r1
    in2 = (X - d) ** 2 + Y ** 2 <= r2 * r2
    in12 = (X - cx) ** 2 + Y ** 2 <= r12 * r12
    R1 = in1 & (X < a) & ~in12
    R2 = (in2 & (X >= a)) | (in12 & (X < a))
    return R1.sum() * dA, R2.sum() * dA


def test_double_bubble_frozen_and_independent_areas():
    r1, r2, r12 = double_bubble_equilibrium(0.1, 0.05)
    assert (r1, r2, r12) == pytest.approx((0.27054801433211656, 0.20876475042166912, -0.9141778066466258),
                                          rel=1e-12)
    b1, b2 = _full_bubble_areas(r1, r2, r12)
    assert b1 == pytest.approx(0.2, rel=2e-3) and b2 == pytest.approx(0.1, rel=2e-3)


@given(st.floats(0.01, 0.2), st.floats(0.01, 0.2))
def test_double_bubble_round_trip(A1, A2):
    r1, r2, r12 = double_bubble_equilibrium(A1, A2)
    if A1 == A2:
        assert math.isinf(r12)
    else:
        assert abs(1 / r1 - 1 / r2 - 1 / r12) <= 1e-9 * (1 / r1 + 1 / r2)
    b1, b2 = double_bubble_areas(r1, r2, r12)
    assert b1 == pytest.approx(A1, rel=1e-9) and b2 == pytest.approx(A2, rel=1e-9)


def test_double_bubble_swap_symmetry():
    a = double_bubble_equilibrium(0.06, 0.02)
    b = double_bubble_equilibrium(0.02, 0.06)
    assert a[0] == b[1] and a[1] == b[0] and a[2] == -b[2]
    with pytest.raises(ValueError):
        double_bubble_equilibrium(0.0, 0.1)
    with pytest.raises(ValueError):
        double_bubble_areas(0.2, 0.1, 0.5)


def random_stats(rng, k=3, zero12=False):
    L = np.zeros((k, k))
    kap = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            L[i, j] = L[j, i] = rng.uniform(0.1, 2.0)
            kap[i, j] = rng.normal()
    if zero12:
        L[0, 1] = L[1, 0] = 0.0
    return MultiphaseStats(L, kap)


def test_three_phase_closed_forms_match_linear_system(rng):
    worst = 0.0
    for _ in range(1000):
        st_ = random_stats(rng)
        kk = rng.normal()
        for pr in ((0, 1), (0, 2), (1, 2)):
            worst = max(worst, abs(three_phase_velocities(st_, kk, pr) - multiphase_velocities(st_, kk, *pr)))
    assert worst <= 1e-12


def test_disjoint_bubbles_reduce_to_two_phase(rng):
    for _ in range(200):
        st_ = random_stats(rng, zero12=True)
        kk = rng.normal()
        for i in (0, 1):
            L, kap = st_.L[i, 2], st_.kappa[i, 2]
            v = two_phase_velocity(L, kap, kk)
            assert abs(three_phase_velocities(st_, kk, (i, 2)) - v) <= 1e-12


def test_lagrange_system_shape_and_degeneracy(rng):
    st_ = random_stats(rng, k=5)
    assert lagrange_multipliers(st_).shape == (4,)
    with pytest.raises(DegenerateConfigurationError):
        lagrange_multipliers(MultiphaseStats(np.zeros((3, 3)), np.zeros((3, 3))))
    with pytest.raises(ValueError):
        MultiphaseStats(np.array([[0, 1], [2, 0]]), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        three_phase_velocities(st_, 0.0, (0, 1))


def test_radius_error():
    assert radius_error([0.1, 0.2], [0.1, 0.25]) == pytest.approx(0.025)
    with pytest.raises(ValueError):
        radius_error([], [])
