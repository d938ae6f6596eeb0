import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from multisle.burgers import (
    ALIVE,
    Hull,
    TransportedState,
    critical_points,
    exit_time_real,
    hull_boundary,
    hull_lifetime,
    inverse_char_ode,
    limit_map,
    limit_map_direct,
    line_hull_landing,
    line_hull_lifetime,
    moment_flow_check,
    real_footprint,
    real_lifetime,
    solve_shift,
    support_endpoints,
    support_gaps,
    transform_at,
    transform_real,
)
from multisle.delta0 import oracle_maps, oracle_transform
from multisle.errors import DomainError, SwallowedError
from multisle.measure import ProbabilityMeasure

PM = ProbabilityMeasure
DELTA = PM.point_mass(0.0)
DELTA_ATOM = PM.atomic([0.0])
PAIR = PM.atomic([-1.0, 1.0])
SQRT_E = math.sqrt(math.e)


def semicircle_at(r, t):
    """The limit flow keeps a centred semicircle a semicircle: the second
    moment r^2/4 grows by 4t, so the radius is sqrt(r^2 + 16 t)."""
    return PM.semicircle(math.sqrt(r * r + 16.0 * t))


bases = st.sampled_from([DELTA, PAIR, PM.atomic([-2.0, 0.5, 1.0], [0.2, 0.3, 0.5]),
                         PM.uniform(-1.0, 2.0), PM.semicircle(1.5, 0.5)])
upper = st.tuples(st.floats(-6, 6), st.floats(0.2, 6)).map(lambda p: complex(*p))
times = st.floats(0.0, 2.0)


# -- characteristics -------------------------------------------------------

def test_state_validation():
    with pytest.raises(DomainError):
        TransportedState(DELTA, -1.0)
    with pytest.raises(DomainError):
        TransportedState("delta", 1.0)
    assert TransportedState(DELTA, 0.0).at(2.0).t == 2.0


def test_solve_shift_examples():
    assert solve_shift(TransportedState(PAIR, 0.0), 1 + 2j) == 1 + 2j
    w = solve_shift(TransportedState(DELTA_ATOM, 1.0), 3.52621j)
    assert abs(w - 4.42929j) <= 1e-5
    w = solve_shift(TransportedState(PAIR, 0.0), 2j)
    assert w == 2j and abs(PAIR.transform(w) + 0.8j) <= 1e-15


@given(bases, upper, times)
def test_solve_shift_residual_and_height(base, z, t):
    w = solve_shift(TransportedState(base, t), z)
    assert abs(w + 2 * t * base.transform(w) - z) <= 1e-12 * (1 + abs(z))
    assert w.imag >= z.imag * (1 - 1e-12)


def test_transform_examples():
    assert transform_at(TransportedState(DELTA, 0.0), 1j) == pytest.approx(-2j)
    assert abs(transform_at(TransportedState(DELTA, 1.0), 4j) + 0.414214j) <= 1e-6
    assert abs(transform_at(TransportedState(DELTA, 1.0), 3.52621j) + 0.451540j) <= 1e-5


@given(bases, upper, times)
def test_transform_herglotz(base, z, t):
    M = transform_at(TransportedState(base, t), z)
    assert M.imag < 0 and abs(M) <= 2 / z.imag * (1 + 1e-12)


@given(upper, st.floats(0.0, 4.0))
def test_transform_matches_point_mass_closed_form(z, t):
    assert abs(transform_at(TransportedState(DELTA, t), z) - oracle_transform(z, t)) <= 1e-10


@given(upper, st.floats(0.1, 2.0), st.floats(0.0, 3.0))
def test_transform_matches_semicircle_flow(z, r, t):
    got = transform_at(TransportedState(PM.semicircle(r), t), z)
    assert abs(got - semicircle_at(r, t).transform(z)) <= 1e-9 * (1 + abs(got))


@given(bases, upper, times)
def test_characteristic_constancy(base, z, t):
    s = TransportedState(base, t)
    w = solve_shift(s, z)
    m0 = base.transform(w)
    assert abs(transform_at(s, w + 2 * t * m0) - m0) <= 1e-10


# -- real axis -------------------------------------------------------------

@pytest.mark.parametrize("base, x0, T", [(DELTA, 2.0, 1.0), (DELTA, 4.0, 4.0), (PAIR, 3.0, 1.6)])
def test_exit_time_examples(base, x0, T):
    assert exit_time_real(base, x0) == pytest.approx(T, rel=1e-14)


def test_exit_time_inside_support():
    with pytest.raises(DomainError):
        exit_time_real(PAIR, 1.0)
    with pytest.raises(DomainError):
        exit_time_real(PM.uniform(0, 1), 0.5)


@pytest.mark.parametrize("t", [0.25, 1.0, 4.0])
def test_point_mass_support(t):
    sl, sr = support_endpoints(DELTA, t)
    assert abs(sl + 4 * math.sqrt(t)) <= 1e-8 and abs(sr - 4 * math.sqrt(t)) <= 1e-8


def test_support_continuity_at_zero():
    sl, sr = support_endpoints(PAIR, 1e-6)
    assert abs(sl + 1) <= 1e-2 and abs(sr - 1) <= 1e-2
    assert support_endpoints(PAIR, 0.0) == (-1.0, 1.0)


@pytest.mark.parametrize("r, t", [(1.0, 0.5), (2.0, 2.0)])
def test_semicircle_support(r, t):
    R = math.sqrt(r * r + 16 * t)
    sl, sr = support_endpoints(PM.semicircle(r), t)
    assert abs(sl + R) <= 1e-8 and abs(sr - R) <= 1e-8


@pytest.mark.parametrize("base", [DELTA, PAIR, PM.uniform(-1, 2)])
def test_support_grows(base):
    ints = [support_endpoints(base, t) for t in (0.25, 0.5, 1, 2, 4)]
    for (a0, b0), (a1, b1) in zip(ints, ints[1:]):
        assert a1 <= a0 and b1 >= b0


def test_critical_points_solve_exit_time():
    for base in (DELTA, PAIR, PM.uniform(-1, 2)):
        xl, xr = critical_points(base, 0.7)
        assert exit_time_real(base, xl) == pytest.approx(0.7, rel=1e-9)
        assert exit_time_real(base, xr) == pytest.approx(0.7, rel=1e-9)


def test_support_gaps():
    # two atoms at +-1: the gap closes once T(0) = 1/(2 * 2) = 0.25 has passed
    assert support_gaps(PAIR, 0.2) == [(-1.0, 1.0)]
    assert support_gaps(PAIR, 0.3) == []
    assert support_gaps(DELTA, 1.0) == []
    assert support_gaps(PM.uniform(0, 1), 1.0) == []


@pytest.mark.parametrize("x", [4.5, 7.0, -5.0])
def test_transform_real_matches_closed_form(x):
    s = TransportedState(DELTA, 1.0)
    exact = 4.0 / (x + math.copysign(math.sqrt(x * x - 16.0), x))
    assert transform_real(s, x) == pytest.approx(exact, rel=1e-12)
    with pytest.raises(DomainError):
        transform_real(s, 3.0)


def test_real_lifetime_ordering():
    # the real trajectory hits the growing support before the characteristic
    S = real_lifetime(DELTA, 3.3, 2.0)
    assert S < exit_time_real(DELTA, 3.3)
    assert S == pytest.approx(1.0016, abs=1e-3)
    assert real_lifetime(DELTA, 10.0, 1.0) == ALIVE


@pytest.mark.slow
def test_point_mass_footprint():
    a, b = real_footprint(DELTA, 1.0)
    assert abs(b - 2 * SQRT_E) <= 1e-3 and abs(a + 2 * SQRT_E) <= 1e-3
    g = limit_map(DELTA, complex(b, 1e-9), 1.0)
    assert abs(g - 4.0) <= 1e-3


def test_footprint_of_semicircle_base_by_scaling():
    # (1/c) D_{c^2} maps the semicircle of radius r to radius r / c, so
    # footprints of (r, t) and (c r, c^2 t) scale by c
    a1, b1 = real_footprint(PM.semicircle(1.0), 0.25)
    a2, b2 = real_footprint(PM.semicircle(2.0), 1.0)
    assert b2 == pytest.approx(2 * b1, abs=2e-3) and a2 == pytest.approx(2 * a1, abs=2e-3)


# -- inverse characteristics and the limit map -----------------------------

def test_inverse_char_examples():
    assert abs(inverse_char_ode(DELTA, 4j, 1.0) - 4.42929j) <= 1e-5
    assert inverse_char_ode(PAIR, 1 + 1j, 0.0) == 1 + 1j
    h1 = inverse_char_ode(DELTA, 1j, 0.25)
    h2 = inverse_char_ode(DELTA, 2j, 1.0)
    assert abs(h2 - 2 * h1) <= 1e-6


def test_limit_map_examples():
    assert abs(limit_map(DELTA, 4j, 1.0) - 3.52621j) <= 1e-5
    assert limit_map(PAIR, 0.3 + 0.2j, 0.0) == 0.3 + 0.2j


@given(st.tuples(st.floats(-4, 4), st.floats(0.5, 4)).map(lambda p: complex(*p)),
       st.floats(0.01, 1.0))
def test_limit_map_matches_closed_form(z, t):
    if abs(z) < 3.4 * math.sqrt(t):
        z = z / abs(z) * 3.5 * math.sqrt(t)
    h, g = oracle_maps(z, t)
    assert abs(inverse_char_ode(DELTA, z, t) - h) <= 1e-8
    assert abs(limit_map(DELTA, z, t) - g) <= 1e-8


@pytest.mark.parametrize("base", [PAIR, PM.uniform(-1, 2), PM.semicircle(1.0, 0.3)])
@pytest.mark.parametrize("z", [0.5 + 2j, -3 + 1.5j, 4j])
def test_limit_map_two_routes(base, z):
    assert abs(limit_map(base, z, 0.8) - limit_map_direct(base, z, 0.8)) <= 1e-6


@given(bases, st.tuples(st.floats(-4, 4), st.floats(2.5, 5)).map(lambda p: complex(*p)),
       st.floats(0.0, 0.5))
def test_ode_and_newton_agree(base, z, t):
    h = inverse_char_ode(base, z, t)
    g = limit_map(base, z, t)
    # h is the characteristic start for g: solve_shift recovers it
    assert abs(solve_shift(TransportedState(base, t), g) - h) <= 1e-8
    assert abs(g - (h + 2 * t * base.transform(h))) <= 1e-8


def test_limit_map_swallowed():
    with pytest.raises(SwallowedError) as exc:
        limit_map(DELTA, 0.01 + 0.01j, 1.0)
    assert exc.value.payload["error"] == "swallowed"


# -- lifetimes and the hull ------------------------------------------------

def test_hull_lifetime_scaling():
    T1 = hull_lifetime(DELTA, 1j, 2.0)
    T2 = hull_lifetime(DELTA, 2j, 4.0)
    assert T2 == pytest.approx(4 * T1, rel=1e-3)
    # for the point mass T(2i) = e
    assert T2 == pytest.approx(math.e, rel=1e-4)


def test_hull_lifetime_routes_agree():
    for z in (0.5 + 0.5j, -1 + 0.3j):
        a = hull_lifetime(DELTA, z, 1.0, method="g")
        b = hull_lifetime(DELTA, z, 1.0, method="h")
        assert a == pytest.approx(b, rel=1e-4)
    with pytest.raises(DomainError):
        hull_lifetime(DELTA, 1j, 1.0, method="x")


def test_hull_lifetime_examples():
    assert hull_lifetime(DELTA, 100j, 1.0) == ALIVE
    assert hull_lifetime(DELTA, 3.29j, 1.0) == ALIVE
    assert hull_lifetime(DELTA, 0.01 + 0.01j, 1.0) < 0.01


@pytest.fixture(scope="module")
def small_hull():
    return hull_boundary(DELTA, 1.0, 16)


def test_hull_shape(small_hull):
    h = small_hull
    assert isinstance(h, Hull) and h.flags == ()
    assert abs(h.footprint[1] - 2 * SQRT_E) <= 1e-3
    assert h.y[0] == 0.0 and h.y[-1] == 0.0 and np.all(h.y >= 0)
    assert np.max(np.abs(h.y - h.y[::-1])) <= 1e-6
    assert 0.5 <= h.y.max() <= 3.3
    assert np.allclose(h.boundary.real, h.x)
    d = h.to_dict()
    assert d["flags"] == [] and len(d["x"]) == 16


def test_hull_points_are_on_the_boundary(small_hull):
    h = small_hull
    for x, y in zip(h.x[3:13:3], h.y[3:13:3]):
        assert hull_lifetime(DELTA, complex(x, y - 1e-4), 1.0) <= 1.0
        assert hull_lifetime(DELTA, complex(x, y + 1e-4), 1.0) == ALIVE


def test_hull_boundary_validation():
    with pytest.raises(DomainError):
        hull_boundary(DELTA, 0.0)
    with pytest.raises(DomainError):
        hull_boundary(DELTA, 1.0, 4)


def test_hull_flags_support_gaps():
    h = hull_boundary(PAIR, 0.1, 8)
    assert "support_gaps" in h.flags


def test_straight_characteristics():
    assert line_hull_landing(DELTA, 1j) == pytest.approx((0.25, 0.0))
    t, x = line_hull_landing(DELTA, 1 + 1j)
    assert t == pytest.approx(0.5) and x == pytest.approx(2.0)
    assert x <= 4 * math.sqrt(0.5)
    assert line_hull_lifetime(DELTA, 2j) == pytest.approx(1.0)


@given(st.tuples(st.floats(-3, 3), st.floats(0.1, 3)).map(lambda p: complex(*p)))
def test_straight_characteristics_land_in_support(z0):
    t, x = line_hull_landing(PAIR, z0)
    sl, sr = support_endpoints(PAIR, t)
    assert sl - 1e-9 <= x <= sr + 1e-9


def test_moment_flow():
    r = moment_flow_check(DELTA, [0, 0.25, 0.5, 1])
    assert r["deviation"] <= 1e-6
    r = moment_flow_check(PAIR, [0, 1])
    assert r["m2"][1] == pytest.approx(5.0, abs=1e-5)
    assert moment_flow_check(PM.uniform(0, 1), [0])["deviation"] == 0.0
    with pytest.raises(DomainError):
        moment_flow_check(DELTA, [0.5, 1])


def test_decay_of_transform():
    vals = [abs(transform_at(TransportedState(DELTA, t), 2j)) for t in (1, 2, 4, 8, 16, 32, 64, 128)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert abs(transform_at(TransportedState(DELTA, 100), 2j)) <= vals[0] / 3
