import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from multisle import _backend
from multisle.errors import CollisionError, DomainError
from multisle.measure import ProbabilityMeasure, discretize
from multisle.sde import (
    DrivingPaths,
    SdeConfig,
    constant_paths,
    drift,
    drift_from_log_partition,
    empirical_measure,
    log_partition_gradient,
    map_seeds,
    partition_function,
    simulate,
)


def gap_law(d0, t):
    # two equal-weight particles, kappa = 0: d' = 4/d, so d^2 grows by 8 per unit time
    return math.sqrt(d0 * d0 + 8.0 * t)


# -- config ----------------------------------------------------------------

def test_config_defaults_and_validation():
    cfg = SdeConfig(x0=(-1, 1), kappa=2)
    assert cfg.n == 2 and cfg.lambdas == (0.5, 0.5) and cfg.gap_floor == 1e-12
    for bad in (
        dict(x0=(1, 0), kappa=2),
        dict(x0=(0, 0), kappa=2),
        dict(x0=(), kappa=2),
        dict(x0=(0, 1), kappa=5),
        dict(x0=(0, 1), kappa=-1),
        dict(x0=(0, 1), kappa=2, lambdas=(0.5, 0.6)),
        dict(x0=(0, 1), kappa=2, lambdas=(1.0,)),
        dict(x0=(0, 1), kappa=2, theta=-1),
        dict(x0=(0, 1), kappa=2, dt_base=0),
        dict(x0=(0, 1), kappa=2, t_max=-1),
        dict(x0=(0, 1), kappa=2, seed=-1),
        dict(x0=(0, math.nan), kappa=2),
    ):
        with pytest.raises(DomainError):
            SdeConfig(**bad)


def test_config_dict_roundtrip():
    cfg = SdeConfig(x0=(-1, 0.5, 2), kappa=3, theta=0.5, seed=7, record_dt=0.1)
    assert SdeConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(DomainError):
        SdeConfig.from_dict({**cfg.to_dict(), "n": 4})
    with pytest.raises(DomainError):
        SdeConfig.from_dict({**cfg.to_dict(), "colour": 1})


# -- partition function and drift ------------------------------------------

def test_partition_function_examples():
    assert partition_function([0, 2], 2) == pytest.approx(2.0)
    assert partition_function([0, 1, 3], 4) == pytest.approx(math.sqrt(6))
    assert partition_function([5], 1.3) == 1.0
    with pytest.raises(DomainError):
        partition_function([1, 0], 2)


def test_log_partition_gradient_matches_finite_differences():
    x = np.array([-1.0, 0.3, 2.0, 2.5])
    h = 1e-6
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        fd = (math.log(partition_function(x + e, 2.5)) - math.log(partition_function(x - e, 2.5))) / (2 * h)
        assert log_partition_gradient(x, 2.5)[k] == pytest.approx(fd, rel=1e-7)


def test_drift_examples(backend):
    cfg = SdeConfig(x0=(-1, 1), kappa=2)
    assert np.allclose(drift([-1, 1], cfg, backend=backend), [-1, 1], atol=1e-15)
    cfg = SdeConfig(x0=(-1, 1), kappa=2, lambdas=(1.0, 0.0))
    assert np.allclose(drift([-1, 1], cfg, backend=backend), [-1, 1], atol=1e-15)
    cfg = SdeConfig(x0=(0.0,), kappa=2, theta=2)
    assert np.allclose(drift([0.0], cfg, backend=backend), [0.0])
    cfg = SdeConfig(x0=(1.5,), kappa=2, theta=2)
    assert np.allclose(drift([1.5], cfg, backend=backend), [-3.0])


def test_drift_rejects_close_points():
    cfg = SdeConfig(x0=(0, 1), kappa=2, gap_floor=1e-6)
    with pytest.raises(CollisionError):
        drift([0, 1e-9], cfg)
    with pytest.raises(DomainError):
        drift([1, 0], cfg)


def test_drift_from_log_partition_examples():
    cfg = SdeConfig(x0=(-1, 1), kappa=2)
    assert np.allclose(drift_from_log_partition([-1, 1], cfg), [-1, 1], atol=1e-15)
    cfg = SdeConfig(x0=(0, 1, 3), kappa=4)
    assert np.allclose(drift_from_log_partition([0, 1, 3], cfg), drift([0, 1, 3], cfg),
                       atol=1e-10, rtol=0)
    cfg = SdeConfig(x0=(0.0,), kappa=2)
    assert np.allclose(drift_from_log_partition([0.0], cfg), [0.0])
    with pytest.raises(DomainError):
        drift_from_log_partition([0.0], SdeConfig(x0=(0.0,), kappa=2, theta=1))


configs = st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-10, 10), min_size=n, max_size=n, unique=True).filter(
        lambda xs: min(np.diff(sorted(xs)), default=1.0) > 1e-3).map(sorted),
    st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n),
    st.floats(0.1, 4.0),
))


@given(configs)
def test_drift_equals_log_partition_route(c):
    xs, ws, kappa = c
    w = np.array(ws) / sum(ws)
    cfg = SdeConfig(x0=xs, kappa=kappa, lambdas=tuple(w / math.fsum(w)))
    a = drift(xs, cfg)
    b = drift_from_log_partition(xs, cfg)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-10)


@given(configs)
def test_backends_agree_on_drift(c):
    xs, ws, kappa = c
    w = np.array(ws) / sum(ws)
    cfg = SdeConfig(x0=xs, kappa=kappa, lambdas=tuple(w / math.fsum(w)), theta=0.7)
    outs = [drift(xs, cfg, backend=k) for k in _backend.available().values()]
    for o in outs[1:]:
        assert np.allclose(o, outs[0], rtol=1e-12, atol=1e-12)


# -- simulation ------------------------------------------------------------

def test_two_particle_gap_law(backend):
    paths = simulate(SdeConfig(x0=(-1, 1), kappa=0, t_max=1), backend=backend)
    v = paths.values[-1]
    assert v[1] - v[0] == pytest.approx(math.sqrt(12), abs=1e-3)
    assert v[0] == pytest.approx(-v[1], abs=1e-12)
    emp = empirical_measure(paths, 1.0)
    assert np.allclose(emp.atoms, [-math.sqrt(3), math.sqrt(3)], atol=1e-3)
    assert np.allclose(emp.weights, 0.5)


def _gap_error(d0, dt_base, c_gap=0.1):
    cfg = SdeConfig(x0=(0, d0), kappa=0, t_max=0.5, record_dt=0.05, c_gap=c_gap,
                    dt_base=dt_base)
    paths = simulate(cfg)
    gaps = np.diff(paths.values, axis=1)[:, 0]
    exact = np.array([gap_law(d0, t) for t in paths.times])
    return float(np.max(np.abs(gaps - exact)))


@pytest.mark.parametrize("d0", [0.5, 4.0])
def test_gap_law_first_order_in_dt(d0):
    e1, e2 = _gap_error(d0, 1e-3), _gap_error(d0, 1e-4)
    assert 8.0 <= e1 / e2 <= 12.0


def test_gap_law_from_near_contact():
    assert _gap_error(1e-3, 1e-5, c_gap=0.025) <= 2e-4


def test_single_particle_is_scaled_brownian_motion():
    cfg = SdeConfig(x0=(0.0,), kappa=4, t_max=1, record_dt=1.0)
    finals = np.array(map_seeds(lambda s: simulate(cfg.with_seed(s)).values[-1, 0], range(4000)))
    assert finals.var(ddof=1) == pytest.approx(4.0, abs=0.3)
    assert abs(finals.mean()) <= 3 * 2 / math.sqrt(4000)


def test_single_particle_without_noise_stays_put():
    paths = simulate(SdeConfig(x0=(0.0,), kappa=0, t_max=5))
    emp = empirical_measure(paths, 5.0)
    assert list(emp.atoms) == [0.0] and list(emp.weights) == [1.0]


def test_close_start_does_not_collide(backend):
    for seed in range(20):
        paths = simulate(SdeConfig(x0=(0, 1e-6), kappa=2, t_max=0.5, seed=seed), backend=backend)
        assert np.all(np.diff(paths.values, axis=1) > 0)


def test_ordering_and_start(backend):
    cfg = SdeConfig(x0=tuple(np.linspace(-1, 1, 15)), kappa=3.5, t_max=0.3, seed=11)
    paths = simulate(cfg, backend=backend)
    assert paths.times[0] == 0.0 and np.array_equal(paths.values[0], cfg.x0)
    assert np.all(np.diff(paths.times) > 0)
    assert np.all(np.diff(paths.values, axis=1) > 0)
    assert paths.times[-1] == cfg.t_max


def test_paths_are_read_only():
    paths = simulate(SdeConfig(x0=(0, 1), kappa=2, t_max=0.01))
    with pytest.raises(ValueError):
        paths.values[0, 0] = 1.0


def test_determinism_bit_identical(backend):
    cfg = SdeConfig(x0=(-1, 0, 0.5, 2), kappa=2.5, t_max=0.4, seed=123)
    a = simulate(cfg, backend=backend)
    b = simulate(cfg, backend=backend)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.values, b.values)
    c = simulate(cfg.with_seed(124), backend=backend)
    assert not np.array_equal(a.values[-1], c.values[-1])


def test_backends_agree_on_paths():
    kernels = _backend.available()
    if len(kernels) < 2:
        pytest.skip("compiled kernels not built")
    cfg = SdeConfig(x0=tuple(np.linspace(-1, 1, 8)), kappa=2, t_max=0.2, seed=5)
    a = simulate(cfg, backend=kernels["cython"])
    b = simulate(cfg, backend=kernels["numpy"])
    assert a.times.shape == b.times.shape
    assert np.max(np.abs(a.values - b.values)) <= 1e-10


def test_record_dt_subsamples_the_same_path():
    cfg = SdeConfig(x0=(-1, 0, 1), kappa=2, t_max=0.5, seed=3)
    full = simulate(cfg)
    sub = simulate(SdeConfig.from_dict({**cfg.to_dict(), "record_dt": 0.1}))
    assert np.allclose(sub.times, [0, 0.1, 0.2, 0.3, 0.4, 0.5])
    assert np.allclose(sub.values[-1], full.values[-1], rtol=0, atol=1e-12)


def test_restoring_force_pulls_in():
    cfg = SdeConfig(x0=(-3, 3), kappa=0, theta=2.0, t_max=5, record_dt=5)
    v = simulate(cfg).values[-1]
    # the gap obeys d' = 4/d - theta d, at rest when d^2 = 4/theta
    assert v[1] - v[0] == pytest.approx(math.sqrt(4 / 2.0), abs=1e-3)


def test_center_of_mass_is_a_martingale():
    x0 = (-1.0, -0.2, 0.4, 1.5)
    cfg = SdeConfig(x0=x0, kappa=3, t_max=1, record_dt=1)
    means = np.array(map_seeds(lambda s: simulate(cfg.with_seed(s)).values[-1].mean(),
                               range(2000)))
    se = means.std(ddof=1) / math.sqrt(means.size)
    assert abs(means.mean() - np.mean(x0)) < 3 * se


def test_csv_roundtrip(tmp_path):
    paths = simulate(SdeConfig(x0=(-1, 1), kappa=2, t_max=0.05, seed=1))
    f = tmp_path / "p.csv"
    paths.write_csv(f)
    assert f.read_text().splitlines()[0] == "t,V1,V2"
    back = DrivingPaths.read_csv(f, paths.config)
    assert np.array_equal(back.times, paths.times) and np.array_equal(back.values, paths.values)


def test_interpolation_and_range():
    paths = constant_paths([0.0, 1.0], 2.0)
    assert np.array_equal(paths.at(1.3), [0.0, 1.0])
    with pytest.raises(DomainError):
        paths.at(2.5)
    with pytest.raises(DomainError):
        empirical_measure(paths, -0.1)


def test_map_seeds_keeps_order(monkeypatch):
    monkeypatch.setenv("LOEWNER_THREADS", "3")
    assert map_seeds(lambda s: s * s, range(10)) == [s * s for s in range(10)]
    monkeypatch.setenv("LOEWNER_THREADS", "x")
    with pytest.raises(DomainError):
        map_seeds(lambda s: s, range(3))


def test_large_kappa_near_contact_run_completes():
    # this seed once drove a pair to a gap of 1e-8 where steps stop advancing t
    x0 = tuple(discretize(ProbabilityMeasure.semicircle(4.0), 50).atoms)
    paths = simulate(SdeConfig(x0=x0, kappa=4.0, t_max=1.0, seed=147, record_dt=0.05))
    assert paths.times[-1] == 1.0 and np.all(np.diff(paths.values[-1]) > 0)


def test_gap_shrink_rule_both_backends():
    from multisle import _fallback
    old = np.array([0.0, 1.0, 3.0])
    ok = np.array([0.0, 0.2, 3.0])
    bad = np.array([0.0, 1.5, 1.55])
    assert _fallback._first_violation(ok, old, 1e-12) == -1
    assert _fallback._first_violation(bad, old, 1e-12) == 1
