"""Experiments comparing finite multiple-SLE ensembles with the Burgers limit.

Each ``run_*`` function returns an ``ExperimentReport`` whose ``passed``
flag is a pure function of its metrics and the tolerances recorded in its
params.  Seeds are ``seed, seed + 1, ...``; ensembles fan out over threads
and are folded in seed order, so a report is bit-identical whenever its
params are.

Convergence in distribution has no rate attached, so the convergence
experiments only require the error to decrease along the ``Ns`` and to
at least halve from the first to the last.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from . import burgers, delta0
from .errors import DomainError, SwallowedError
from .export import dumps, hull_csv, hull_svg, write_hashed
from .loewner import flow_many
from .measure import ProbabilityMeasure, discretize, sample_cdf_distance
from .sde import SdeConfig, empirical_measure, map_seeds, simulate

__all__ = [
    "ReportKind",
    "ExperimentReport",
    "convergence_passed",
    "run_transform_convergence",
    "run_map_convergence",
    "run_moment_law",
    "run_semicircle_theta",
    "run_hull_scaling",
    "run_footprint_check",
    "expected_moment_slope",
    "hull_scaling_tolerance",
]

#: Errors below this are treated as zero when checking monotonicity.
ERROR_FLOOR = 1e-12


class ReportKind(str, Enum):
    TRANSFORM = "TransformConvergence"
    MAP = "MapConvergence"
    MOMENT = "MomentLaw"
    HULL_SCALING = "HullScaling"
    SEMICIRCLE = "SemicircleTheta"
    FOOTPRINT = "FootprintCheck"


@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of one experiment.

    ``params`` fully determine the run; ``digest`` hashes them together
    with ``kind``.  ``elapsed`` is wall time and is excluded from the
    digest and from equality.
    """

    kind: ReportKind
    params: dict
    metrics: dict
    passed: bool
    artifacts: tuple[str, ...] = ()
    elapsed: float = field(default=0.0, compare=False)

    @property
    def digest(self) -> str:
        blob = dumps({"kind": self.kind.value, "params": self.params})
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "digest": self.digest,
            "params": self.params,
            "metrics": self.metrics,
            "passed": self.passed,
            "artifacts": list(self.artifacts),
            "elapsed": self.elapsed,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def write(self, out_dir) -> Path:
        """Write ``report-<kind>-<digest>.json`` into ``out_dir``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"report-{self.kind.value}-{self.digest[:16]}.json"
        path.write_text(self.to_json() + "\n")
        return path


def convergence_passed(errors: Sequence[float], floor: float = ERROR_FLOOR) -> bool:
    """Errors non-increasing (up to ``floor``) and the last at most half the first."""
    e = [float(x) for x in errors]
    if not e:
        return False
    monotone = all(b <= a + floor for a, b in zip(e, e[1:]))
    if len(e) == 1:
        return monotone and e[0] <= floor
    return monotone and e[-1] <= 0.5 * e[0] + floor


def _measure_params(base: ProbabilityMeasure) -> dict:
    return base.to_dict()


def _check_Ns(Ns) -> list[int]:
    Ns = [int(n) for n in Ns]
    if not Ns or any(n <= 0 for n in Ns) or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise DomainError("Ns must be a non-empty increasing list of positive integers")
    return Ns


def _check_points(points, min_imag: float = 1.0) -> list[complex]:
    pts = [complex(z) for z in points]
    if not pts:
        raise DomainError("no evaluation points")
    if any(z.imag < min_imag for z in pts):
        raise DomainError(f"evaluation points need Im z >= {min_imag}")
    return pts


def _ensemble_cfg(base, n, t, kappa, dt_base):
    x0 = discretize(base, n).atoms
    return SdeConfig(x0=x0, kappa=kappa, t_max=t, dt_base=dt_base)


def run_transform_convergence(base: ProbabilityMeasure, Ns: Sequence[int], t: float,
                              points: Sequence[complex], seeds: int, *, kappa: float = 2.0,
                              seed: int = 0, dt_base: float = 1e-3) -> ExperimentReport:
    """Cauchy transforms of ``N``-particle empirical measures against ``M_t``.

    For each ``N`` the base is discretised into ``N`` equal atoms, the
    driving SDE is run with weights ``1/N``, and ``e(N)`` is the mean over
    seeds of ``max_z |M_emp(z) - M_t(z)|``.
    """
    Ns = _check_Ns(Ns)
    pts = _check_points(points)
    t = float(t)
    if not t >= 0.0:
        raise DomainError("t must be >= 0")
    seeds = int(seeds)
    if seeds < 1:
        raise DomainError("seeds must be >= 1")
    start = time.perf_counter()
    state = burgers.TransportedState(base, t)
    limit = [burgers.transform_at(state, z) for z in pts]
    errors = []
    for n in Ns:
        if t == 0.0:
            emp = discretize(base, n)
            e = max(abs(emp.transform(z) - m) for z, m in zip(pts, limit))
            errors.append(float(e))
            continue
        cfg = _ensemble_cfg(base, n, t, kappa, dt_base)

        cfg = replace(cfg, record_dt=t)

        def one(s, cfg=cfg):
            paths = simulate(cfg.with_seed(s))
            emp = empirical_measure(paths, t)
            return max(abs(emp.transform(z) - m) for z, m in zip(pts, limit))

        per_seed = map_seeds(one, range(seed, seed + seeds))
        errors.append(math.fsum(per_seed) / seeds)
    params = {
        "base": _measure_params(base), "Ns": Ns, "t": t, "points": pts, "seeds": seeds,
        "seed": seed, "kappa": kappa, "dt_base": dt_base, "floor": ERROR_FLOOR,
    }
    metrics = {"errors": errors, "ratio": errors[-1] / errors[0] if errors[0] else 0.0}
    return ExperimentReport(ReportKind.TRANSFORM, params, metrics,
                            convergence_passed(errors), elapsed=time.perf_counter() - start)


def run_map_convergence(base: ProbabilityMeasure, Ns: Sequence[int], t: float,
                        grid: Sequence[complex], seeds: int, *, kappa: float = 2.0,
                        seed: int = 0, dt_base: float = 1e-3) -> ExperimentReport:
    """Finite Loewner maps ``g^N_t`` against the limit map ``g_t`` on a grid.

    ``e(N)`` is the mean over seeds of ``max_z |g^N_t(z) - g_t(z)|``.

    Raises
    ------
    SwallowedError
        If a grid point is swallowed in some run; move the grid higher.
    """
    Ns = _check_Ns(Ns)
    pts = _check_points(grid)
    t = float(t)
    seeds = int(seeds)
    if seeds < 1:
        raise DomainError("seeds must be >= 1")
    start = time.perf_counter()
    limit = np.array([burgers.limit_map(base, z, t) for z in pts])
    errors = []
    for n in Ns:
        if t == 0.0:
            errors.append(0.0)
            continue
        cfg = _ensemble_cfg(base, n, t, kappa, dt_base)

        def one(s, cfg=cfg):
            paths = simulate(cfg.with_seed(s))
            g, death = flow_many(paths, pts, t)
            if not np.all(np.isnan(death)):
                i = int(np.nonzero(~np.isnan(death))[0][0])
                raise SwallowedError("grid point swallowed", z=[pts[i].real, pts[i].imag], seed=s, n=n,
                                     time=float(death[i]))
            return float(np.max(np.abs(g - limit)))

        per_seed = map_seeds(one, range(seed, seed + seeds))
        errors.append(math.fsum(per_seed) / seeds)
    params = {
        "base": _measure_params(base), "Ns": Ns, "t": t, "grid": pts, "seeds": seeds,
        "seed": seed, "kappa": kappa, "dt_base": dt_base, "floor": ERROR_FLOOR,
    }
    metrics = {"errors": errors, "ratio": errors[-1] / errors[0] if errors[0] else 0.0}
    return ExperimentReport(ReportKind.MAP, params, metrics,
                            convergence_passed(errors), elapsed=time.perf_counter() - start)


def expected_moment_slope(n: int, kappa: float) -> float:
    """Slope of ``E[(1/N) sum V_k^2]`` for equal weights and no restoring force.

    Ito gives ``d sum V^2 = 2 sum V dV + kappa sum l_k dt``; the pairwise
    drift contributes ``sum_{j<k} 4(l_j + l_k) l`` which for ``l = 1/N``
    is ``4 (N - 1)/N``, plus ``kappa/N`` from the quadratic variation.
    """
    return 4.0 + (kappa - 4.0) / n


def run_moment_law(cfg: SdeConfig, seeds: int, *, record_dt: float = 0.05,
                   abs_tol: float = 1e-6) -> ExperimentReport:
    """Linear growth of the ensemble second moment of the particles.

    Each seed's ``m_2(t) = (1/N) sum V_k(t)^2`` on the ``record_dt`` grid
    is fitted by least squares; the report compares the mean slope with
    ``4 + (kappa - 4)/N`` and passes within ``max(3 s.e., abs_tol)``.
    """
    lam = np.asarray(cfg.lambdas)
    if not np.allclose(lam, 1.0 / cfg.n, rtol=0, atol=1e-15):
        raise DomainError("the moment law needs equal weights")
    if cfg.theta != 0.0:
        raise DomainError("the moment law needs theta = 0")
    seeds = int(seeds)
    if seeds < 1:
        raise DomainError("seeds must be >= 1")
    start = time.perf_counter()
    base_cfg = replace(cfg, record_dt=record_dt)

    def one(s):
        paths = simulate(base_cfg.with_seed(s))
        t = paths.times
        m2 = np.mean(paths.values ** 2, axis=1)
        slope, intercept = np.polyfit(t, m2, 1)
        return float(slope), float(intercept)

    fits = map_seeds(one, range(cfg.seed, cfg.seed + seeds))
    slopes = np.array([f[0] for f in fits])
    slope = math.fsum(slopes) / seeds
    se = float(np.std(slopes, ddof=1) / math.sqrt(seeds)) if seeds > 1 else 0.0
    expected = expected_moment_slope(cfg.n, cfg.kappa)
    tol = max(3.0 * se, abs_tol)
    metrics = {
        "slope": slope, "stderr": se, "expected": expected,
        "deviation": abs(slope - expected), "tolerance": tol,
        "intercept": math.fsum(f[1] for f in fits) / seeds,
    }
    params = {"config": base_cfg.to_dict(), "seeds": seeds, "abs_tol": abs_tol,
              "se_multiple": 3.0}
    return ExperimentReport(ReportKind.MOMENT, params, metrics, abs(slope - expected) <= tol,
                            elapsed=time.perf_counter() - start)


def run_semicircle_theta(cfg: SdeConfig, t_long: float | None = None, seeds: int = 50, *,
                         cdf_tol: float = 0.02, m2_rel_tol: float = 0.05) -> ExperimentReport:
    """Long-time particle law under the restoring force against the semicircle.

    Runs to ``t_long`` (default ``10/theta``), pools the final positions of
    all seeds and compares with the semicircle of radius ``sqrt(8/theta)``:
    sup distance of distribution functions and relative error of the
    second moment ``R^2/4``.
    """
    if not cfg.theta > 0.0:
        raise DomainError("theta must be > 0")
    t_long = 10.0 / cfg.theta if t_long is None else float(t_long)
    if not t_long > 0.0:
        raise DomainError("t_long must be > 0")
    seeds = int(seeds)
    if seeds < 1:
        raise DomainError("seeds must be >= 1")
    start = time.perf_counter()
    run_cfg = replace(cfg, t_max=t_long, record_dt=t_long)
    finals = map_seeds(lambda s: simulate(run_cfg.with_seed(s)).values[-1],
                       range(cfg.seed, cfg.seed + seeds))
    pooled = np.concatenate(finals)
    R = math.sqrt(8.0 / cfg.theta)
    target = ProbabilityMeasure.semicircle(R)
    dist = sample_cdf_distance(pooled, target)
    m2 = float(np.mean(pooled ** 2))
    m2_target = R * R / 4.0
    rel = abs(m2 - m2_target) / m2_target
    metrics = {"cdf_distance": dist, "m2": m2, "m2_target": m2_target, "m2_rel_error": rel,
               "radius": R}
    params = {"config": run_cfg.to_dict(), "seeds": seeds, "t_long": t_long,
              "cdf_tol": cdf_tol, "m2_rel_tol": m2_rel_tol}
    return ExperimentReport(ReportKind.SEMICIRCLE, params, metrics,
                            dist <= cdf_tol and rel <= m2_rel_tol,
                            elapsed=time.perf_counter() - start)


def hull_scaling_tolerance(t: float, c: float) -> float:
    return 1e-3 * c * (1.0 + math.sqrt(t))


def run_hull_scaling(t_pairs: Sequence[tuple[float, float]], *, n_columns: int = 64,
                     out_dir=None) -> ExperimentReport:
    """Self-similarity ``K_{c^2 t} = c K_t`` of the point-mass hull.

    For each ``(t, c)`` both hulls are sampled on ``n_columns`` columns over
    their own footprints (which scale by ``c``), and the metric is the
    largest column-wise height difference ``|y_{c^2 t} - c y_t|``.  With
    ``out_dir`` the hulls are also written as CSV and SVG artifacts.
    """
    pairs = [(float(t), float(c)) for t, c in t_pairs]
    if not pairs or any(t <= 0 or c <= 0 for t, c in pairs):
        raise DomainError("need pairs with t > 0 and c > 0")
    start = time.perf_counter()
    base = ProbabilityMeasure.point_mass(0.0)
    cache: dict[float, burgers.Hull] = {}

    def hull(t):
        if t not in cache:
            cache[t] = burgers.hull_boundary(base, t, n_columns)
        return cache[t]

    distances, tolerances, flags = [], [], []
    for t, c in pairs:
        small, big = hull(t), hull(c * c * t)
        distances.append(float(np.max(np.abs(big.y - c * small.y))))
        tolerances.append(hull_scaling_tolerance(t, c))
        flags.extend(f for f in small.flags + big.flags if f not in flags)
    artifacts = []
    if out_dir is not None:
        for t, h in sorted(cache.items()):
            stem = f"hull-t{t:g}"
            support = burgers.support_endpoints(base, t)
            artifacts.append(str(write_hashed(out_dir, stem, ".csv", hull_csv(h))))
            artifacts.append(str(write_hashed(out_dir, stem, ".svg", hull_svg(h, support))))
    metrics = {"distances": distances, "tolerances": tolerances, "flags": flags,
               "max_height": {f"{t:g}": float(h.y.max()) for t, h in sorted(cache.items())}}
    params = {"t_pairs": pairs, "n_columns": int(n_columns), "base": _measure_params(base)}
    passed = all(d <= tol for d, tol in zip(distances, tolerances))
    return ExperimentReport(ReportKind.HULL_SCALING, params, metrics, passed,
                            tuple(artifacts), elapsed=time.perf_counter() - start)


def run_footprint_check(t: float = 1.0, *, tol: float = 1e-3,
                        lift: float = 1e-9) -> ExperimentReport:
    """Real footprint and boundary map of the point-mass hull against the
    closed forms ``[-2 sqrt(e t), 2 sqrt(e t)]`` and ``g_t(2 sqrt(e t)) = 4 sqrt(t)``.

    The boundary map is evaluated at the computed right endpoint lifted by
    ``lift`` into the upper half-plane.
    """
    t = float(t)
    start = time.perf_counter()
    base = ProbabilityMeasure.point_mass(0.0)
    a, b = burgers.real_footprint(base, t)
    (_, _), (fa, fb) = delta0.oracle_intervals(t)
    g = burgers.limit_map(base, complex(b, lift), t)
    target = 4.0 * math.sqrt(t)
    metrics = {
        "footprint": [a, b], "expected": [fa, fb],
        "footprint_error": max(abs(a - fa), abs(b - fb)),
        "g_endpoint": g.real, "g_expected": target, "g_error": abs(g - target),
    }
    params = {"t": t, "tol": tol, "lift": lift}
    passed = metrics["footprint_error"] <= tol and metrics["g_error"] <= tol
    return ExperimentReport(ReportKind.FOOTPRINT, params, metrics, passed,
                            elapsed=time.perf_counter() - start)
