"""Driving functions of multiple SLE: the interacting particle SDE.

The ``n`` driving functions solve

    dV_k = sum_{j != k} 2 (l_k + l_j) / (V_k - V_j) dt - theta V_k dt
           + sqrt(kappa l_k) dB_k,

which is what the partition-function drift ``kappa l_k d_k log H`` plus
``sum_j 2 l_j / (V_k - V_j)`` reduces to for ``H = prod (x_k - x_j)^(2/kappa)``.
``theta > 0`` adds a linear restoring force (not part of multiple SLE; used
for the semicircle long-time experiment).

Integration is Euler-Maruyama with a gap-adaptive step.  Each particle
owns a counter-based (Philox) normal stream keyed by ``(seed, k)``.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from . import _backend
from .errors import CollisionError, DomainError
from .measure import ProbabilityMeasure

__all__ = [
    "SdeConfig",
    "DrivingPaths",
    "partition_function",
    "log_partition_gradient",
    "drift",
    "drift_from_log_partition",
    "simulate",
    "constant_paths",
    "empirical_measure",
    "map_seeds",
]

T = TypeVar("T")


@dataclass(frozen=True)
class SdeConfig:
    """Parameters of one SDE run.

    ``lambdas`` defaults to equal weights ``1/n``.  ``record_dt=None``
    stores every accepted step (needed to drive Loewner flows); otherwise
    only the states at multiples of ``record_dt`` and at ``t_max`` are kept.
    ``kappa = 0`` is accepted and gives the deterministic system.
    """

    x0: tuple
    kappa: float
    lambdas: tuple | None = None
    theta: float = 0.0
    dt_base: float = 1e-3
    t_max: float = 1.0
    seed: int = 0
    gap_floor: float = 1e-12
    record_dt: float | None = None
    c_gap: float = 0.1
    max_halvings: int = 40
    n: int = field(init=False)

    def __post_init__(self):
        x0 = tuple(float(x) for x in np.atleast_1d(np.asarray(self.x0, dtype=float)))
        n = len(x0)
        if n == 0:
            raise DomainError("x0 is empty")
        if any(not math.isfinite(x) for x in x0):
            raise DomainError("x0 must be finite")
        if any(b <= a for a, b in zip(x0, x0[1:])):
            raise DomainError("x0 must be strictly increasing")
        lam = (1.0 / n,) * n if self.lambdas is None else tuple(float(l) for l in self.lambdas)
        if len(lam) != n:
            raise DomainError(f"expected {n} weights, got {len(lam)}")
        if any(not 0.0 <= l <= 1.0 for l in lam):
            raise DomainError("weights must lie in [0, 1]")
        if abs(math.fsum(lam) - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {math.fsum(lam)!r}, not 1")
        if not 0.0 <= self.kappa <= 4.0:
            raise DomainError(f"kappa must lie in [0, 4], got {self.kappa!r}")
        if self.theta < 0:
            raise DomainError("theta must be >= 0")
        for name in ("dt_base", "t_max", "gap_floor", "c_gap"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0")
        if self.record_dt is not None and not self.record_dt > 0:
            raise DomainError("record_dt must be > 0")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "n", n)

    def with_seed(self, seed: int) -> "SdeConfig":
        return replace(self, seed=seed)

    @classmethod
    def from_dict(cls, d: dict) -> "SdeConfig":
        """Inverse of ``to_dict``; unknown keys are rejected."""
        d = dict(d)
        n = d.pop("n", None)
        names = {f.name for f in fields(cls) if f.init}
        extra = set(d) - names
        if extra:
            raise DomainError(f"unknown SDE settings: {sorted(extra)}")
        cfg = cls(**d)
        if n is not None and int(n) != cfg.n:
            raise DomainError(f"n = {n} does not match {cfg.n} starting points")
        return cfg

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "kappa": self.kappa,
            "lambdas": list(self.lambdas),
            "theta": self.theta,
            "x0": list(self.x0),
            "dt_base": self.dt_base,
            "t_max": self.t_max,
            "seed": self.seed,
            "gap_floor": self.gap_floor,
            "record_dt": self.record_dt,
            "c_gap": self.c_gap,
            "max_halvings": self.max_halvings,
        }


@dataclass(frozen=True, eq=False)
class DrivingPaths:
    """Stored states of the driving functions.

    ``values[i]`` is the (strictly increasing) state at ``times[i]``;
    ``times[0] == 0`` and ``values[0] == config.x0``.  Between stored
    times the paths are interpolated linearly.
    """

    times: np.ndarray
    values: np.ndarray
    config: SdeConfig

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    @property
    def lambdas(self) -> np.ndarray:
        return np.asarray(self.config.lambdas)

    def at(self, t: float) -> np.ndarray:
        if not 0.0 <= t <= self.times[-1]:
            raise DomainError(f"t = {t!r} outside [0, {self.times[-1]!r}]")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        if i >= len(self.times) - 1:
            return self.values[-1].copy()
        t0, t1 = self.times[i], self.times[i + 1]
        if t == t0:
            return self.values[i].copy()
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.values[i] + w * self.values[i + 1]

    def write_csv(self, path) -> None:
        """Write ``t,V1,...,Vn`` rows with 17 significant digits."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"V{k + 1}" for k in range(self.n)])
            for t, row in zip(self.times, self.values):
                w.writerow([f"{t:.17g}"] + [f"{x:.17g}" for x in row])

    @classmethod
    def read_csv(cls, path, config: SdeConfig) -> "DrivingPaths":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(_ro(data[:, 0]), _ro(data[:, 1:]), config)


def _ro(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_ordered(x: np.ndarray, floor: float = 0.0) -> None:
    if x.size > 1:
        gaps = np.diff(x)
        if np.any(~(gaps > 0)):
            raise DomainError("points must be strictly increasing")
        if np.any(gaps < floor):
            k = int(np.argmin(gaps))
            raise CollisionError(
                "gap below gap_floor", indices=[k, k + 1], gap=float(gaps[k]), gap_floor=floor
            )


def partition_function(x: Sequence[float], kappa: float) -> float:
    """``prod_{j<k} (x_k - x_j)^(2/kappa)``; 1 for a single point."""
    x = np.asarray(x, dtype=float)
    if not kappa > 0:
        raise DomainError("kappa must be > 0")
    _check_ordered(x)
    if x.size < 2:
        return 1.0
    iu = np.triu_indices(x.size, 1)
    logs = np.log(x[iu[1]] - x[iu[0]])
    return math.exp(2.0 / kappa * math.fsum(logs))


def log_partition_gradient(x: Sequence[float], kappa: float) -> np.ndarray:
    """Gradient of ``log partition_function(x, kappa)``."""
    x = np.asarray(x, dtype=float)
    if not kappa > 0:
        raise DomainError("kappa must be > 0")
    _check_ordered(x)
    n = x.size
    grad = np.zeros(n)
    for k in range(n):
        below = x[k] - x[:k]
        above = x[k + 1 :] - x[k]
        grad[k] = 2.0 / kappa * (np.sum(1.0 / below) - np.sum(1.0 / above))
    return grad


def drift(v: Sequence[float], cfg: SdeConfig, backend=None) -> np.ndarray:
    """Drift ``sum_{j!=k} 2(l_k+l_j)/(v_k-v_j) - theta v_k`` of every particle."""
    v = np.ascontiguousarray(v, dtype=float)
    if v.size != cfg.n:
        raise DomainError(f"expected {cfg.n} positions, got {v.size}")
    _check_ordered(v, cfg.gap_floor)
    out = np.empty_like(v)
    kern = backend or _backend.kernels
    kern.drift_into(v, np.asarray(cfg.lambdas), float(cfg.theta), out)
    return out


def drift_from_log_partition(v: Sequence[float], cfg: SdeConfig) -> np.ndarray:
    """``kappa l_k d_k log H + sum_{j!=k} 2 l_j/(v_k - v_j)``.

    Independent route to :func:`drift` for ``theta == 0``.
    """
    v = np.asarray(v, dtype=float)
    if cfg.theta != 0:
        raise DomainError("the partition-function drift has no restoring term")
    _check_ordered(v, cfg.gap_floor)
    lam = np.asarray(cfg.lambdas)
    out = cfg.kappa * lam * log_partition_gradient(v, cfg.kappa)
    for k in range(v.size):
        others = np.arange(v.size) != k
        out[k] += np.sum(2.0 * lam[others] / (v[k] - v[others]))
    return out


class _NoiseSource:
    """Per-particle Philox normal streams keyed by ``(seed, k)``."""

    def __init__(self, seed: int, n: int):
        self.gens = [
            np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))
            for k in range(n)
        ]

    def draw(self, rows: int) -> np.ndarray:
        out = np.empty((rows, len(self.gens)))
        for k, g in enumerate(self.gens):
            out[:, k] = g.standard_normal(rows)
        return out


def _record_stops(cfg: SdeConfig) -> list[float]:
    if cfg.record_dt is None:
        return [cfg.t_max]
    m = int(math.floor(cfg.t_max / cfg.record_dt + 1e-9))
    stops = [k * cfg.record_dt for k in range(1, m + 1)]
    if not stops or stops[-1] < cfg.t_max * (1 - 1e-12):
        stops.append(cfg.t_max)
    else:
        stops[-1] = cfg.t_max
    return stops


def simulate(cfg: SdeConfig, backend=None) -> DrivingPaths:
    """Euler-Maruyama trajectory of the driving functions on ``[0, t_max]``.

    Step size ``min(dt_base, c_gap * min_k gap_k^2 / (2(l_k + l_{k+1})))``
    (and ``<= c_gap/theta``), so a single drift step moves a pair by at
    most a ``c_gap`` fraction of its gap.  A proposal that breaks the
    ordering, or shrinks some gap to less than a tenth of its old value,
    is retried with half the step and fresh noise, up to ``max_halvings``
    times.  Without the second rule, runs of deep noise draws at large
    ``kappa`` can drive a pair so close that steps no longer advance ``t``.

    Raises
    ------
    CollisionError
        Ordering could not be restored; the payload names the time and
        the offending pair.
    """
    kern = backend or _backend.kernels
    n = cfg.n
    v = np.array(cfg.x0, dtype=float)
    lam = np.ascontiguousarray(cfg.lambdas, dtype=float)
    sig = np.sqrt(cfg.kappa * lam)
    use_noise = cfg.kappa > 0
    source = _NoiseSource(cfg.seed, n) if use_noise else None
    chunk, max_chunk = 256, int(max(256, min(8192, 2**21 // n)))
    noise = np.empty((0, n))
    pos = 0

    record_all = cfg.record_dt is None
    cap = 1024 if record_all else 0
    times_buf = np.empty(cap)
    vals_buf = np.empty((cap, n))
    if record_all:
        times_buf[0] = 0.0
        vals_buf[0] = v
    nrec = 1 if record_all else 0
    kept_t, kept_v = [0.0], [v.copy()]
    no_t, no_v = np.empty(0), np.empty((0, n))

    t = 0.0
    for stop in _record_stops(cfg):
        while True:
            out_t, out_v = (times_buf, vals_buf) if record_all else (no_t, no_v)
            t, pos, nrec, status, bad = kern.em_advance(
                v, t, stop, lam, sig, float(cfg.theta), float(cfg.dt_base),
                float(cfg.c_gap), float(cfg.gap_floor), noise, pos, use_noise,
                out_t, out_v, nrec, int(cfg.max_halvings),
            )
            if status == _backend.DONE:
                break
            if status == _backend.NEED_NOISE:
                noise = np.ascontiguousarray(np.vstack([noise[pos:], source.draw(chunk)]))
                pos = 0
                chunk = min(2 * chunk, max_chunk)
            elif status == _backend.FULL:
                cap *= 2
                times_buf = np.resize(times_buf, cap)
                vals_buf = np.resize(vals_buf, (cap, n))
            else:
                raise CollisionError(
                    "driving functions collided; step halving failed",
                    time=float(t), indices=[int(bad), int(bad) + 1], seed=cfg.seed,
                )
        if not record_all:
            kept_t.append(stop)
            kept_v.append(v.copy())
    if record_all:
        times, values = times_buf[:nrec], vals_buf[:nrec]
    else:
        times, values = np.array(kept_t), np.array(kept_v)
    return DrivingPaths(_ro(times), _ro(values), cfg)


def constant_paths(x: Sequence[float], t_max: float,
                   lambdas: Sequence[float] | None = None) -> DrivingPaths:
    """Driving functions frozen at ``x`` on ``[0, t_max]``.

    With one function at 0 this is the single vertical slit.
    """
    cfg = SdeConfig(x0=x, kappa=0.0, lambdas=lambdas, t_max=t_max)
    v = np.asarray(cfg.x0, dtype=float)
    return DrivingPaths(_ro(np.array([0.0, cfg.t_max])), _ro(np.vstack([v, v])), cfg)


def empirical_measure(paths: DrivingPaths, t: float) -> ProbabilityMeasure:
    """Weighted empirical measure ``sum_k l_k delta_{V_k(t)}``.

    Particles with zero weight are dropped.
    """
    x = paths.at(t)
    lam = paths.lambdas
    keep = lam > 0
    return ProbabilityMeasure.atomic(x[keep], lam[keep])


def _threads() -> int:
    env = os.environ.get("LOEWNER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"LOEWNER_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def map_seeds(fn: Callable[[int], T], seeds: Iterable[int]) -> list[T]:
    """Apply ``fn`` to each seed, in parallel, returning results in seed order.

    Parallelism is capped by ``LOEWNER_THREADS``; the kernels release the
    GIL so threads overlap the stepping loops.
    """
    seeds = list(seeds)
    workers = min(_threads(), len(seeds)) or 1
    if workers == 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))
