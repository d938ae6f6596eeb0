"""Multi-slit chordal Loewner flow driven by simulated driving functions.

For driving functions ``V_1..V_n`` with weights ``l_k`` (summing to one)

    dg_s(z)/ds = sum_k 2 l_k / (g_s(z) - V_k(s)),   g_0(z) = z,

and ``g_t`` maps the complement of the hull ``K_t`` onto the upper
half-plane with ``g_t(z) = z + 2t/z + O(|z|^-2)``.  Between stored times
the drivers are interpolated linearly.  The integrator is classical RK4
with step ``min(c_step d^2, h_max)``, ``d`` being the distance from
``g`` to the nearest driver; a point is swallowed once ``d`` falls below
``eps_swallow``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .errors import DomainError, NumericalError
from .sde import DrivingPaths, _threads

__all__ = [
    "ALIVE",
    "FlowResult",
    "flow_map",
    "flow_many",
    "lifetime",
    "lifetime_grid",
    "inverse_flow",
    "trace_tips",
    "tip_paths",
    "hcap_coefficient",
    "write_lifetime_csv",
    "write_tips_csv",
]

#: Lifetime reported for points still alive at the end of the paths.
ALIVE = math.inf

EPS_SWALLOW = 1e-9
C_STEP = 0.02
H_MAX = 1e-2
EPS_LIFT = 1e-6
_CHUNK = 64


@dataclass(frozen=True)
class FlowResult:
    """Outcome of following one point: alive with ``g_t(z)``, or dead at
    ``swallow_time``."""

    value: complex | None
    swallow_time: float | None = None

    @property
    def alive(self) -> bool:
        return self.swallow_time is None

    @property
    def status(self) -> str:
        return "alive" if self.alive else "dead"


def _check_time(paths: DrivingPaths, t: float) -> float:
    t = float(t)
    if not (0.0 <= t <= paths.t_max):
        raise DomainError(f"t = {t!r} outside [0, {paths.t_max!r}]")
    return t


def _as_upper(zs) -> np.ndarray:
    z = np.atleast_1d(np.asarray(zs, dtype=complex)).ravel()
    if not np.all(z.imag > 0.0) or not np.all(np.isfinite(z)):
        raise DomainError("all points must be finite with Im z > 0")
    return np.ascontiguousarray(z)


def _parallel_chunks(fn, n: int) -> None:
    """Run ``fn(lo, hi)`` over index chunks; kernels release the GIL."""
    bounds = [(lo, min(lo + _CHUNK, n)) for lo in range(0, n, _CHUNK)]
    workers = min(_threads(), len(bounds))
    if workers <= 1:
        for lo, hi in bounds:
            fn(lo, hi)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda b: fn(*b), bounds))


def flow_many(paths: DrivingPaths, zs, t: float, *, eps_swallow: float = EPS_SWALLOW,
              c_step: float = C_STEP, h_max: float = H_MAX,
              backend=None) -> tuple[np.ndarray, np.ndarray]:
    """Follow many points to time ``t``.

    Returns
    -------
    values : ndarray of complex
        ``g_t(z)`` for alive points; the last value reached for dead ones.
    death : ndarray of float
        NaN for alive points, else the swallowing time.
    """
    t = _check_time(paths, t)
    z = _as_upper(zs)
    kern = backend or _backend.kernels
    out = np.empty_like(z)
    death = np.empty(z.size)
    times = np.ascontiguousarray(paths.times)
    vals = np.ascontiguousarray(paths.values)
    lam = np.ascontiguousarray(paths.lambdas, dtype=float)

    def work(lo, hi):
        kern.loewner_forward(times, vals, lam, z[lo:hi], t, eps_swallow, c_step, h_max,
                             out[lo:hi], death[lo:hi])

    _parallel_chunks(work, z.size)
    return out, death


def flow_map(paths: DrivingPaths, z: complex, t: float, **kw) -> FlowResult:
    """``g_t(z)`` for one point, or its swallowing time if ``z`` is in ``K_t``."""
    out, death = flow_many(paths, [z], t, **kw)
    if math.isnan(death[0]):
        return FlowResult(complex(out[0]))
    return FlowResult(None, float(death[0]))


def lifetime(paths: DrivingPaths, z: complex, **kw) -> float:
    """Swallowing time ``T(z)``, or ``ALIVE`` if ``z`` survives the paths."""
    return float(lifetime_grid(paths, [z], **kw)[0])


def lifetime_grid(paths: DrivingPaths, zs, **kw) -> np.ndarray:
    """Swallowing times for many points (``ALIVE`` for survivors)."""
    _, death = flow_many(paths, zs, paths.t_max, **kw)
    return np.where(np.isnan(death), ALIVE, death)


def inverse_flow(paths: DrivingPaths, ws, t: float, *, c_step: float = C_STEP,
                 h_max: float = H_MAX, backend=None) -> np.ndarray:
    """Run the Loewner field backwards from time ``t`` to 0.

    For ``w = g_t(z)`` this recovers ``z``.

    Raises
    ------
    NumericalError
        If a reversed path leaves the upper half-plane; the payload gives
        the reversed time ``s``.
    """
    t = _check_time(paths, t)
    w = _as_upper(ws)
    kern = backend or _backend.kernels
    out = np.empty_like(w)
    fail = np.empty(w.size)
    times = np.ascontiguousarray(paths.times)
    vals = np.ascontiguousarray(paths.values)
    lam = np.ascontiguousarray(paths.lambdas, dtype=float)

    def work(lo, hi):
        kern.loewner_backward(times, vals, lam, w[lo:hi], t, c_step, h_max,
                              out[lo:hi], fail[lo:hi])

    _parallel_chunks(work, w.size)
    bad = np.nonzero(~np.isnan(fail))[0]
    if bad.size:
        i = int(bad[0])
        raise NumericalError("reverse flow left the upper half-plane", index=i,
                             s=float(fail[i]), w=[w[i].real, w[i].imag])
    return out


def trace_tips(paths: DrivingPaths, t: float, eps_lift: float = EPS_LIFT, **kw) -> list[complex]:
    """Tips of the ``n`` slits at time ``t``.

    Tip ``k`` is the reverse flow started at ``V_k(t) + i eps_lift``; the
    position error is of order ``eps_lift``.
    """
    t = _check_time(paths, t)
    if not t > 0.0:
        raise DomainError("t must be > 0")
    if not eps_lift > 0.0:
        raise DomainError("eps_lift must be > 0")
    w = paths.at(t) + 1j * eps_lift
    return [complex(v) for v in inverse_flow(paths, w, t, **kw)]


def tip_paths(paths: DrivingPaths, times: Iterable[float],
              eps_lift: float = EPS_LIFT, **kw) -> list[tuple[int, float, complex]]:
    """Rows ``(k, t, tip_k(t))`` tracing every slit over ``times``."""
    rows = []
    for t in times:
        for k, tip in enumerate(trace_tips(paths, t, eps_lift, **kw)):
            rows.append((k, float(t), tip))
    return rows


def hcap_coefficient(paths: DrivingPaths, t: float, *, n_points: int = 8,
                     residual_tol: float = 1e-6, **kw) -> float:
    """Coefficient ``c`` in ``g_t(z) = z + c/z + O(|z|^-2)``.

    ``g_t - z`` is sampled on ``n_points`` of the upper half of the circle
    ``|z| = 100 (1 + max |V|)`` and fitted with ``c/z + a_2/z^2 + a_3/z^3``
    in real coefficients (the map commutes with reflection in the real
    axis).  The two extra terms absorb the next orders of the expansion,
    which are otherwise not negligible at this radius.

    Raises
    ------
    NumericalError
        If the relative fit residual exceeds ``residual_tol``.
    """
    t = _check_time(paths, t)
    if t == 0.0:
        return 0.0
    upto = paths.times <= t
    vmax = float(np.max(np.abs(paths.values[upto]))) if upto.any() else 0.0
    vmax = max(vmax, float(np.max(np.abs(paths.at(t)))))
    R = 100.0 * (1.0 + vmax)
    theta = math.pi * (np.arange(n_points) + 0.5) / n_points
    zs = R * np.exp(1j * theta)
    g, death = flow_many(paths, zs, t, **kw)
    if not np.all(np.isnan(death)):
        raise NumericalError("a fitting point was swallowed", R=R, t=t)
    d = g - zs
    orders = np.arange(1, 4)
    # d = sum_k b_k R^-k e^{-ik theta} with real b_k
    A = np.vstack([np.cos(np.outer(theta, orders)), -np.sin(np.outer(theta, orders))])
    A = A / R ** orders
    rhs = np.concatenate([d.real, d.imag])
    coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = np.linalg.norm(A @ coef - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if resid > residual_tol:
        raise NumericalError("capacity fit residual too large", residual=float(resid), R=R)
    return float(coef[0])


def write_lifetime_csv(path, zs: Sequence[complex], lifetimes: Sequence[float]) -> None:
    """CSV ``re,im,lifetime`` (``inf`` for survivors), 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "lifetime"])
        for z, T in zip(zs, lifetimes):
            z = complex(z)
            w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}", f"{float(T):.17g}"])


def write_tips_csv(path, rows: Iterable[tuple[int, float, complex]]) -> None:
    """CSV ``k,t,re,im`` of slit tips, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "t", "re", "im"])
        for k, t, z in rows:
            w.writerow([int(k), f"{t:.17g}", f"{z.real:.17g}", f"{z.imag:.17g}"])
