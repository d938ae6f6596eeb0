"""The deterministic many-slit limit: a Loewner flow driven by a measure flow.

The limit driving measures ``mu_t`` have Cauchy transforms solving the
complex Burgers equation ``dM/dt = -2 M dM/dz``.  Along the straight
characteristics ``w -> w + 2 t M_0(w)`` the transform is constant, so

    M_t(z) = M_0(w),   where   z = w + 2 t M_0(w),  Im w >= Im z.

In the upper half-plane this root is unique: every root satisfies
``2t \\int 2 mu_0(du)/|w-u|^2 < 1``, a region on which the characteristic
map is injective.  ``solve_shift`` finds it by damped Newton.

The Loewner map of the limit, ``dg/dt = M_t(g)``, is evaluated either by
integrating that ODE directly or via the inverse characteristic

    dh/dt = -M_0(h) / (1 + 2 t M_0'(h)),   g_t = h_t + 2 t M_0(h_t).

The two routes give an independent cross-check.  On the real line the
same construction continues ``M_t`` analytically outside ``supp mu_t``;
a real starting point ``x0`` leaves along its characteristic and hits the
support at ``T(x0) = -1 / (2 M_0'(x0))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    BracketError,
    ConvergenceError,
    DomainError,
    NumericalError,
    SwallowedError,
)
from .measure import Kind, ProbabilityMeasure, moments_from_transform

__all__ = [
    "ALIVE",
    "EPS_HIT",
    "TransportedState",
    "Hull",
    "solve_shift",
    "transform_at",
    "transform_real",
    "inverse_char_ode",
    "limit_map",
    "limit_map_direct",
    "exit_time_real",
    "critical_points",
    "support_endpoints",
    "support_gaps",
    "real_lifetime",
    "real_footprint",
    "hull_lifetime",
    "hull_boundary",
    "line_hull_lifetime",
    "line_hull_landing",
    "moment_flow_check",
]

#: Lifetime reported for points still alive at the end of the horizon.
ALIVE = math.inf

EPS_HIT = 1e-6
X_TOL = 1e-8
Y_TOL = 5e-7
NEWTON_TOL = 1e-12
NEWTON_MAXITER = 200
ODE_RTOL = 1e-12
ODE_ATOL = 1e-14
DENOM_FLOOR = 1e-10


def _check_upper(z: complex) -> complex:
    z = complex(z)
    if not (z.imag > 0.0 and math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"expected a finite point with Im z > 0, got {z!r}")
    return z


def _check_time(t: float, name: str = "t") -> float:
    t = float(t)
    if not (t >= 0.0 and math.isfinite(t)):
        raise DomainError(f"{name} must be finite and >= 0, got {t!r}")
    return t


def _check_base(base: ProbabilityMeasure) -> ProbabilityMeasure:
    if not isinstance(base, ProbabilityMeasure):
        raise DomainError("base must be a ProbabilityMeasure")
    return base


@dataclass(frozen=True)
class TransportedState:
    """The limit measure flow at time ``t``, described by its start ``base``."""

    base: ProbabilityMeasure
    t: float

    def __post_init__(self):
        _check_base(self.base)
        object.__setattr__(self, "t", _check_time(self.t))

    def at(self, t: float) -> "TransportedState":
        return TransportedState(self.base, t)


# -- the characteristic map -------------------------------------------------


def _newton_shift(base, t, z, w, target, max_iter):
    """Damped Newton for ``w + 2t M_0(w) = z`` kept inside the upper half-plane.

    Returns ``(w, residual, iterations, converged)``.
    """
    two_t = 2.0 * t
    F = w + two_t * base.transform(w) - z
    r = abs(F)
    for it in range(max_iter):
        if r <= target:
            return w, r, it, True
        d = 1.0 + two_t * base.transform_deriv(w)
        if d == 0 or not math.isfinite(abs(d)):
            break
        step = F / d
        lam = 1.0
        while True:
            wn = w - lam * step
            if wn.imag > 0.0:
                Fn = wn + two_t * base.transform(wn) - z
                rn = abs(Fn)
                if rn < r:
                    break
            lam *= 0.5
            if lam < 1e-14:
                return w, r, it, r <= target
        w, F, r = wn, Fn, rn
    return w, r, max_iter, r <= target


def solve_shift(s: TransportedState, z: complex, *, w0: complex | None = None,
                tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAXITER) -> complex:
    """Start point ``w`` of the characteristic through ``z`` at time ``s.t``.

    Solves ``z = w + 2 t M_0(w)`` with ``Im w >= Im z``.

    Parameters
    ----------
    s : TransportedState
    z : complex
        Point of the upper half-plane.
    w0 : complex, optional
        Newton starting point (defaults to ``z``).  A nearby previous
        solution makes a good warm start.
    tol : float
        Residual target, relative to ``1 + |z|``.

    Raises
    ------
    ConvergenceError
        If neither Newton from ``w0`` nor continuation in time reaches the
        residual target.
    """
    z = _check_upper(z)
    t = s.t
    if t == 0.0:
        return z
    base = s.base
    target = tol * (1.0 + abs(z))
    start = z if w0 is None or not complex(w0).imag > 0.0 else complex(w0)
    w, r, _, ok = _newton_shift(base, t, z, start, target, max_iter)
    if ok:
        return w
    # continuation from the identity at time 0
    for pieces in (16, 128, 1024):
        w = z
        for k in range(1, pieces + 1):
            w, r, _, ok = _newton_shift(base, t * k / pieces, z, w, target, max_iter)
            if not ok:
                break
        if ok:
            return w
    raise ConvergenceError(
        "characteristic equation did not converge",
        z=[z.real, z.imag], t=t, residual=float(r), iterations=max_iter,
    )


def transform_at(s: TransportedState, z: complex, *, w0: complex | None = None) -> complex:
    """``M_t(z)`` for ``z`` in the upper half-plane."""
    return s.base.transform(solve_shift(s, z, w0=w0))


# -- real axis ----------------------------------------------------------------


def _atoms_or_hull(base: ProbabilityMeasure):
    if base.kind is Kind.ATOMIC:
        return base.atoms
    if base.kind is Kind.POINT_MASS:
        return np.array([base.params["x"]])
    return None


def _outside_support(base: ProbabilityMeasure, x: float) -> bool:
    atoms = _atoms_or_hull(base)
    if atoms is not None:
        return bool(np.min(np.abs(atoms - x)) > 0.0)
    lo, hi = base.support()
    return x < lo or x > hi


def _T(base: ProbabilityMeasure, x: float) -> float:
    d = base.transform_deriv(complex(x, 0.0)).real
    return -1.0 / (2.0 * d)


def exit_time_real(base: ProbabilityMeasure, x0: float) -> float:
    """Time ``T(x0) = -1/(2 M_0'(x0))`` at which the characteristic from a
    real point ``x0`` off the support reaches ``supp mu_t``."""
    _check_base(base)
    x0 = float(x0)
    if not _outside_support(base, x0):
        raise DomainError(f"x0 = {x0!r} lies in the support of the base measure")
    return _T(base, x0)


def _edge_offset(edge: float) -> float:
    return 1e-13 * (1.0 + abs(edge))


def critical_points(base: ProbabilityMeasure, t: float) -> tuple[float, float]:
    """Real points ``x0`` left and right of the support with ``T(x0) = t``.

    ``T`` is strictly monotone in the distance from the support, and
    ``T(x) >= d^2/4`` at distance ``d``, so the brackets are explicit.
    """
    _check_base(base)
    t = _check_time(t)
    lo, hi = base.support()
    out = []
    for edge, sgn in ((lo, -1.0), (hi, 1.0)):
        near = edge + sgn * _edge_offset(edge)
        if t == 0.0 or _T(base, near) >= t:
            out.append(near)
            continue
        far = edge + sgn * (2.02 * math.sqrt(t) + _edge_offset(edge))
        f_near = _T(base, near) - t
        f_far = _T(base, far) - t
        if not (f_near < 0.0 < f_far):
            raise BracketError(
                "exit-time bracket does not enclose t", t=t, bracket=[near, far],
                values=[f_near, f_far],
            )
        out.append(brentq(lambda x: _T(base, x) - t, min(near, far), max(near, far),
                          xtol=1e-15, rtol=1e-15, maxiter=500))
    return out[0], out[1]


def support_endpoints(base: ProbabilityMeasure, t: float) -> tuple[float, float]:
    """Outer interval ``[inf supp mu_t, sup supp mu_t]``.

    Each endpoint is ``x0 + 2 t M_0(x0)`` for the critical point ``x0``.
    Gaps in the support are not reported here; see ``support_gaps``.
    """
    t = _check_time(t)
    if t == 0.0:
        return _check_base(base).support()
    xl, xr = critical_points(base, t)
    sl = xl + 2.0 * t * base.transform(complex(xl, 0.0)).real
    sr = xr + 2.0 * t * base.transform(complex(xr, 0.0)).real
    return sl, sr


def support_gaps(base: ProbabilityMeasure, t: float) -> list[tuple[float, float]]:
    """Gaps between atoms of the base not yet closed at time ``t``.

    A gap between consecutive atoms survives while some point in it has
    ``T(x) > t``.  Returns the atom pairs whose gap is still open; empty
    for diffuse bases.
    """
    _check_base(base)
    t = _check_time(t)
    atoms = _atoms_or_hull(base)
    if atoms is None or atoms.size < 2:
        return []
    open_gaps = []
    for a, b in zip(atoms[:-1], atoms[1:]):
        a, b = float(a), float(b)
        res = minimize_scalar(lambda x: -_T(base, x), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * (1.0 + abs(b - a))})
        if -res.fun > t:
            open_gaps.append((a, b))
    return open_gaps


def _real_preimage(base, t, x, xl, xr, sl, sr):
    """Real ``w`` outside ``[xl, xr]`` with ``w + 2t M_0(w) = x``."""
    def phi(w):
        return w + 2.0 * t * base.transform(complex(w, 0.0)).real - x

    if x >= sr:
        if x == sr:
            return xr
        return brentq(phi, xr, x, xtol=1e-15, rtol=1e-15, maxiter=500)
    if x <= sl:
        if x == sl:
            return xl
        return brentq(phi, x, xl, xtol=1e-15, rtol=1e-15, maxiter=500)
    raise DomainError(f"x = {x!r} lies inside supp mu_t = [{sl}, {sr}]")


def transform_real(s: TransportedState, x: float) -> float:
    """``M_t(x)`` for real ``x`` outside the support of ``mu_t``.

    The analytic continuation of ``M_t`` across the real line there;
    computed from the real characteristic through ``x`` by bracketing.
    """
    x = float(x)
    base, t = s.base, s.t
    if t == 0.0:
        if not _outside_support(base, x):
            raise DomainError(f"x = {x!r} lies in the support of the base measure")
        return base.transform(complex(x, 0.0)).real
    xl, xr = critical_points(base, t)
    sl = xl + 2.0 * t * base.transform(complex(xl, 0.0)).real
    sr = xr + 2.0 * t * base.transform(complex(xr, 0.0)).real
    w = _real_preimage(base, t, x, xl, xr, sl, sr)
    return base.transform(complex(w, 0.0)).real


class _EdgeCache:
    """Critical points and support edges, memoised per time value."""

    def __init__(self, base):
        self.base = base
        self._memo: dict[float, tuple[float, float, float, float]] = {}

    def __call__(self, tau: float):
        hit = self._memo.get(tau)
        if hit is None:
            base = self.base
            if tau == 0.0:
                lo, hi = base.support()
                hit = (lo, hi, lo, hi)
            else:
                xl, xr = critical_points(base, tau)
                sl = xl + 2.0 * tau * base.transform(complex(xl, 0.0)).real
                sr = xr + 2.0 * tau * base.transform(complex(xr, 0.0)).real
                hit = (xl, xr, sl, sr)
            if len(self._memo) > 4096:
                self._memo.clear()
            self._memo[tau] = hit
        return hit


def real_lifetime(base: ProbabilityMeasure, x0: float, t_max: float, *,
                  tau0: float = 0.0, eps_hit: float = EPS_HIT) -> float:
    """First time the real Loewner trajectory from ``x0`` comes within
    ``eps_hit`` of ``supp mu_tau``.

    Integrates ``dx/dtau = M_tau(x)`` from ``tau0``.  Returns ``ALIVE`` if
    the trajectory is still clear of the support at ``t_max``.
    """
    _check_base(base)
    x0 = float(x0)
    t_max = _check_time(t_max, "t_max")
    tau0 = _check_time(tau0, "tau0")
    edges = _EdgeCache(base)
    _, _, sl, sr = edges(tau0)
    if sl - eps_hit < x0 < sr + eps_hit:
        return tau0
    side = 1.0 if x0 >= sr else -1.0
    if tau0 >= t_max:
        return ALIVE

    def rhs(tau, y):
        xl, xr, sl, sr = edges(tau)
        x = y[0]
        if tau == 0.0:
            if (side > 0 and x <= sr) or (side < 0 and x >= sl):
                return [base.transform(complex(sr if side > 0 else sl, 0.0)).real]
            return [base.transform(complex(x, 0.0)).real]
        # clamp trial points that overshoot into the support to the edge value
        if side > 0:
            w = xr if x <= sr else _real_preimage(base, tau, x, xl, xr, sl, sr)
        else:
            w = xl if x >= sl else _real_preimage(base, tau, x, xl, xr, sl, sr)
        return [base.transform(complex(w, 0.0)).real]

    def hit(tau, y):
        _, _, sl, sr = edges(tau)
        return side * (y[0] - (sr if side > 0 else sl)) - eps_hit

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(rhs, (tau0, t_max), [x0], method="DOP853", events=hit,
                    rtol=1e-11, atol=1e-13)
    if sol.status == -1:
        raise ConvergenceError("real trajectory integration failed", x0=x0, message_ivp=sol.message)
    if sol.t_events[0].size:
        return float(sol.t_events[0][0])
    return ALIVE


def real_footprint(base: ProbabilityMeasure, t: float, *, eps_hit: float = EPS_HIT,
                   x_tol: float = X_TOL) -> tuple[float, float]:
    """The interval ``K_t`` cuts out of the real line.

    The right endpoint is ``sup {x0 : S(x0) <= t}`` where ``S`` is the
    real lifetime, found by bisection; ``S`` increases with the distance
    from the support and ``S(x0) < T(x0)``, so the critical point with
    ``T(x0) = t`` is an inner bracket.  The left endpoint is symmetric.
    """
    _check_base(base)
    t = _check_time(t)
    if t == 0.0:
        return base.support()
    xl, xr = critical_points(base, t)
    out = []
    for inner, sgn in ((xl, -1.0), (xr, 1.0)):
        if real_lifetime(base, inner, t, eps_hit=eps_hit) > t:
            raise BracketError("inner footprint bracket is alive at t", t=t, x0=inner)
        step = math.sqrt(t)
        outer = inner + sgn * step
        for _ in range(60):
            if real_lifetime(base, outer, t, eps_hit=eps_hit) > t:
                break
            inner, step = outer, 2.0 * step
            outer = inner + sgn * step
        else:
            raise BracketError("no surviving real point found", t=t, x0=outer)
        while abs(outer - inner) > x_tol:
            mid = 0.5 * (inner + outer)
            if real_lifetime(base, mid, t, eps_hit=eps_hit) <= t:
                inner = mid
            else:
                outer = mid
        out.append(0.5 * (inner + outer))
    return out[0], out[1]


# -- maps in the upper half-plane -------------------------------------------------


def _h_rhs(base):
    def rhs(tau, y):
        h = complex(y[0])
        d = 1.0 + 2.0 * tau * base.transform_deriv(h)
        if abs(d) < DENOM_FLOOR:
            raise NumericalError(
                "inverse characteristic denominator vanished", tau=tau, h=[h.real, h.imag]
            )
        return [-base.transform(h) / d]
    return rhs


def inverse_char_ode(s_base: ProbabilityMeasure, z: complex, t: float, *,
                     rtol: float = ODE_RTOL, atol: float = ODE_ATOL) -> complex:
    """``h_t(z)`` from ``dh/dtau = -M_0(h) / (1 + 2 tau M_0'(h))``, ``h_0 = z``."""
    base = _check_base(s_base)
    z = _check_upper(z)
    t = _check_time(t)
    if t == 0.0:
        return z
    sol = solve_ivp(_h_rhs(base), (0.0, t), [z], method="DOP853", rtol=rtol, atol=atol)
    if sol.status != 0:
        raise ConvergenceError("inverse characteristic ODE failed", z=[z.real, z.imag], t=t,
                               detail=sol.message)
    return complex(sol.y[0, -1])


def limit_map(s_base: ProbabilityMeasure, z: complex, t: float) -> complex:
    """``g_t(z) = h_t(z) + 2 t M_0(h_t(z))`` for the limit Loewner flow.

    Raises
    ------
    SwallowedError
        If ``z`` is in the hull by time ``t``.
    """
    base = _check_base(s_base)
    z = _check_upper(z)
    t = _check_time(t)
    try:
        h = inverse_char_ode(base, z, t)
    except NumericalError as exc:
        raise SwallowedError("point swallowed before t", z=[z.real, z.imag], t=t,
                             detail=str(exc)) from exc
    g = h + 2.0 * t * base.transform(h)
    if not g.imag > 0.0 or not h.imag > 0.0:
        raise SwallowedError("point swallowed before t", z=[z.real, z.imag], t=t,
                             g=[g.real, g.imag])
    return g


class _WarmTransform:
    """``(tau, g) -> M_tau(g)`` with Newton warm-started from the last call."""

    def __init__(self, base):
        self.base = base
        self.w = None

    def __call__(self, tau, g):
        s = TransportedState(self.base, tau)
        w = solve_shift(s, g, w0=self.w)
        self.w = w
        return self.base.transform(w)


def limit_map_direct(s_base: ProbabilityMeasure, z: complex, t: float, *,
                     rtol: float = ODE_RTOL, atol: float = ODE_ATOL) -> complex:
    """``g_t(z)`` by integrating ``dg/dtau = M_tau(g)`` directly.

    Each right-hand side evaluation solves the characteristic equation,
    so this is slower than ``limit_map``; it serves as the independent
    route.
    """
    base = _check_base(s_base)
    z = _check_upper(z)
    t = _check_time(t)
    if t == 0.0:
        return z
    field_ = _WarmTransform(base)

    def rhs(tau, y):
        g = complex(y[0])
        if not g.imag > 0.0:
            raise SwallowedError("trajectory reached the real line", tau=tau)
        return [field_(tau, g)]

    sol = solve_ivp(rhs, (0.0, t), [z], method="DOP853", rtol=rtol, atol=atol)
    if sol.status != 0:
        raise ConvergenceError("Loewner ODE failed", z=[z.real, z.imag], t=t, detail=sol.message)
    return complex(sol.y[0, -1])


def hull_lifetime(base: ProbabilityMeasure, z: complex, t_max: float, *,
                  eps_hit: float = EPS_HIT, method: str = "g") -> float:
    """Swallowing time of ``z`` under the limit flow, or ``ALIVE``.

    Parameters
    ----------
    base : ProbabilityMeasure
    z : complex
        Starting point in the upper half-plane.
    t_max : float
        Horizon.
    eps_hit : float
        A trajectory is dead once ``Im g < eps_hit`` above ``supp mu_tau``.
    method : {"g", "h"}
        ``"g"`` integrates ``dg/dtau = M_tau(g)``; ``"h"`` integrates the
        inverse characteristic and forms ``g = h + 2 tau M_0(h)``.  The
        two agree to integration accuracy.

    Notes
    -----
    If ``Im g`` drops below ``eps_hit`` outside the support the point is
    treated as real from then on and followed by ``real_lifetime``.
    """
    base = _check_base(base)
    z = _check_upper(z)
    t_max = _check_time(t_max, "t_max")
    if method not in ("g", "h"):
        raise DomainError(f"unknown method {method!r}")
    if z.imag < eps_hit:
        raise DomainError("Im z must be at least eps_hit")
    if t_max == 0.0:
        return ALIVE

    if method == "g":
        field_ = _WarmTransform(base)

        floor = 0.5 * eps_hit

        def rhs(tau, y):
            # trial stages may overshoot the event; evaluate them just above
            # the real line instead
            g = complex(y[0])
            if g.imag < floor:
                g = complex(g.real, floor)
            return [field_(tau, g)]

        def to_g(tau, y):
            return complex(y[0])
    else:
        rhs = _h_rhs(base)

        def to_g(tau, y):
            h = complex(y[0])
            return h + 2.0 * tau * base.transform(h)

    def low(tau, y):
        return to_g(tau, y).imag - eps_hit

    low.terminal = True
    low.direction = -1
    sol = solve_ivp(rhs, (0.0, t_max), [z], method="DOP853", events=low,
                    rtol=1e-10, atol=1e-12)
    if sol.status == -1:
        raise ConvergenceError("hull trajectory integration failed", z=[z.real, z.imag],
                               detail=sol.message)
    if not sol.t_events[0].size:
        return ALIVE
    tau = float(sol.t_events[0][0])
    g = to_g(tau, sol.y_events[0][0])
    sl, sr = support_endpoints(base, tau)
    if sl - eps_hit <= g.real <= sr + eps_hit:
        return tau
    return real_lifetime(base, g.real, t_max, tau0=tau, eps_hit=eps_hit)


@dataclass(frozen=True)
class Hull:
    """Upper boundary of the limit hull ``K_t`` sampled on vertical columns.

    Attributes
    ----------
    t : float
    x, y : ndarray
        Column abscissae and boundary heights (``y >= 0``, zero at the ends).
    footprint : (float, float)
        ``K_t`` intersected with the real line.
    flags : tuple of str
        ``"non_monotone_column"`` if some column was not a clean
        dead-below/alive-above split, ``"support_gaps"`` if ``supp mu_t``
        still has gaps (several hull components may exist).
    """

    t: float
    x: np.ndarray
    y: np.ndarray
    footprint: tuple[float, float]
    flags: tuple[str, ...] = ()
    details: dict = field(default_factory=dict, compare=False)

    @property
    def boundary(self) -> np.ndarray:
        return self.x + 1j * self.y

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "footprint": list(self.footprint),
            "flags": list(self.flags),
            "x": [float(v) for v in self.x],
            "y": [float(v) for v in self.y],
        }


def _column_height(base, x, t, y_top, eps_hit, method, scan, y_tol):
    """Boundary height over ``x``; returns ``(height, monotone)``."""
    def dead(y):
        # heights below eps_hit are probed at eps_hit (columns over a gap
        # of the support can be arbitrarily low)
        y = max(y, eps_hit)
        return hull_lifetime(base, complex(x, y), t, eps_hit=eps_hit, method=method) <= t

    top = y_top
    for _ in range(40):
        if not dead(top):
            break
        top *= 2.0
    else:
        raise BracketError("no surviving height on column", x=x, t=t)
    ys = top * np.arange(1, scan + 1) / scan
    states = [dead(y) for y in ys[:-1]] + [False]
    # a clean column is dead on a prefix of the scan and alive above it
    first_alive = states.index(False)
    monotone = not any(states[first_alive:])
    if not monotone:
        fine = top * np.arange(1, 8 * scan + 1) / (8 * scan)
        fine_states = [dead(y) for y in fine]
        dead_idx = [i for i, d in enumerate(fine_states) if d]
        first_alive = dead_idx[-1] + 1 if dead_idx else 0
        ys, lo_i = fine, first_alive - 1
    else:
        lo_i = first_alive - 1
    lo = 0.0 if lo_i < 0 else float(ys[lo_i])
    hi = float(ys[min(lo_i + 1, len(ys) - 1)])
    while hi - lo > y_tol:
        mid = 0.5 * (lo + hi)
        if dead(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), monotone


def hull_boundary(base: ProbabilityMeasure, t: float, n_columns: int = 64, *,
                  eps_hit: float = EPS_HIT, method: str = "g", scan: int = 8,
                  y_tol: float = Y_TOL, footprint: Sequence[float] | None = None) -> Hull:
    """Sample the upper boundary of the limit hull at time ``t``.

    Columns are equally spaced over the real footprint (both ends
    included, where the height is zero).  On each column a coarse scan of
    ``scan`` heights locates the dead/alive transition, which is then
    refined by bisection to ``y_tol``.  Lifetime is assumed to increase
    with height along a column; when the scan contradicts that, the column
    is rescanned on a grid eight times finer, the highest dead height is
    used, and the hull is flagged.
    """
    base = _check_base(base)
    t = _check_time(t)
    if not t > 0.0:
        raise DomainError("t must be > 0")
    n_columns = int(n_columns)
    if n_columns < 8:
        raise DomainError("n_columns must be at least 8")
    a, b = footprint if footprint is not None else real_footprint(base, t, eps_hit=eps_hit)
    xs = a + (b - a) * np.arange(n_columns) / (n_columns - 1)
    ys = np.zeros(n_columns)
    lo, hi = base.support()
    y_top = 2.0 * math.sqrt(t) + 0.5 * (hi - lo)
    flags = []
    bad_columns = []
    for j in range(1, n_columns - 1):
        ys[j], ok = _column_height(base, float(xs[j]), t, y_top, eps_hit, method, scan, y_tol)
        if not ok:
            bad_columns.append(j)
    if bad_columns:
        flags.append("non_monotone_column")
    if support_gaps(base, t):
        flags.append("support_gaps")
    return Hull(t=t, x=xs, y=ys, footprint=(float(a), float(b)), flags=tuple(flags),
                details={"non_monotone_columns": bad_columns})


# -- straight characteristics -------------------------------------------------------


def line_hull_lifetime(base: ProbabilityMeasure, z0: complex) -> float:
    """Time at which the straight characteristic ``z0 + 2 t M_0(z0)`` hits
    the real line: ``-Im z0 / (2 Im M_0(z0))``."""
    return line_hull_landing(base, z0)[0]


def line_hull_landing(base: ProbabilityMeasure, z0: complex) -> tuple[float, float]:
    """Hitting time and landing point of the straight characteristic.

    Raises
    ------
    NumericalError
        If the landing point is not in ``supp mu_t`` at the hitting time,
        which would contradict the characteristic picture.
    """
    base = _check_base(base)
    z0 = _check_upper(z0)
    m = base.transform(z0)
    if not m.imag < 0.0:
        raise DomainError("Im M_0(z0) must be negative")
    t_star = -z0.imag / (2.0 * m.imag)
    x = (z0 + 2.0 * t_star * m).real
    sl, sr = support_endpoints(base, t_star)
    slack = 1e-9 * (1.0 + abs(x))
    if not sl - slack <= x <= sr + slack:
        raise NumericalError("landing point outside the support", t=t_star, x=x,
                             support=[sl, sr])
    return t_star, x


# -- moments ------------------------------------------------------------------------


def moment_flow_check(base: ProbabilityMeasure, t_grid: Iterable[float]) -> dict:
    """Second moment of ``mu_t`` recovered from ``M_t`` on a t-grid.

    The limit flow has ``d m_2 / dt = 4``: testing the measure equation
    with ``f(x) = x^2`` gives ``(f'(x) - f'(y)) / (x - y) = 2``.

    Returns
    -------
    dict
        ``t``, ``m2`` lists and ``deviation = max |m2(t) - m2(0) - 4t|``.
    """
    base = _check_base(base)
    ts = [float(t) for t in t_grid]
    if not ts or ts[0] != 0.0 or any(b <= a for a, b in zip(ts, ts[1:])):
        raise DomainError("t_grid must be increasing and start at 0")
    m2 = []
    for t in ts:
        s = TransportedState(base, t)
        sl, sr = support_endpoints(base, t)
        R = 2.0 * (max(abs(sl), abs(sr)) + 1.0)
        m2.append(moments_from_transform(lambda z, s=s: transform_at(s, z), 2, R)[2])
    dev = max(abs(m - m2[0] - 4.0 * t) for m, t in zip(m2, ts))
    return {"t": ts, "m2": m2, "deviation": dev}
