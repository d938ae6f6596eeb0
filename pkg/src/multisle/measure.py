"""Probability measures on the real line and their Cauchy transforms.

Throughout the package the transform carries a factor two,

    M(z) = \\int 2 m(du) / (z - u),

which is the vector field of the Loewner equation driven by ``m``.  With
this normalisation ``Im M(z) < 0`` on the upper half-plane and
``|M(z)| <= 2 / Im z``.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalError

__all__ = [
    "Kind",
    "ProbabilityMeasure",
    "cauchy_transform",
    "cauchy_transform_deriv",
    "cauchy_transform_real",
    "discretize",
    "moments_from_transform",
    "transform_distance",
    "cdf_distance",
    "levy_distance",
    "sample_cdf_distance",
]

WEIGHT_TOL = 1e-12
NORMALIZE_TOL = 1e-9


class Kind(str, Enum):
    ATOMIC = "Atomic"
    POINT_MASS = "PointMass"
    UNIFORM = "UniformInterval"
    SEMICIRCLE = "Semicircle"


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProbabilityMeasure:
    """A finitely atomic measure or one of a few closed-form laws.

    Build instances with the class methods :meth:`atomic`,
    :meth:`point_mass`, :meth:`uniform` and :meth:`semicircle`; they
    validate and normalise.  Instances are immutable.

    Attributes
    ----------
    kind : Kind
    atoms, weights : ndarray
        Only populated for ``Kind.ATOMIC``; read-only.
    params : mapping
        ``{"x": c}`` for a point mass, ``{"a": a, "b": b}`` for the uniform
        law, ``{"center": c, "radius": R}`` for the semicircle.
    """

    kind: Kind
    atoms: np.ndarray = field(default_factory=lambda: _frozen([]))
    weights: np.ndarray = field(default_factory=lambda: _frozen([]))
    params: Mapping[str, float] = field(default_factory=dict)

    # -- constructors -----------------------------------------------------

    @classmethod
    def atomic(cls, atoms: Sequence[float], weights: Sequence[float] | None = None):
        x = np.asarray(atoms, dtype=float).ravel()
        if x.size == 0:
            raise DomainError("atomic measure needs at least one atom")
        if not np.all(np.isfinite(x)):
            raise DomainError("atoms must be finite")
        if np.any(np.diff(x) <= 0):
            raise DomainError("atoms must be strictly increasing")
        if weights is None:
            w = np.full(x.size, 1.0 / x.size)
        else:
            w = np.asarray(weights, dtype=float).ravel()
            if w.shape != x.shape:
                raise DomainError("atoms and weights differ in length")
            if np.any(~np.isfinite(w)) or np.any(w <= 0):
                raise DomainError("weights must be positive")
            total = math.fsum(w)
            if abs(total - 1.0) > NORMALIZE_TOL:
                raise DomainError(f"weights sum to {total!r}, not 1")
            if abs(total - 1.0) > WEIGHT_TOL:
                w = w / total
        return cls(Kind.ATOMIC, _frozen(x), _frozen(w), {})

    @classmethod
    def point_mass(cls, x: float = 0.0):
        return cls(Kind.POINT_MASS, params={"x": float(x)})

    @classmethod
    def uniform(cls, a: float, b: float):
        if not b > a:
            raise DomainError("uniform law needs a < b")
        return cls(Kind.UNIFORM, params={"a": float(a), "b": float(b)})

    @classmethod
    def semicircle(cls, radius: float, center: float = 0.0):
        if not radius > 0:
            raise DomainError("semicircle radius must be positive")
        return cls(Kind.SEMICIRCLE, params={"center": float(center), "radius": float(radius)})

    # -- basic accessors --------------------------------------------------

    def support(self) -> tuple[float, float]:
        """Smallest closed interval containing the support."""
        p = self.params
        if self.kind is Kind.ATOMIC:
            return float(self.atoms[0]), float(self.atoms[-1])
        if self.kind is Kind.POINT_MASS:
            return p["x"], p["x"]
        if self.kind is Kind.UNIFORM:
            return p["a"], p["b"]
        return p["center"] - p["radius"], p["center"] + p["radius"]

    def support_radius(self) -> float:
        lo, hi = self.support()
        return max(abs(lo), abs(hi))

    def as_atomic(self) -> "ProbabilityMeasure":
        """A point mass as a one-atom measure; other kinds unchanged."""
        if self.kind is Kind.POINT_MASS:
            return ProbabilityMeasure.atomic([self.params["x"]], [1.0])
        return self

    def cdf(self, x):
        """Right-continuous distribution function, vectorised."""
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.kind is Kind.ATOMIC:
            cum = np.concatenate([[0.0], np.cumsum(self.weights)])
            return np.minimum(cum[np.searchsorted(self.atoms, x, side="right")], 1.0)
        if self.kind is Kind.POINT_MASS:
            return (x >= p["x"]).astype(float)
        if self.kind is Kind.UNIFORM:
            return np.clip((x - p["a"]) / (p["b"] - p["a"]), 0.0, 1.0)
        s = np.clip((x - p["center"]) / p["radius"], -1.0, 1.0)
        return 0.5 + (s * np.sqrt(1.0 - s * s) + np.arcsin(s)) / np.pi

    def cdf_left(self, x):
        """Left limit of the distribution function."""
        x = np.asarray(x, dtype=float)
        if self.kind is Kind.ATOMIC:
            cum = np.concatenate([[0.0], np.cumsum(self.weights)])
            return np.minimum(cum[np.searchsorted(self.atoms, x, side="left")], 1.0)
        if self.kind is Kind.POINT_MASS:
            return (x > self.params["x"]).astype(float)
        return self.cdf(x)

    def moment(self, k: int) -> float:
        """Exact k-th raw moment."""
        p = self.params
        if self.kind is Kind.ATOMIC:
            return math.fsum(self.weights * self.atoms**k)
        if self.kind is Kind.POINT_MASS:
            return p["x"] ** k
        if self.kind is Kind.UNIFORM:
            a, b = p["a"], p["b"]
            return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))
        c, r = p["center"], p["radius"]
        # central moments of the semicircle are Catalan numbers times (R/2)^{2j}
        total = 0.0
        for j in range(0, k + 1, 2):
            cat = math.comb(j, j // 2) / (j // 2 + 1)
            total += math.comb(k, j) * cat * (r / 2) ** j * c ** (k - j)
        return total

    # -- transforms -------------------------------------------------------

    def transform(self, z: complex) -> complex:
        """Scalar Cauchy transform without domain checks."""
        p = self.params
        kind = self.kind
        if kind is Kind.POINT_MASS:
            return 2.0 / (z - p["x"])
        if kind is Kind.ATOMIC:
            if self.atoms.size == 1:
                return 2.0 / (z - self.atoms[0])
            return complex(2.0 * np.sum(self.weights / (z - self.atoms)))
        if kind is Kind.UNIFORM:
            a, b = p["a"], p["b"]
            if z.imag == 0.0:
                return 2.0 / (b - a) * math.log(abs(z.real - a) / abs(z.real - b))
            return 2.0 / (b - a) * (cmath.log(z - a) - cmath.log(z - b))
        c, r = p["center"], p["radius"]
        w = z - c
        if z.imag == 0.0:
            x = w.real
            return 4.0 / (x + math.copysign(math.sqrt(x * x - r * r), x))
        return 4.0 / (w + cmath.sqrt(w - r) * cmath.sqrt(w + r))

    def transform_deriv(self, z: complex) -> complex:
        """Scalar derivative ``M'(z)`` without domain checks."""
        p = self.params
        kind = self.kind
        if kind is Kind.POINT_MASS:
            return -2.0 / (z - p["x"]) ** 2
        if kind is Kind.ATOMIC:
            if self.atoms.size == 1:
                return -2.0 / (z - self.atoms[0]) ** 2
            return complex(-2.0 * np.sum(self.weights / (z - self.atoms) ** 2))
        if kind is Kind.UNIFORM:
            a, b = p["a"], p["b"]
            return 2.0 / (b - a) * (1.0 / (z - a) - 1.0 / (z - b))
        c, r = p["center"], p["radius"]
        w = z - c
        if z.imag == 0.0:
            x = w.real
            s = math.copysign(math.sqrt(x * x - r * r), x)
        else:
            s = cmath.sqrt(w - r) * cmath.sqrt(w + r)
        return 4.0 / (r * r) * (1.0 - w / s)

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "atoms": [float(a) for a in self.atoms],
            "weights": [float(w) for w in self.weights],
            "params": dict(self.params),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ProbabilityMeasure":
        try:
            kind = Kind(d["kind"])
        except (KeyError, ValueError) as exc:
            raise DomainError(f"unknown measure kind in {d!r}") from exc
        p = d.get("params", {}) or {}
        if kind is Kind.ATOMIC:
            return cls.atomic(d["atoms"], d.get("weights") or None)
        if kind is Kind.POINT_MASS:
            return cls.point_mass(p.get("x", 0.0))
        if kind is Kind.UNIFORM:
            return cls.uniform(p["a"], p["b"])
        return cls.semicircle(p["radius"], p.get("center", 0.0))

    def to_json(self) -> str:
        # json uses repr() for floats, which round-trips exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ProbabilityMeasure":
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        if self.kind is Kind.ATOMIC:
            return f"ProbabilityMeasure.atomic(n={self.atoms.size}, support={self.support()})"
        return f"ProbabilityMeasure({self.kind.value}, {dict(self.params)})"


Transformable = Union[ProbabilityMeasure, Callable[[complex], complex]]


def _check_upper(z: complex) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise DomainError(f"expected Im z > 0, got z = {z!r}")
    return z


def cauchy_transform(m: ProbabilityMeasure, z: complex) -> complex:
    """``M(z) = \\int 2 m(du)/(z-u)`` for ``z`` in the upper half-plane."""
    return m.transform(_check_upper(z))


def cauchy_transform_real(m: ProbabilityMeasure, x: float) -> float:
    """Real-analytic continuation of ``M`` to a point off the support."""
    x = float(x)
    lo, hi = m.support()
    if lo <= x <= hi:
        raise DomainError(f"x = {x!r} lies inside the support hull [{lo}, {hi}]")
    return m.transform(complex(x, 0.0)).real


def cauchy_transform_deriv(m: ProbabilityMeasure, z: complex) -> complex:
    """``M'(z) = -\\int 2 m(du)/(z-u)^2``.

    Accepts ``Im z > 0``, or a real ``z`` outside the convex hull of the
    support, where the value is real and strictly negative.
    """
    z = complex(z)
    if z.imag < 0:
        raise DomainError(f"expected Im z >= 0, got z = {z!r}")
    if z.imag == 0:
        lo, hi = m.support()
        if lo <= z.real <= hi:
            raise DomainError(f"x = {z.real!r} lies inside the support hull [{lo}, {hi}]")
        return complex(m.transform_deriv(complex(z.real, 0.0)).real, 0.0)
    return m.transform_deriv(z)


def _semicircle_quantiles(m: ProbabilityMeasure, levels: np.ndarray) -> np.ndarray:
    c, r = m.params["center"], m.params["radius"]
    out = np.empty_like(levels)
    for i, p in enumerate(levels):
        out[i] = brentq(lambda x: float(m.cdf(x)) - p, c - r, c + r, xtol=1e-15, rtol=1e-15)
    return out


def _spread_ties(x: np.ndarray, n: int) -> np.ndarray:
    """Replace runs of equal values by equally spaced points around them."""
    x = x.copy()
    distinct = np.unique(x)
    for u in distinct:
        idx = np.nonzero(x == u)[0]
        m = idx.size
        if m == 1:
            continue
        half = 1.0 / n**2
        others = distinct[distinct != u]
        if others.size:
            half = min(half, 0.25 * float(np.min(np.abs(others - u))))
        x[idx] = u + np.linspace(-half, half, m)
    return x


def discretize(target: ProbabilityMeasure, n: int) -> ProbabilityMeasure:
    """Equal-weight quantile discretisation with ``n`` distinct atoms.

    Atoms sit at the target quantiles of levels ``(k - 1/2)/n``.  Atoms of
    the target are split into clusters of half-width at most ``1/n**2`` so
    that all returned atoms are distinct; a point mass becomes ``n``
    equally spaced atoms on ``[c - 1/n^2, c + 1/n^2]``.
    """
    n = int(n)
    if n <= 0:
        raise DomainError("n must be a positive integer")
    levels = (np.arange(1, n + 1) - 0.5) / n
    kind = target.kind
    if kind is Kind.POINT_MASS:
        c = target.params["x"]
        x = np.array([c]) if n == 1 else c + np.linspace(-1.0 / n**2, 1.0 / n**2, n)
    elif kind is Kind.UNIFORM:
        a, b = target.params["a"], target.params["b"]
        x = a + (b - a) * levels
    elif kind is Kind.SEMICIRCLE:
        x = _semicircle_quantiles(target, levels)
    else:
        cum = np.cumsum(target.weights)
        idx = np.searchsorted(cum, levels - 1e-12, side="left")
        x = _spread_ties(target.atoms[np.minimum(idx, target.atoms.size - 1)], n)
    return ProbabilityMeasure.atomic(x, np.full(n, 1.0 / n))


def _evaluator(m: Transformable) -> Callable[[complex], complex]:
    if isinstance(m, ProbabilityMeasure):
        return m.transform
    return m


def moments_from_transform(
    evalM: Transformable,
    k_max: int,
    R: float | None = None,
    *,
    extra_terms: int = 48,
    residual_tol: float = 1e-7,
) -> list[float]:
    """Recover moments ``m_0..m_k_max`` from values of ``M`` on a circle.

    Fits ``M(z) = sum_k 2 m_k / z^(k+1)`` by least squares on points of
    the upper half of ``|z| = R``.  The moments are real, so the fit is
    done in real unknowns; the basis is then orthogonal on the half circle.
    ``extra_terms`` additional Laurent terms absorb the tail.

    Raises
    ------
    NumericalError
        If the relative fit residual exceeds ``residual_tol``; this means
        ``R`` is not safely outside the support.
    """
    if k_max < 0:
        raise DomainError("k_max must be non-negative")
    f = _evaluator(evalM)
    if R is None:
        if not isinstance(evalM, ProbabilityMeasure):
            raise DomainError("R is required when evalM is a function")
        R = 4.0 * (evalM.support_radius() + 1.0)
    n_terms = k_max + 1 + extra_terms
    n_pts = 4 * n_terms
    theta = np.pi * (np.arange(n_pts) + 0.5) / n_pts
    zs = R * np.exp(1j * theta)
    vals = np.array([f(complex(z)) for z in zs])
    orders = np.arange(1, n_terms + 1)
    A = np.vstack([np.cos(np.outer(theta, orders)), -np.sin(np.outer(theta, orders))])
    rhs = np.concatenate([vals.real, vals.imag])
    coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = np.linalg.norm(A @ coef - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if resid > residual_tol:
        raise NumericalError(
            "Laurent fit residual too large; increase R", residual=float(resid), R=float(R)
        )
    return [float(coef[k] * R ** (k + 1) / 2.0) for k in range(k_max + 1)]


def transform_distance(a: Transformable, b: Transformable, points: Iterable[complex]) -> float:
    """``max |M_a(z) - M_b(z)|`` over ``points`` (all in the upper half-plane)."""
    pts = [_check_upper(z) for z in points]
    if not pts:
        raise DomainError("empty point list")
    fa, fb = _evaluator(a), _evaluator(b)
    return max(abs(fa(z) - fb(z)) for z in pts)


def cdf_distance(a: ProbabilityMeasure, b: ProbabilityMeasure, grid: int = 4001) -> float:
    """Kolmogorov (sup) distance between two distribution functions.

    Exact when at least one side is atomic-free between jumps of the
    other; continuous pairs are compared on a ``grid``-point mesh.
    """
    lo = min(a.support()[0], b.support()[0])
    hi = max(a.support()[1], b.support()[1])
    pts = [np.linspace(lo, hi, grid)]
    for m in (a, b):
        if m.kind is Kind.ATOMIC:
            pts.append(m.atoms)
        elif m.kind is Kind.POINT_MASS:
            pts.append(np.array([m.params["x"]]))
    x = np.unique(np.concatenate(pts))
    d_right = np.abs(a.cdf(x) - b.cdf(x))
    d_left = np.abs(a.cdf_left(x) - b.cdf_left(x))
    return float(max(d_right.max(), d_left.max()))


def _breakpoints(m: ProbabilityMeasure) -> np.ndarray:
    if m.kind is Kind.ATOMIC:
        return np.asarray(m.atoms)
    if m.kind is Kind.POINT_MASS:
        return np.array([m.params["x"]])
    return np.array(m.support())


def levy_distance(a: ProbabilityMeasure, b: ProbabilityMeasure, grid: int = 2001,
                  tol: float = 1e-12) -> float:
    """Levy distance between two laws.

    The smallest ``e`` with ``F_a(x - e) - e <= F_b(x) <= F_a(x + e) + e``
    for all ``x``.  Unlike the sup distance it metrises weak convergence,
    so it is small when a point mass is replaced by a tight cluster of
    atoms.  Found by bisection on ``e``; the inequalities are checked at
    every jump (and its shifts by ``e``) plus a ``grid``-point mesh.
    """
    lo = min(a.support()[0], b.support()[0]) - 1.0
    hi = max(a.support()[1], b.support()[1]) + 1.0
    mesh = np.linspace(lo, hi, grid)
    ja, jb = _breakpoints(a), _breakpoints(b)

    def ok(e):
        x = np.unique(np.concatenate([mesh, ja - e, ja + e, jb, jb - e, jb + e]))
        if np.any(a.cdf_left(x - e) - e > b.cdf_left(x) + 1e-15):
            return False
        return not np.any(b.cdf(x) > a.cdf(x + e) + e + 1e-15)

    left, right = 0.0, 1.0
    if ok(0.0):
        return 0.0
    while right - left > tol:
        mid = 0.5 * (left + right)
        if ok(mid):
            right = mid
        else:
            left = mid
    return right


def sample_cdf_distance(samples: Sequence[float], target: ProbabilityMeasure) -> float:
    """Sup distance between the empirical CDF of ``samples`` and ``target``.

    Samples may contain ties (pooled ensembles); ``target`` should have a
    continuous distribution function.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise DomainError("no samples")
    F = target.cdf(x)
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.max(upper - F), np.max(F - lower)))
