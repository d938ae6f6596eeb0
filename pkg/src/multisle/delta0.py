"""Closed forms for the limit flow started from a point mass at the origin.

For ``mu_0 = delta_0`` the Burgers flow is explicit:

    M_t(z) = 4 / (z + sqrt(z^2 - 16 t))
    h_t(z) = i sqrt(4 t / W(-4 t / z^2))
    g_t(z) = h_t(z) + 4 t / h_t(z)

where ``W`` is the principal branch of the Lambert W function.  The
measure ``mu_t`` is the semicircle law on ``[-4 sqrt(t), 4 sqrt(t)]`` and
the hull meets the real line in ``[-2 sqrt(e t), 2 sqrt(e t)]``.

Two square-root conventions appear.  The transform uses the root with
values in the closed upper half-plane (so ``sqrt(-1) = i``); ``h_t`` uses
the root with values in the right half-plane.  Both are written out by
halving the argument explicitly so the branch is never left to a library
default.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError

__all__ = [
    "BranchedValue",
    "lambert_w0",
    "sqrt_upper",
    "sqrt_right",
    "oracle_transform",
    "oracle_maps",
    "oracle_intervals",
    "oracle_table",
]

_INV_E = math.exp(-1.0)
_W_TOL = 1e-15
_W_MAXITER = 100


@dataclass(frozen=True)
class BranchedValue:
    """A complex value together with the branch convention that produced it."""

    value: complex
    branch_note: str


def sqrt_upper(w: complex) -> complex:
    """Square root with values in the closed upper half-plane.

    The argument of ``w`` is taken in ``[0, 2 pi)`` and halved, so
    ``sqrt_upper(-1) == 1j`` and positive reals map to positive reals.
    """
    w = complex(w)
    r = abs(w)
    if r == 0.0:
        return 0j
    phi = math.atan2(w.imag, w.real)
    if phi < 0.0:
        phi += 2.0 * math.pi
    out = cmath.rect(math.sqrt(r), 0.5 * phi)
    assert out.imag >= 0.0 or abs(out.imag) <= 1e-300
    return out


def sqrt_right(w: complex) -> complex:
    """Square root with values in the right half-plane.

    The argument of ``w`` is taken in ``(-pi, pi]`` and halved.
    """
    w = complex(w)
    r = abs(w)
    if r == 0.0:
        return 0j
    phi = math.atan2(w.imag, w.real)
    out = cmath.rect(math.sqrt(r), 0.5 * phi)
    assert out.real >= 0.0 or abs(out.real) <= 1e-300
    return out


def _branch_point_guess(z: complex) -> complex:
    p = sqrt_right(2.0 * (math.e * z + 1.0))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def _w_guess(z: complex) -> complex:
    # Near the branch point the series in p = sqrt(2(e z + 1)) is far
    # better than either logarithmic guess.
    if abs(z + _INV_E) < 0.6:
        return _branch_point_guess(z)
    if abs(z) <= math.e:
        return cmath.log(1.0 + z)
    lz = cmath.log(z)
    return lz - cmath.log(lz)


def _in_principal_range(w: complex, z: complex) -> bool:
    # The principal branch takes values in {x + iy : |y| < pi,
    # x > -y cot y} (the bound tends to -1 as y -> 0) and maps each open
    # half-plane into itself.
    y = w.imag
    if y * z.imag < 0.0:
        return False
    if abs(y) >= math.pi:
        return False
    if abs(y) < 1e-8:
        return w.real >= -1.0 - 1e-8
    return w.real > -y / math.tan(y) - 1e-12 * (1.0 + abs(w))


def _halley(z: complex, w: complex) -> complex:
    for _ in range(_W_MAXITER):
        ew = cmath.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w = w - step
        if abs(step) <= _W_TOL * (1.0 + abs(w)):
            break
    return w


def lambert_w0(z: complex) -> complex:
    """Principal branch of the Lambert W function.

    Solves ``w exp(w) = z`` by Halley iteration.

    Parameters
    ----------
    z : complex
        Any point off the branch cut ``(-inf, -1/e)``.  The branch point
        ``-1/e`` itself returns ``-1``.

    Returns
    -------
    complex
        ``w`` with ``|w exp(w) - z| <= 1e-13 (1 + |z|)``.

    Raises
    ------
    DomainError
        If ``z`` lies on the cut or is not finite.
    ConvergenceError
        If Halley iteration stalls (not observed off the cut).
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"lambert_w0 needs a finite argument, got {z!r}")
    if z.imag == 0.0 and z.real < -_INV_E:
        raise DomainError(f"{z.real!r} lies on the branch cut (-inf, -1/e)")
    if z == 0:
        return 0j
    if z.imag == 0.0 and z.real == -_INV_E:
        return complex(-1.0, 0.0)
    tol = 1e-13 * (1.0 + abs(z))
    guesses = (_w_guess, _branch_point_guess, lambda u: cmath.log(2.0 + u))
    for guess in guesses:
        w = _halley(z, guess(z))
        resid = abs(w * cmath.exp(w) - z)
        if resid <= tol and _in_principal_range(w, z):
            break
    else:
        raise ConvergenceError(
            "lambert_w0 did not converge", z=[z.real, z.imag], residual=resid
        )
    if z.imag == 0.0 and z.real >= -_INV_E:
        w = complex(w.real, 0.0)
    return w


def _check_upper(z: complex) -> complex:
    z = complex(z)
    if not z.imag > 0.0:
        raise DomainError(f"expected a point of the upper half-plane, got {z!r}")
    return z


def _check_time(t: float) -> float:
    t = float(t)
    if not (t >= 0.0 and math.isfinite(t)):
        raise DomainError(f"time must be finite and >= 0, got {t!r}")
    return t


def oracle_transform(z: complex, t: float) -> complex:
    """Exact ``M_t(z) = 4 / (z + sqrt(z^2 - 16 t))`` for the point-mass start."""
    z = _check_upper(z)
    t = _check_time(t)
    return 4.0 / (z + sqrt_upper(z * z - 16.0 * t))


def oracle_maps(z: complex, t: float) -> tuple[complex, complex]:
    """Exact ``(h_t(z), g_t(z))`` for the point-mass start.

    At ``t = 0`` both maps are the identity.
    """
    z = _check_upper(z)
    t = _check_time(t)
    if t == 0.0:
        return z, z
    w = lambert_w0(-4.0 * t / (z * z))
    h = 1j * sqrt_right(4.0 * t / w)
    return h, h + 4.0 * t / h


def oracle_intervals(t: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Support of ``mu_t`` and the real footprint of the hull ``K_t``.

    Returns
    -------
    support, footprint : tuple of (float, float)
        ``[-4 sqrt(t), 4 sqrt(t)]`` and ``[-2 sqrt(e t), 2 sqrt(e t)]``.
    """
    t = float(t)
    if not (t > 0.0 and math.isfinite(t)):
        raise DomainError(f"t must be finite and > 0, got {t!r}")
    s = 4.0 * math.sqrt(t)
    f = 2.0 * math.sqrt(math.e * t)
    return (-s, s), (-f, f)


def oracle_table(z: complex, t: float) -> dict[str, BranchedValue]:
    """``M``, ``h`` and ``g`` at one point, each tagged with its branch."""
    m = oracle_transform(z, t)
    h, g = oracle_maps(z, t)
    return {
        "M": BranchedValue(m, "sqrt with values in the upper half-plane, sqrt(-1) = i"),
        "h": BranchedValue(h, "principal W; sqrt with values in the right half-plane"),
        "g": BranchedValue(g, "g = h + 4t/h"),
    }
