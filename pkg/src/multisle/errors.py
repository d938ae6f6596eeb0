"""Exception types shared by all modules.

Two families matter to callers (and to the CLI exit codes):

* ``DomainError`` -- an input is outside the domain of an operation
  (``Im z <= 0``, a point inside a support, malformed measure, ...).
  It subclasses ``ValueError``.
* ``NumericalError`` -- a numerical procedure failed to produce a result
  (particle collision, root bracket failure, Newton non-convergence,
  a point swallowed by the hull before the requested time).
  Each instance carries a JSON-serialisable ``payload``.
"""

from __future__ import annotations

from typing import Any


class MultiSLEError(Exception):
    """Base class for all package errors."""


class DomainError(MultiSLEError, ValueError):
    """Input outside the domain of the requested operation."""


class NumericalError(MultiSLEError, RuntimeError):
    """A numerical procedure failed; ``payload`` describes where."""

    kind = "numerical"

    def __init__(self, message: str, **payload: Any):
        super().__init__(message)
        self.payload = {"error": self.kind, "message": message, **payload}


class CollisionError(NumericalError):
    """Two driving functions could not be kept apart."""

    kind = "collision"


class BracketError(NumericalError):
    """A bisection bracket did not enclose a sign change."""

    kind = "bracket"


class ConvergenceError(NumericalError):
    """An iterative solver (Newton, ODE step control) did not converge."""

    kind = "convergence"


class SwallowedError(NumericalError):
    """The requested point joined the hull before the requested time."""

    kind = "swallowed"
