"""Multiple chordal SLE driving functions and their Burgers limit.

Modules
-------
measure
    Probability measures on the line, Cauchy transforms, discretisation.
sde
    The interacting driving-function SDE (``simulate``).
loewner
    Multi-slit Loewner flow: maps, lifetimes, slit tips, capacity.
burgers
    The deterministic large-``N`` limit by the method of characteristics.
delta0
    Closed forms for the flow started from a point mass.
convergence
    Experiments comparing finite ensembles with the limit.
cli
    The ``multisle`` command.

The hot loops (SDE stepping and Loewner integration) run in a compiled
extension when it is available and in numpy otherwise; ``BACKEND`` names
the one in use.
"""

from ._backend import NAME as BACKEND
from .burgers import (
    Hull,
    TransportedState,
    hull_boundary,
    hull_lifetime,
    inverse_char_ode,
    limit_map,
    real_footprint,
    solve_shift,
    support_endpoints,
    transform_at,
)
from .convergence import (
    ExperimentReport,
    ReportKind,
    run_footprint_check,
    run_hull_scaling,
    run_map_convergence,
    run_moment_law,
    run_semicircle_theta,
    run_transform_convergence,
)
from .delta0 import lambert_w0, oracle_intervals, oracle_maps, oracle_transform
from .errors import (
    BracketError,
    CollisionError,
    ConvergenceError,
    DomainError,
    MultiSLEError,
    NumericalError,
    SwallowedError,
)
from .loewner import flow_map, hcap_coefficient, inverse_flow, lifetime, trace_tips
from .measure import ProbabilityMeasure, cauchy_transform, discretize, transform_distance
from .sde import DrivingPaths, SdeConfig, empirical_measure, simulate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BracketError",
    "CollisionError",
    "ConvergenceError",
    "DomainError",
    "DrivingPaths",
    "ExperimentReport",
    "Hull",
    "MultiSLEError",
    "NumericalError",
    "ProbabilityMeasure",
    "ReportKind",
    "SdeConfig",
    "SwallowedError",
    "TransportedState",
    "cauchy_transform",
    "discretize",
    "empirical_measure",
    "flow_map",
    "hcap_coefficient",
    "hull_boundary",
    "hull_lifetime",
    "inverse_char_ode",
    "inverse_flow",
    "lambert_w0",
    "lifetime",
    "limit_map",
    "oracle_intervals",
    "oracle_maps",
    "oracle_transform",
    "real_footprint",
    "run_footprint_check",
    "run_hull_scaling",
    "run_map_convergence",
    "run_moment_law",
    "run_semicircle_theta",
    "run_transform_convergence",
    "simulate",
    "solve_shift",
    "support_endpoints",
    "trace_tips",
    "transform_at",
    "transform_distance",
]
