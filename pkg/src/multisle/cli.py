"""Command-line front end.

::

    multisle simulate --n 2 --kappa 0 --x0 -1,1 --t-max 1
    multisle hull --base delta0 --t 1 --columns 64
    multisle oracle --z 4i --t 1
    multisle converge --kind transform --ns 10,40,160 --seeds 50
    multisle trace --n 3 --kappa 2 --base uniform:-1,1 --t-max 0.5

Settings come from an optional ``--config`` file and are overridden by
flags.  The file is TOML with sections ``[measure]``, ``[sde]`` and
``[run]``, or a JSON sidecar written by a previous run (its ``config``
entry holds the same sections), so ``--config out/hull.json`` repeats a
run exactly.

Exit codes: 0 on success, 1 on invalid input (one-line diagnostic on
stderr), 2 on numerical failure (the error payload as JSON on stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import burgers, convergence, delta0, loewner
from .errors import DomainError, NumericalError
from .export import dumps, write_hull, write_json
from .measure import Kind, ProbabilityMeasure, discretize
from .sde import SdeConfig, simulate

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["run", "main", "parse_complex", "parse_measure"]

COMMANDS = ("simulate", "hull", "oracle", "converge", "trace")
CONVERGE_KINDS = ("transform", "map", "moment", "semicircle", "hull-scaling", "footprint")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    """Bad command line or configuration; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)

    def exit(self, status=0, message=None):
        if message:
            sys.stderr.write(message)
        raise SystemExit(status)


# -- value parsers -------------------------------------------------------

_BARE_J = re.compile(r"(^|[+-])j")


def parse_complex(text: str) -> complex:
    """Parse ``4i``, ``1+2i``, ``-i`` or ``2.5`` (``j`` also accepted)."""
    s = str(text).strip().replace(" ", "").replace("i", "j")
    s = _BARE_J.sub(r"\g<1>1j", s)
    try:
        return complex(s)
    except ValueError:
        raise UsageError(f"not a complex number: {text!r}") from None


def _floats(value) -> list[float]:
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
        try:
            return [float(p) for p in parts]
        except ValueError:
            raise UsageError(f"expected comma-separated numbers, got {value!r}") from None
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in value]


def _ints(value) -> list[int]:
    out = _floats(value)
    if any(v != int(v) for v in out):
        raise UsageError(f"expected integers, got {value!r}")
    return [int(v) for v in out]


def _complexes(value) -> list[complex]:
    if isinstance(value, str):
        return [parse_complex(p) for p in value.split(",") if p.strip()]
    out = []
    for v in value:
        if isinstance(v, (list, tuple)) and len(v) == 2:
            out.append(complex(float(v[0]), float(v[1])))
        elif isinstance(v, str):
            out.append(parse_complex(v))
        else:
            out.append(complex(v))
    return out


def _pairs(value) -> list[list[float]]:
    """``"1:2,0.25:2"`` or ``[[1, 2], [0.25, 2]]``."""
    if isinstance(value, str):
        out = []
        for item in value.split(","):
            bits = item.split(":")
            if len(bits) != 2:
                raise UsageError(f"expected t:c pairs, got {value!r}")
            out.append([float(bits[0]), float(bits[1])])
        return out
    return [[float(a), float(b)] for a, b in value]


_MEASURE_ALIASES = {
    "delta0": Kind.POINT_MASS, "point": Kind.POINT_MASS, "pointmass": Kind.POINT_MASS,
    "atomic": Kind.ATOMIC, "uniform": Kind.UNIFORM, "uniforminterval": Kind.UNIFORM,
    "semicircle": Kind.SEMICIRCLE,
}


def parse_measure(text: str) -> dict:
    """Turn a ``--base`` value into a ``[measure]`` section.

    Accepted forms: ``delta0``, ``point:x``, ``atomic:x1,x2,...``,
    ``uniform:a,b``, ``semicircle:R`` and ``semicircle:R,center``.
    """
    name, _, rest = str(text).partition(":")
    kind = _MEASURE_ALIASES.get(name.strip().lower())
    if kind is None:
        raise UsageError(f"unknown base measure {text!r}")
    vals = _floats(rest) if rest else []
    if kind is Kind.POINT_MASS:
        if len(vals) > 1:
            raise UsageError("a point mass takes one location")
        return {"kind": kind.value, "x": vals[0] if vals else 0.0}
    if kind is Kind.ATOMIC:
        if not vals:
            raise UsageError("atomic base needs atoms, e.g. atomic:-1,1")
        return {"kind": kind.value, "atoms": vals}
    if kind is Kind.UNIFORM:
        if len(vals) != 2:
            raise UsageError("uniform base needs two endpoints, e.g. uniform:-1,1")
        return {"kind": kind.value, "a": vals[0], "b": vals[1]}
    if len(vals) not in (1, 2):
        raise UsageError("semicircle base needs a radius, e.g. semicircle:2")
    return {"kind": kind.value, "radius": vals[0], "center": vals[1] if len(vals) == 2 else 0.0}


def _build_measure(section: dict) -> ProbabilityMeasure:
    sec = dict(section)
    name = str(sec.pop("kind", "delta0"))
    kind = _MEASURE_ALIASES.get(name.lower())
    if kind is None:
        try:
            kind = Kind(name)
        except ValueError:
            raise UsageError(f"unknown measure kind {name!r}") from None
    allowed = {
        Kind.POINT_MASS: {"x"}, Kind.ATOMIC: {"atoms", "weights"},
        Kind.UNIFORM: {"a", "b"}, Kind.SEMICIRCLE: {"radius", "center"},
    }[kind]
    extra = set(sec) - allowed
    if extra:
        raise UsageError(f"unknown [measure] keys for {kind.value}: {sorted(extra)}")
    try:
        if kind is Kind.POINT_MASS:
            return ProbabilityMeasure.point_mass(float(sec.get("x", 0.0)))
        if kind is Kind.ATOMIC:
            w = sec.get("weights")
            return ProbabilityMeasure.atomic(_floats(sec["atoms"]), _floats(w) if w else None)
        if kind is Kind.UNIFORM:
            return ProbabilityMeasure.uniform(float(sec["a"]), float(sec["b"]))
        return ProbabilityMeasure.semicircle(float(sec["radius"]), float(sec.get("center", 0.0)))
    except KeyError as exc:
        raise UsageError(f"[measure] {kind.value} is missing {exc.args[0]!r}") from None


# -- flags ---------------------------------------------------------------

# (flag, section, key, parser, help); parsers turn strings into plain
# JSON-able values so the effective config can be echoed verbatim.
_Flag = tuple[str, str, str, Callable[[Any], Any], str]

_SDE_FLAGS: list[_Flag] = [
    ("--n", "sde", "n", int, "number of driving functions"),
    ("--kappa", "sde", "kappa", float, "SLE parameter in [0, 4]"),
    ("--x0", "sde", "x0", _floats, "comma-separated starting points"),
    ("--lambdas", "sde", "lambdas", _floats, "comma-separated weights (default 1/n)"),
    ("--theta", "sde", "theta", float, "restoring force"),
    ("--t-max", "sde", "t_max", float, "final time"),
    ("--seed", "sde", "seed", int, "random seed"),
    ("--dt-base", "sde", "dt_base", float, "largest time step"),
    ("--record-dt", "sde", "record_dt", float, "keep states only every record-dt"),
]
_BASE_FLAG: _Flag = ("--base", "measure", None, parse_measure,
                     "delta0, point:x, atomic:x1,..., uniform:a,b or semicircle:R")

_COMMAND_FLAGS: dict[str, list[_Flag]] = {
    "simulate": _SDE_FLAGS + [_BASE_FLAG],
    "trace": _SDE_FLAGS + [
        _BASE_FLAG,
        ("--times", "run", "times", _floats, "times at which to trace the tips"),
        ("--n-times", "run", "n_times", int, "number of equally spaced trace times"),
        ("--eps-lift", "run", "eps_lift", float, "height of the reverse-flow start"),
    ],
    "hull": [
        _BASE_FLAG,
        ("--t", "run", "t", float, "time"),
        ("--columns", "run", "columns", int, "number of boundary columns"),
        ("--method", "run", "method", str, "lifetime route: g or h"),
        ("--eps-hit", "run", "eps_hit", float, "distance counted as hitting the axis"),
    ],
    "oracle": [
        ("--z", "run", "z", _complexes, "comma-separated points, e.g. 4i,1+2i"),
        ("--t", "run", "t", float, "time"),
    ],
    "converge": [
        ("--kind", "run", "kind", str, "one of " + ", ".join(CONVERGE_KINDS)),
        _BASE_FLAG,
        ("--ns", "run", "ns", _ints, "increasing particle numbers"),
        ("--t", "run", "t", float, "time"),
        ("--points", "run", "points", _complexes, "evaluation points (Im >= 1)"),
        ("--seeds", "run", "seeds", int, "number of seeds"),
        ("--t-long", "run", "t_long", float, "horizon of the semicircle run"),
        ("--pairs", "run", "pairs", _pairs, "hull scaling pairs t:c,..."),
        ("--columns", "run", "columns", int, "number of hull columns"),
        ("--tol", "run", "tol", float, "footprint tolerance"),
    ] + [f for f in _SDE_FLAGS if f[2] in ("n", "kappa", "x0", "theta", "seed", "dt_base",
                                          "record_dt", "t_max")],
}


def _dest(flag: str) -> str:
    return "opt_" + flag.lstrip("-").replace("-", "_")


def _make_parser() -> _Parser:
    parser = _Parser(prog="multisle", description="Multiple SLE and its Burgers limit.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML config or JSON sidecar of an earlier run")
        p.add_argument("--out", help="output directory (default: current directory)")
        for flag, _, _, _, help_text in _COMMAND_FLAGS[name]:
            p.add_argument(flag, dest=_dest(flag), default=None, metavar="V", help=help_text)
    return parser


_NEGATIVE_VALUE = re.compile(r"^-[\d.i]")


def _glue_negative_values(argv: Sequence[str]) -> list[str]:
    # argparse reads "--x0 -1,1" as two flags; glue such values on with "=".
    out: list[str] = []
    it = iter(range(len(argv)))
    for i in it:
        a = argv[i]
        if (a.startswith("--") and "=" not in a and i + 1 < len(argv)
                and _NEGATIVE_VALUE.match(argv[i + 1])):
            out.append(f"{a}={argv[i + 1]}")
            next(it, None)
        else:
            out.append(a)
    return out


# -- configuration -------------------------------------------------------

def load_config(path) -> dict:
    """Read a TOML config or a JSON sidecar into ``{measure, sde, run}``."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    try:
        if path.suffix == ".json":
            data = json.loads(raw)
            data = data.get("config", data) if isinstance(data, dict) else data
        else:
            data = tomllib.loads(raw.decode())
    except (ValueError, UnicodeDecodeError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        raise UsageError(f"cannot parse config {str(path)!r}: {msg}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {str(path)!r} is not a table")
    extra = set(data) - {"measure", "sde", "run", "command"}
    if extra:
        raise UsageError(f"unknown config sections: {sorted(extra)}")
    out = {}
    for sec in ("measure", "sde", "run"):
        val = data.get(sec) or {}
        if not isinstance(val, dict):
            raise UsageError(f"[{sec}] must be a table")
        out[sec] = dict(val)
    return out


def effective_config(command: str, args: argparse.Namespace) -> dict:
    """Config file values overridden by flags."""
    cfg = load_config(args.config) if args.config else {"measure": {}, "sde": {}, "run": {}}
    for flag, section, key, conv, _ in _COMMAND_FLAGS[command]:
        raw = getattr(args, _dest(flag))
        if raw is None:
            continue
        try:
            val = conv(raw)
        except ValueError:
            raise UsageError(f"invalid value for {flag}: {raw!r}") from None
        if key is None:
            cfg[section] = val
        else:
            cfg[section][key] = val
    if args.out is not None:
        cfg["run"]["out_dir"] = args.out
    cfg["command"] = command
    return cfg


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["run"].get("out_dir", "."))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {str(out)!r}: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory {str(out)!r} is not writable")
    return out


def _run_keys(cfg: dict, allowed: set[str]) -> dict:
    extra = set(cfg["run"]) - allowed - {"out_dir"}
    if extra:
        raise UsageError(f"unknown [run] keys for {cfg['command']}: {sorted(extra)}")
    return cfg["run"]


def _finite(name: str, x: float, positive: bool = False, nonneg: bool = False) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise UsageError(f"{name} must be finite")
    if positive and not x > 0:
        raise UsageError(f"{name} must be > 0")
    if nonneg and not x >= 0:
        raise UsageError(f"{name} must be >= 0")
    return x


def _sde_config(cfg: dict, default_n: int | None = None) -> SdeConfig:
    """Build the SDE settings; starting points come from ``x0`` or from
    discretising ``[measure]`` into ``n`` atoms."""
    sde = dict(cfg["sde"])
    n = sde.pop("n", default_n)
    if "x0" not in sde:
        if n is None:
            raise UsageError("give either x0 or n (with an optional base measure)")
        if int(n) < 1:
            raise UsageError("n must be >= 1")
        base = _build_measure(cfg["measure"])
        sde["x0"] = [float(x) for x in discretize(base, int(n)).atoms]
    if "kappa" not in sde:
        raise UsageError("kappa is required")
    for key in ("x0", "lambdas"):
        if sde.get(key) is not None:
            sde[key] = tuple(_floats(sde[key]))
    if n is not None:
        sde["n"] = int(n)
    return SdeConfig.from_dict(sde)


# -- commands ------------------------------------------------------------

def _cmd_simulate(cfg: dict) -> dict:
    _run_keys(cfg, set())
    sde = _sde_config(cfg)
    out = _out_dir(cfg)
    cfg["sde"] = sde.to_dict()
    paths = simulate(sde)
    csv_path = out / "paths.csv"
    paths.write_csv(csv_path)
    side = write_json(out / "paths.json", {"config": cfg, "steps": int(paths.times.size - 1)})
    return {"csv": str(csv_path), "json": str(side),
            "final": [float(x) for x in paths.values[-1]]}


def _cmd_trace(cfg: dict) -> dict:
    run = _run_keys(cfg, {"times", "n_times", "eps_lift"})
    sde = _sde_config(cfg)
    if sde.record_dt is not None:
        raise UsageError("trace needs every SDE step; drop record_dt")
    if "times" in run:
        times = _floats(run["times"])
    else:
        k = int(run.get("n_times", 10))
        if k < 1:
            raise UsageError("n_times must be >= 1")
        times = list(np.linspace(sde.t_max / k, sde.t_max, k))
    if any(not 0 < t <= sde.t_max for t in times):
        raise UsageError(f"trace times must lie in (0, {sde.t_max!r}]")
    eps = _finite("eps_lift", run.get("eps_lift", loewner.EPS_LIFT), positive=True)
    out = _out_dir(cfg)
    cfg["sde"] = sde.to_dict()
    paths = simulate(sde)
    rows = loewner.tip_paths(paths, times, eps)
    csv_path = out / "tips.csv"
    loewner.write_tips_csv(csv_path, rows)
    side = write_json(out / "tips.json", {"config": cfg})
    return {"csv": str(csv_path), "json": str(side)}


def _cmd_hull(cfg: dict) -> dict:
    run = _run_keys(cfg, {"t", "columns", "method", "eps_hit"})
    base = _build_measure(cfg["measure"])
    t = _finite("t", run.get("t", 1.0), positive=True)
    cols = int(run.get("columns", 64))
    if cols < 2:
        raise UsageError("columns must be >= 2")
    method = str(run.get("method", "g"))
    if method not in ("g", "h"):
        raise UsageError("method must be g or h")
    eps = _finite("eps_hit", run.get("eps_hit", burgers.EPS_HIT), positive=True)
    out = _out_dir(cfg)
    cfg["measure"] = _measure_section(base)
    cfg["run"].update(t=t, columns=cols, method=method, eps_hit=eps)
    hull = burgers.hull_boundary(base, t, cols, eps_hit=eps, method=method)
    support = burgers.support_endpoints(base, t)
    paths = write_hull(hull, out, "hull", config=cfg, support=support)
    return {**{k: str(v) for k, v in paths.items()}, "footprint": list(hull.footprint),
            "flags": list(hull.flags)}


def _measure_section(m: ProbabilityMeasure) -> dict:
    d = m.to_dict()
    sec = {"kind": d["kind"], **d["params"]}
    if m.kind is Kind.ATOMIC:
        sec.update(atoms=d["atoms"], weights=d["weights"])
    return sec


def _cmd_oracle(cfg: dict) -> dict:
    run = _run_keys(cfg, {"z", "t"})
    if "z" not in run:
        raise UsageError("oracle needs --z")
    zs = _complexes(run["z"])
    t = _finite("t", run.get("t", 1.0), nonneg=True)
    if any(not z.imag > 0 for z in zs):
        raise UsageError("oracle points need Im z > 0")
    out = _out_dir(cfg)
    cfg["run"].update(z=[[z.real, z.imag] for z in zs], t=t)
    rows = []
    for z in zs:
        table = delta0.oracle_table(z, t)
        row = {"z": z, "t": t}
        row.update({k: v.value for k, v in table.items()})
        row["branches"] = {k: v.branch_note for k, v in table.items()}
        rows.append(row)
    result: dict[str, Any] = {"config": cfg, "table": rows}
    if t > 0:
        support, footprint = delta0.oracle_intervals(t)
        result.update(support=list(support), footprint=list(footprint))
    path = write_json(out / "oracle.json", result)
    summary = rows[0] if len(rows) == 1 else {"table": rows}
    return {"json": str(path), **{k: v for k, v in summary.items() if k != "branches"}}


_TRANSFORM_POINTS = ["2i", "1+2i"]
_MAP_POINTS = ["2i", "3i", "1+2i", "-1+2i"]


def _cmd_converge(cfg: dict) -> dict:
    run = cfg["run"]
    kind = run.get("kind")
    if kind not in CONVERGE_KINDS:
        raise UsageError(f"--kind must be one of {', '.join(CONVERGE_KINDS)}")
    if kind in ("transform", "map"):
        _run_keys(cfg, {"kind", "ns", "t", "points", "seeds"})
        extra = set(cfg["sde"]) - {"kappa", "seed", "dt_base"}
        if extra:
            raise UsageError(f"{kind} convergence does not take {sorted(extra)}")
        base = _build_measure(cfg["measure"])
        ns = _ints(run.get("ns", [10, 40, 160]))
        t = _finite("t", run.get("t", 1.0), nonneg=True)
        default = _TRANSFORM_POINTS if kind == "transform" else _MAP_POINTS
        pts = _complexes(run.get("points", default))
        seeds = int(run.get("seeds", 50))
        sde = cfg["sde"]
        kw = dict(kappa=float(sde.get("kappa", 2.0)), seed=int(sde.get("seed", 0)),
                  dt_base=float(sde.get("dt_base", 1e-3)))
        out = _out_dir(cfg)
        fn = (convergence.run_transform_convergence if kind == "transform"
              else convergence.run_map_convergence)
        report = fn(base, ns, t, pts, seeds, **kw)
    elif kind == "moment":
        _run_keys(cfg, {"kind", "seeds"})
        sde = _sde_config(cfg)
        seeds = int(run.get("seeds", 2000))
        out = _out_dir(cfg)
        kw = {} if sde.record_dt is None else {"record_dt": sde.record_dt}
        report = convergence.run_moment_law(sde, seeds, **kw)
    elif kind == "semicircle":
        _run_keys(cfg, {"kind", "seeds", "t_long"})
        if "theta" not in cfg["sde"]:
            raise UsageError("semicircle needs theta > 0")
        sde = _sde_config(cfg)
        seeds = int(run.get("seeds", 50))
        t_long = run.get("t_long")
        out = _out_dir(cfg)
        report = convergence.run_semicircle_theta(
            sde, None if t_long is None else float(t_long), seeds)
    elif kind == "hull-scaling":
        _run_keys(cfg, {"kind", "pairs", "columns"})
        pairs = _pairs(run.get("pairs", [[1.0, 2.0]]))
        cols = int(run.get("columns", 64))
        if cols < 2:
            raise UsageError("columns must be >= 2")
        out = _out_dir(cfg)
        report = convergence.run_hull_scaling(pairs, n_columns=cols, out_dir=out)
    else:
        _run_keys(cfg, {"kind", "t", "tol"})
        t = _finite("t", run.get("t", 1.0), positive=True)
        tol = _finite("tol", run.get("tol", 1e-3), positive=True)
        out = _out_dir(cfg)
        report = convergence.run_footprint_check(t, tol=tol)
    path = report.write(out)
    return {"report": str(path), "kind": report.kind.value, "passed": report.passed,
            "metrics": report.metrics}


_DISPATCH = {
    "simulate": _cmd_simulate,
    "trace": _cmd_trace,
    "hull": _cmd_hull,
    "oracle": _cmd_oracle,
    "converge": _cmd_converge,
}


def _one_line(msg: str) -> str:
    return " ".join(str(msg).split())


def run(argv: Sequence[str] | None = None) -> int:
    """Run the command line ``argv`` and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _make_parser()
    try:
        args = parser.parse_args(_glue_negative_values(argv))
        if args.command is None:
            raise UsageError(f"a command is required: {', '.join(COMMANDS)}")
        cfg = effective_config(args.command, args)
        summary = _DISPATCH[args.command](cfg)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (UsageError, DomainError, TypeError, ValueError) as exc:
        sys.stderr.write(f"multisle: error: {_one_line(exc)}\n")
        return EXIT_INVALID
    except NumericalError as exc:
        sys.stderr.write(json.dumps(json.loads(dumps(exc.payload))) + "\n")
        return EXIT_NUMERICAL
    sys.stdout.write(dumps(summary) + "\n")
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
