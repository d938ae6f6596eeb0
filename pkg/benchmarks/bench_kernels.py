"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Both backends run the same inputs; the script also checks that they agree
to rounding, so a speedup is never reported for a wrong answer.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from multisle import _backend
from multisle.loewner import flow_many
from multisle.measure import ProbabilityMeasure, discretize
from multisle.sde import SdeConfig, drift, simulate


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(quick):
    uni = ProbabilityMeasure.uniform(-1.0, 1.0)
    ns = (10, 50) if quick else (10, 50, 200)
    for n in ns:
        x0 = discretize(uni, n).atoms
        v = np.sort(np.random.default_rng(n).normal(size=n))
        cfg = SdeConfig(x0=x0, kappa=2.0, t_max=0.05 if quick else 0.2, seed=1)
        yield f"drift          N={n:<4d}", lambda k, v=v, cfg=cfg: drift(v, cfg, backend=k)
        yield f"simulate       N={n:<4d}", lambda k, cfg=cfg: simulate(cfg, backend=k).values[-1]
    paths = simulate(SdeConfig(x0=discretize(uni, 20).atoms, kappa=2.0, t_max=0.5, seed=3))
    m = 64 if quick else 512
    zs = np.linspace(-2, 2, m) + 1.5j
    yield f"loewner flow   M={m:<4d}", lambda k: flow_many(paths, zs, 0.5, backend=k)[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    args = ap.parse_args(argv)
    kernels = _backend.available()
    names = [k for k in ("cython", "numpy") if k in kernels]
    print(f"{'case':<22}" + "".join(f"{n:>12}" for n in names) + "     speedup  max|diff|")
    for label, fn in cases(args.quick):
        times, outs = [], []
        for name in names:
            t, out = best_of(lambda: fn(kernels[name]), args.repeat)
            times.append(t)
            outs.append(np.asarray(out))
        row = f"{label:<22}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            diff = float(np.max(np.abs(outs[0] - outs[1])))
            row += f"   {times[1] / times[0]:>8.1f}x  {diff:.1e}"
        print(row)


if __name__ == "__main__":
    main()
