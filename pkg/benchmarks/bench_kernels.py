#!/usr/bin/env python3
"""Benchmark the compiled recursion kernels against the pure-Python
fallbacks, plus one end-to-end MLE fit on each backend.

Usage: python benchmarks/bench_kernels.py [--t-obs 3613] [--repeats 50]
"""

import argparse
import timeit

import numpy as np
import pandas as pd


def best_of(fn, repeats):
    return min(timeit.repeat(fn, number=1, repeat=repeats))


def fmt(seconds):
    if seconds < 1e-3:
        return f"{seconds * 1e6:8.1f} us"
    if seconds < 1.0:
        return f"{seconds * 1e3:8.2f} ms"
    return f"{seconds:8.2f} s "


def bench_kernels(t_obs, repeats):
    from volnet import _core, _core_py

    rng = np.random.default_rng(0)
    eps = rng.standard_normal(t_obs)
    z4 = np.ascontiguousarray(rng.standard_normal((t_obs, 4)))
    qbar = np.ascontiguousarray(np.corrcoef(z4.T))

    cases = [
        ("egarch_sigma2",
         lambda m: m.egarch_sigma2(eps, 0.02, 0.12, -0.06, 0.93, 0.1)),
        ("gjr_sigma2",
         lambda m: m.gjr_sigma2(eps, 0.05, 0.06, 0.09, 0.86, 1.2)),
        ("arx_filter",
         lambda m: m.arx_filter(eps, 0.93, 0.0)),
        ("dcc_filter (n=4)",
         lambda m: m.dcc_filter(z4, 0.05, 0.9, qbar)),
    ]
    rows = []
    for name, call in cases:
        t_compiled = best_of(lambda: call(_core), repeats)
        t_python = best_of(lambda: call(_core_py), max(3, repeats // 10))
        rows.append({"kernel": name, "compiled": fmt(t_compiled),
                     "python": fmt(t_python),
                     "speedup": f"{t_python / t_compiled:6.1f}x"})
    return rows


def bench_fit(t_obs):
    """Full MLE fits per backend and family (separate interpreters so the
    import-time backend choice is honored). The exponential family is the
    one whose recursion cannot be vectorized, so it shows the gap."""
    import os
    import subprocess
    import sys

    script = f"""
import time
import numpy as np
from volnet import garch, simgen, kernels
for family in ("gjr", "egarch"):
    r = simgen.simulate_garch_returns("gjr", simgen.DEFAULT_GARCH_TRUTH,
                                      "student_t", {t_obs}, seed=0)
    t0 = time.perf_counter()
    garch.fit_garch(r, garch.GarchSpec(family, "student_t"))
    print(kernels.BACKEND, family, time.perf_counter() - t0)
"""
    rows = {}
    for env_extra in ({}, {"VOLNET_PURE_PYTHON": "1"}):
        env = dict(os.environ, **env_extra)
        out = subprocess.run([sys.executable, "-c", script], env=env,
                             capture_output=True, text=True, check=True)
        for line in out.stdout.strip().splitlines():
            backend, family, seconds = line.split()
            rows.setdefault(backend, {"backend": backend})[f"{family} fit"] = \
                fmt(float(seconds))
    return list(rows.values())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--t-obs", type=int, default=3613)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    try:
        from volnet import _core  # noqa: F401
    except ImportError:
        raise SystemExit("compiled extension not built; run "
                         "`pip install -e . --no-build-isolation` first")

    print(f"kernel timings at T={args.t_obs} (best of {args.repeats}):")
    print(pd.DataFrame(bench_kernels(args.t_obs, args.repeats)).to_string(index=False))
    print()
    print("end-to-end maximum-likelihood fit:")
    print(pd.DataFrame(bench_fit(args.t_obs)).to_string(index=False))


if __name__ == "__main__":
    main()
