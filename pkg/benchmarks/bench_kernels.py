#!/usr/bin/env python3
"""Compare the pure-numpy and compiled KDE evaluation kernels.

Two views of the same question:

* ``raw``: a single ``kde_log_density_batch`` call per backend across a
  grid of workload sizes; reports best-of-``--repeats`` wall time and
  throughput in millions of (point, observation) pair evaluations per
  second, plus the worst relative disagreement between the backends.
* ``end-to-end``: the full Monte Carlo normality test run in a subprocess
  with ``RATIO_CONVEXITY_BACKEND`` forced, which measures what the env var
  actually changes for a user.

Usage::

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 200,1000 --points 8192 --dims 1,3
    python3 benchmarks/bench_kernels.py --skip-end-to-end
"""

import argparse
import json
import math
import os
import subprocess
import sys
import time

import numpy as np

from ratio_convexity import kernels


def _ints(text):
    return [int(part) for part in text.split(",") if part.strip()]


def _time_best(fn, repeats):
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_raw(sizes, points, dims, repeats, seed):
    rng = np.random.default_rng(seed)
    names = kernels.available_backends()
    print(f"raw kernel: {points} evaluation points, best of {repeats}")
    header = f"{'dim':>3} {'obs':>6}"
    for name in names:
        header += f" {name + ' (ms)':>14} {name + ' (Mpair/s)':>18}"
    header += f" {'speedup':>8} {'max rel diff':>13}"
    print(header)

    for dim in dims:
        pts = rng.uniform(-4.0, 4.0, size=(points, dim))
        for size in sizes:
            data = rng.standard_normal((size, dim))
            inv = np.full(dim, 2.5)
            log_norm = -(math.log(size) + 0.5 * dim * math.log(2.0 * math.pi))
            row = f"{dim:>3} {size:>6}"
            results = {}
            for name in names:
                backend = kernels.get_backend(name)
                out = backend(pts, data, inv, log_norm)
                seconds = _time_best(
                    lambda b=backend: b(pts, data, inv, log_norm), repeats)
                results[name] = (seconds, out)
                rate = points * size / seconds / 1e6
                row += f" {seconds * 1e3:>14.3f} {rate:>18.1f}"
            if len(names) == 2:
                pure_s, pure_out = results["pure"]
                comp_s, comp_out = results["compiled"]
                scale = np.maximum(np.abs(pure_out), 1.0)
                diff = float(np.max(np.abs(pure_out - comp_out) / scale))
                row += f" {pure_s / comp_s:>7.2f}x {diff:>13.2e}"
            print(row)
    print()


def _worker(size, reps):
    """Time one full normality test in the current (forced) backend."""
    from ratio_convexity.normtest import Sample, monte_carlo_pvalue

    observations = np.random.default_rng(0).standard_normal((size, 1))
    sample = Sample(observations)
    start = time.perf_counter()
    report = monte_carlo_pvalue(sample, reps=reps, seed=0)
    seconds = time.perf_counter() - start
    print(json.dumps({"backend": kernels.backend_name(),
                      "seconds": seconds,
                      "p_value": report.p_value}))


def bench_end_to_end(sizes, reps):
    names = kernels.available_backends()
    print(f"end-to-end: monte_carlo_pvalue, reps={reps}, subprocess per backend")
    print(f"{'obs':>6}" + "".join(f" {name + ' (s)':>14}" for name in names)
          + (f" {'speedup':>8}" if len(names) == 2 else ""))
    for size in sizes:
        row = f"{size:>6}"
        seconds = {}
        p_values = set()
        for name in names:
            env = dict(os.environ, RATIO_CONVEXITY_BACKEND=name)
            argv = [sys.executable, __file__, "--worker",
                    "--sizes", str(size), "--reps", str(reps)]
            out = subprocess.run(argv, env=env, capture_output=True,
                                 text=True, check=True)
            payload = json.loads(out.stdout)
            assert payload["backend"] == name
            seconds[name] = payload["seconds"]
            p_values.add(payload["p_value"])
            row += f" {payload['seconds']:>14.3f}"
        if len(names) == 2:
            row += f" {seconds['pure'] / seconds['compiled']:>7.2f}x"
        if len(p_values) != 1:
            row += "  (p-values disagree!)"
        print(row)
    print()


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=_ints, default=[100, 500, 2000],
                        help="comma-separated observation counts")
    parser.add_argument("--points", type=int, default=4096,
                        help="evaluation points per raw kernel call")
    parser.add_argument("--dims", type=_ints, default=[1, 2],
                        help="comma-separated dimensions for the raw view")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats; best is reported")
    parser.add_argument("--reps", type=int, default=99,
                        help="bootstrap replicates for the end-to-end view")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--skip-end-to-end", action="store_true")
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    if args.worker:
        _worker(args.sizes[0], args.reps)
        return 0

    print(f"backends available: {', '.join(kernels.available_backends())} "
          f"(active: {kernels.backend_name()})")
    if len(kernels.available_backends()) < 2:
        print("compiled extension not built; timing the pure backend only\n")
    else:
        print()
    bench_raw(args.sizes, args.points, args.dims, args.repeats, args.seed)
    if not args.skip_end_to_end:
        bench_end_to_end(args.sizes, args.reps)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
