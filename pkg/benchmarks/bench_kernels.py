"""Time the domain-evaluation kernel on both backends.

    python3 benchmarks/bench_kernels.py [--scenarios 100] [--window 193] [--repeat 3]

The default shape is one full-scale preference profile:
100 scenarios, a 193-period window, 10 volumes and 191 return delays.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from energyloans import kernels
from energyloans.battery import BatterySpec


def run(backend, base, q, taus, spec, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = kernels.evaluate_domain(base, q, taus, spec, 0.5 * (spec.soc_min + spec.soc_max), 0.25,
                                      backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenarios", type=int, default=100)
    ap.add_argument("--window", type=int, default=193)
    ap.add_argument("--volumes", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    base = rng.normal(0.0, 0.3, (args.scenarios, args.window))
    q = np.linspace(-0.5, 0.5, args.volumes)
    taus = np.arange(2, args.window)
    spec = BatterySpec.with_daily_degradation(0.004, 96)
    evals = args.scenarios * len(q) * len(taus)
    print(f"shape: |S|={args.scenarios} n={args.window} |Q|={len(q)} |T|={len(taus)} ({evals} rollouts)")

    results = {}
    for backend in kernels.available_backends():
        secs, out = run(backend, base, q, taus, spec, args.repeat)
        results[backend] = (secs, out)
        print(f"{backend:>7}: {secs:8.3f} s  ({evals / secs / 1e3:8.1f} k rollouts/s)")
    if len(results) == 2:
        (tc, oc), (tp, op) = results["cython"], results["python"]
        diff = max(float(np.max(np.abs(oc[0] - op[0]))), float(np.max(np.abs(oc[1] - op[1]))))
        print(f"speedup: {tp / tc:.1f}x, max backend difference {diff:.1e}")


if __name__ == "__main__":
    main()
