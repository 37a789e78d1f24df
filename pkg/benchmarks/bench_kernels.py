#!/usr/bin/env python3
"""Benchmark the hot kernels with the numba backend against the pure-numpy
fallback.

The backend is chosen at import time via TWINFRINGE_NO_NUMBA, so this script
re-launches itself once per backend and prints a comparison table.

Usage:
    python benchmarks/bench_kernels.py [--repeats N]
    python benchmarks/bench_kernels.py --single --json   # one backend, raw JSON
"""

import argparse
import json
import math
import os
import subprocess
import sys
import time

import numpy as np


def _time(fn, repeats):
    fn()  # warm-up (JIT compilation, cache effects)
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_workloads(repeats):
    import twinfringe
    from twinfringe import _kernels
    from twinfringe.analysis import phi_scan_oracle
    from twinfringe.detection import sample_counts
    from twinfringe.fitting import FringeModelParams, fit_fringe, fringe_model
    from twinfringe.polarization import DIAGONAL, PolarizationAngle
    from twinfringe.spdc import TwoPhotonState

    rng = np.random.default_rng(0)
    results = {"backend": "numba" if twinfringe.USING_NUMBA else "numpy"}

    states = []
    for _ in range(50):
        r = rng.uniform(0, 1)
        pa, pb = rng.uniform(0, 2 * math.pi, 2)
        states.append(TwoPhotonState(
            complex(math.sqrt(r) * np.exp(1j * pa)),
            complex(math.sqrt(1 - r) * np.exp(1j * pb)),
            PolarizationAngle(rng.uniform(0, math.pi)),
            PolarizationAngle(rng.uniform(0, math.pi))))

    def oracle_scan():
        for state in states:
            phi_scan_oracle(state, (DIAGONAL, DIAGONAL))

    results["phase_scan_oracle_50_states"] = _time(oracle_scan, repeats)

    phases = rng.uniform(0, 2 * math.pi, 1_000_000)

    def curve_eval():
        _kernels.coincidence_curve(0.7, 0.21, -0.05, phases)

    results["coincidence_curve_1e6_phases"] = _time(curve_eval, repeats)

    def extrema():
        _kernels.grid_extrema(0.7, 0.21, -0.05, 1_000_000)

    results["grid_extrema_1e6_points"] = _time(extrema, repeats)

    truth = FringeModelParams(c0=54.9, mu=0.82, period=5e-3, psi=0.3)
    x = np.linspace(-6e-3, 6e-3, 61)
    scans = [sample_counts(list(zip(x, fringe_model(x, truth))), 10.0, seed=s)
             for s in range(20)]

    def fit_batch():
        for records in scans:
            fit_fringe(records)

    results["fringe_fit_20_poisson_scans"] = _time(fit_batch, repeats)
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--single", action="store_true",
                        help="benchmark only the currently selected backend")
    parser.add_argument("--json", action="store_true")
    args = parser.parse_args()

    if args.single:
        results = run_workloads(args.repeats)
        if args.json:
            print(json.dumps(results))
        else:
            for key, value in results.items():
                print(f"{key}: {value}")
        return 0

    runs = {}
    for flag, label in (("0", "numba"), ("1", "numpy")):
        env = dict(os.environ)
        env["TWINFRINGE_NO_NUMBA"] = flag
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--single", "--json",
             "--repeats", str(args.repeats)],
            capture_output=True, text=True, env=env, check=True)
        runs[label] = json.loads(proc.stdout)

    if runs["numba"]["backend"] != "numba":
        print("note: numba is unavailable; both columns ran the numpy fallback")

    keys = [k for k in runs["numba"] if k != "backend"]
    width = max(len(k) for k in keys)
    print(f"{'workload':<{width}}  {'numba [s]':>10}  {'numpy [s]':>10}  {'speedup':>8}")
    for key in keys:
        a, b = runs["numba"][key], runs["numpy"][key]
        print(f"{key:<{width}}  {a:>10.4f}  {b:>10.4f}  {b / a:>7.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
