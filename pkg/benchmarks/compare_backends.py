#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Run from the repository root after installing the package:

    python benchmarks/compare_backends.py [--steps N]

Both backends execute identical arithmetic, so the outputs are also checked
for float equality while timing.
"""

import argparse
import math
import time

import numpy as np

from selftrap import standard_params
from selftrap._backend import _core, pure  # type: ignore[attr-defined]


def time_call(fn, *args, repeat=3):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=200_000,
                    help="integrator steps per trajectory case")
    args = ap.parse_args()
    n = args.steps
    p = standard_params()

    rng = np.random.default_rng(0)
    xi = 0.05 * rng.standard_normal(n // 10)

    cases = [
        ("two-mode, conservative",
         "bloch_traj",
         (p.Omega, p.A, p.B, 0.0, math.pi / 2, 0.0, 1e-3, n, n,
          0.0, 0.0, 0.0, 1e-12), n),
        ("two-mode, harmonic drive",
         "bloch_traj",
         (p.Omega, p.A, p.B, p.delta0, 0.0, 0.0, 1e-3, n, n,
          0.2, 2.6, 0.0, 1e-12), n),
        ("two-mode, sampled noise",
         "bloch_noise_traj",
         (p.Omega, p.A, p.B, p.delta0, 0.0, 0.0, 1e-3, 10, xi, n,
          1e-12, 1), n),
        ("soft oscillator",
         "duffing_traj",
         (0.1, 1.0, 0.0, 0.0, 0.0, 1e-3, n, n), n),
        ("slow flow",
         "slowflow_traj",
         (0.06, -0.05, 3.0 / 32.0, 0.0, math.pi, 0.0, 1e-3, n, n), n),
    ]

    print(f"{'case':28s} {'compiled':>12s} {'pure':>12s} {'speedup':>9s}")
    for label, name, call_args, steps in cases:
        t_c, out_c = time_call(getattr(_core, name), *call_args)
        t_p, out_p = time_call(getattr(pure, name), *call_args, repeat=1)
        same = all(
            np.array_equal(a, b)
            for a, b in zip(out_c, out_p)
            if isinstance(a, np.ndarray)
        )
        rate_c = steps / t_c / 1e6
        rate_p = steps / t_p / 1e6
        mark = "" if same else "  (MISMATCH!)"
        print(f"{label:28s} {rate_c:9.2f} M/s {rate_p:9.3f} M/s "
              f"{t_p / t_c:8.1f}x{mark}")


if __name__ == "__main__":
    main()
