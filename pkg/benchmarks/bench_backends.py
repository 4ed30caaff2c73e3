"""Compare the numba kernel against the pure-Python fallback.

The windowed adaptive integrator dominates the runtime of every numeric
classification, so this benchmark times that kernel directly on a
representative inverse-square problem, once per backend, plus the
end-to-end classification path on the active backend.

Usage:
    python benchmarks/bench_backends.py [--repeats 20]

Force the fallback globally with DEFECTSUM_NUMBA=0.
"""

import argparse
import math
import time

import numpy as np

from defectsum import _kernels
from defectsum.weyl import DEFAULT_SETTINGS, RadialProblem, weyl_classify_numeric
from defectsum.weyl import _build_table


def kernel_args(q0=1.3, n_windows=40):
    q = lambda r: q0 / np.asarray(r, dtype=float) ** 2
    w, t_lo, dt, t_anchor = _build_table(q, 1.0, -1, n_windows, DEFAULT_SETTINGS)
    return (w, t_lo, dt, t_anchor, 1.0, n_windows, -1.0, 0.0, 1.0,
            DEFAULT_SETTINGS.rtol, DEFAULT_SETTINGS.max_steps_per_window)


def time_impl(impl, args, repeats):
    impl(*args)  # warm up (compilation for the jit path)
    start = time.perf_counter()
    for _ in range(repeats):
        impl(*args)
    return (time.perf_counter() - start) / repeats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    kargs = kernel_args()
    rows = []

    t_py = time_impl(_kernels._window_kernel_py, kargs, max(3, args.repeats // 4))
    rows.append(("python kernel", t_py))

    if _kernels._window_kernel_jit is not None:
        t_jit = time_impl(_kernels._window_kernel_jit, kargs, args.repeats)
        rows.append(("numba kernel", t_jit))
    else:
        t_jit = None
        print("numba backend unavailable (DEFECTSUM_NUMBA=0 or import failure)")

    problem = RadialProblem(q=lambda r: 1.3 / np.asarray(r, dtype=float) ** 2,
                            interval=(0.0, math.inf), singular_endpoint=0.0,
                            anchor=1.0)
    weyl_classify_numeric(problem)
    start = time.perf_counter()
    for _ in range(args.repeats):
        weyl_classify_numeric(problem)
    t_e2e = (time.perf_counter() - start) / args.repeats
    rows.append((f"end-to-end classify ({_kernels.backend_name()})", t_e2e))

    width = max(len(name) for name, _ in rows)
    print(f"{'path'.ljust(width)}   mean per call")
    for name, t in rows:
        print(f"{name.ljust(width)}   {t * 1e3:10.3f} ms")
    if t_jit is not None:
        print(f"\nspeedup (python / numba): {t_py / t_jit:.1f}x")


if __name__ == "__main__":
    main()
