"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 20]

Also runs one end-to-end MILP solve with each backend (in subprocesses, since
the backend is picked at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from robolayout import _kernels_py

try:
    from robolayout import _kernels
except ImportError:
    _kernels = None


def inputs(seed=0):
    rng = np.random.default_rng(seed)
    n_arm, n_seg, m = 600, 2000, 4000
    xy = np.ascontiguousarray(rng.uniform(0, 8, (n_arm, 2)))
    rmin = np.full(n_arm, 0.18)
    rmax = np.full(n_arm, 0.85)
    clr = np.full(n_arm, 0.15)
    sa = np.ascontiguousarray(rng.uniform(0, 8, (n_seg, 2)))
    steps = 0.5 * np.array([[1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0], [-1, -1], [0, -1], [1, -1]])
    sb = np.ascontiguousarray(sa + steps[rng.integers(0, 8, n_seg)])
    x_b = rng.uniform(0, 1, m)
    lo = np.zeros(m)
    up = np.ones(m)
    delta = rng.normal(size=m)
    basis = np.arange(m, dtype=np.int64)
    d = rng.normal(size=m)
    status = rng.integers(0, 3, m).astype(np.int8)
    k = 40
    rows = rng.integers(0, m, k).astype(np.int64)
    etas = np.ascontiguousarray(rng.normal(size=(k, m)))
    etas[np.arange(k), rows] = 2.0 + rng.uniform(size=k)
    return {
        "arm_pair_mask": (xy, rmin, rmax, clr),
        "arm_segment_mask": (xy, rmin, rmax, clr, sa, sb),
        "primal_ratio_test": (x_b, lo, up, delta, basis, 1e-9, 1e-9, False),
        "dual_ratio_test": (d, delta, status, True, 1e-9, 1e-9),
        "eta_ftran": (x_b, rows, etas, k),
        "eta_btran": (x_b, rows, etas, k),
    }


def bench(repeat):
    args = inputs()
    print(f"{'kernel':<20} {'numpy ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for name, a in args.items():
        def run(mod):
            fn = getattr(mod, name)
            copy = [x.copy() if isinstance(x, np.ndarray) else x for x in a]
            return min(timeit.repeat(lambda: fn(*copy), number=1, repeat=repeat)) * 1e3
        t_py = run(_kernels_py)
        if _kernels is None:
            print(f"{name:<20} {t_py:>10.3f} {'-':>12} {'-':>8}")
            continue
        t_c = run(_kernels)
        print(f"{name:<20} {t_py:>10.3f} {t_c:>12.3f} {t_py / t_c:>7.1f}x")


SOLVE = """
import time
from robolayout import kernels
from robolayout.pipeline import benchmark_scene, optimize
t = time.monotonic()
r = optimize(benchmark_scene(3, 2, resolution=0.5, size=6.0))
print(kernels.BACKEND, r.status, round(r.cost, 6), round(time.monotonic() - t, 2))
"""


def end_to_end():
    print("\nend-to-end solve (6 m floor, 0.5 m grid, 2 outputs): backend status cost seconds")
    for pure in ("", "1"):
        env = dict(os.environ, ROBOLAYOUT_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", SOLVE], env=env, capture_output=True, text=True)
        print(" ", out.stdout.strip() or out.stderr.strip().splitlines()[-1])


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--skip-solve", action="store_true")
    opts = ap.parse_args()
    bench(opts.repeat)
    if not opts.skip_solve:
        end_to_end()
