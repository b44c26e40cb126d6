"""Compare the compiled and fallback kernel backends.

Usage: python benchmarks/bench_kernels.py [--sizes 1000 10000 100000] [--repeat 5]

Times a single tridiagonal solve and a block of implicit time steps for each
available backend, checks that the backends agree, and prints a table.
"""
import argparse
import time

import numpy as np

from chemowave import kernels
from chemowave.wave import advection_weights


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def inputs(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    dx = 0.05
    al, au = advection_weights(rng.uniform(-5, 5, n), dx)
    r = rng.uniform(-1, 1, n)
    U0 = rng.uniform(0, 2, n)
    lo, up = -rng.uniform(0, 1, n), -rng.uniform(0, 1, n)
    di = 2.5 + rng.uniform(0, 1, n)
    return (lo, di, up, rng.normal(size=n)), (U0, al, au, r, 0.9, 0.05, 50, False, 0.0, False, 0.0)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = kernels.backends()
    print(f"default backend: {kernels.BACKEND}; available: {', '.join(sorted(backends))}")
    print(f"{'kernel':<16}{'n':>9}" + "".join(f"{b + ' [ms]':>16}" for b in sorted(backends))
          + f"{'speedup':>10}{'max diff':>12}")
    for n in args.sizes:
        tri, steps = inputs(n)
        for name, call in (("thomas", lambda m: m.thomas(*tri)),
                           ("implicit_steps", lambda m: m.implicit_steps(*steps))):
            t = {b: best_of(lambda: call(m), args.repeat) for b, m in backends.items()}
            out = {b: call(m) for b, m in backends.items()}
            ref = out["python"]
            diff = max(float(np.max(np.abs(v - ref))) for v in out.values())
            speed = t["python"] / t["cython"] if "cython" in t else float("nan")
            print(f"{name:<16}{n:>9}" + "".join(f"{1e3 * t[b]:>16.3f}" for b in sorted(t))
                  + f"{speed:>10.2f}{diff:>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
