"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 100 200 400] [--repeat 5]

Prints one row per (kernel, size) with the best-of-``repeat`` wall time of
each backend and the speedup.
"""

import argparse
import sys
import timeit

import numpy as np

from bjortho import _pykernels

try:
    from bjortho import _ckernels
except ImportError:
    sys.exit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")


def cases(n, rng):
    pts = rng.standard_normal((n, 2))
    dist = np.ascontiguousarray(np.linalg.norm(pts[:, None] - pts[None], axis=-1))
    dist[0, 1] = dist[1, 0] = dist[0, 1] + 3.0  # a few triangle violations
    subset = np.arange(0, n, 2, dtype=np.int64)
    table = np.ascontiguousarray(rng.standard_normal((n, 401)))
    return {
        "triangle_violations": (dist, 1e-9, 10_000),
        "count_components": (dist, subset, 0.3),
        "column_max_argmax": (table,),
        "min_second_difference": (table,),
    }


def best(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<24}{'n':>6}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for n in args.sizes:
        for name, call in cases(n, rng).items():
            tp = best(getattr(_pykernels, name), call, args.repeat)
            tc = best(getattr(_ckernels, name), call, args.repeat)
            print(f"{name:<24}{n:>6}{tp:>12.2e}{tc:>12.2e}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
