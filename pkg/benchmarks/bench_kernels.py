"""Compare the compiled Lloyd kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--n 200000] [--d 16] [--k 64] [--repeat 5]

Prints the best-of-``repeat`` wall time of each kernel for both backends
and checks that they agree.
"""
import argparse
import timeit

import numpy as np

from gpc import _kernels_py

try:
    from gpc import _kernels
except ImportError:  # extension not built
    _kernels = None


def bench(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=200_000)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    X = rng.standard_normal((args.n, args.d))
    C = rng.standard_normal((args.k, args.d))
    labels = _kernels_py.assign_nearest(X, C)[0]

    cases = {
        "sq_dists": (X, C),
        "assign_nearest": (X, C),
        "cluster_sums": (X, labels, args.k),
    }
    print(f"N={args.n} d={args.d} k={args.k} best of {args.repeat}")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'compiled [ms]':>15}{'speedup':>9}")
    for name, fargs in cases.items():
        t_py = bench(getattr(_kernels_py, name), fargs, args.repeat)
        if _kernels is None:
            print(f"{name:<16}{t_py * 1e3:>12.1f}{'n/a':>15}{'':>9}")
            continue
        t_c = bench(getattr(_kernels, name), fargs, args.repeat)
        a, b = getattr(_kernels_py, name)(*fargs), getattr(_kernels, name)(*fargs)
        a, b = (a if isinstance(a, tuple) else (a,)), (b if isinstance(b, tuple) else (b,))
        agree = all(np.allclose(x, y, rtol=1e-10, atol=1e-9) for x, y in zip(a, b))
        print(f"{name:<16}{t_py * 1e3:>12.1f}{t_c * 1e3:>15.1f}{t_py / t_c:>8.1f}x" + ("" if agree else "  MISMATCH"))


if __name__ == "__main__":
    main()
