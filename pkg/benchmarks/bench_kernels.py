"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Prints the best wall time of each kernel for both backends, their ratio and
the largest absolute difference between the two results.
"""

import argparse
import timeit

import numpy as np

from qdots import _kernels_py

try:
    from qdots import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(rng):
    r = np.linspace(0.0, 5.0, 1500)
    r_small = np.linspace(0.0, 5.0, 200)
    deltas = np.arange(1, 9, dtype=np.int64)
    pts = rng.normal(size=(200, 2))
    return [
        ("kernel_offdiag (M=1500)", "kernel_offdiag", (r,)),
        ("exchange_moments (M=200, 8 deltas)", "exchange_moments", (r_small, deltas, 64)),
        ("pair_energy_grad (N=200)", "pair_energy_grad", (pts,)),
        ("min_pair_distance (N=200)", "min_pair_distance", (pts,)),
    ]


def _max_diff(a, b):
    if isinstance(a, tuple):
        return max(_max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not available; build with pip install -e .")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':38s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s} {'max diff':>10s}")
    for label, name, a in cases(rng):
        fc, fp = getattr(_kernels, name), getattr(_kernels_py, name)
        tc = min(timeit.repeat(lambda: fc(*a), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fp(*a), number=1, repeat=args.repeat))
        diff = _max_diff(fc(*a), fp(*a))
        print(f"{label:38s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
