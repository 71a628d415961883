"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--rows N] [--dim D] [--repeat R]

Prints one line per kernel with the best-of-R wall time for each backend
and the speedup.  Results are also checked for agreement.
"""

import argparse
import timeit

import numpy as np

from retrainlab._kernels import NUMBA_KERNELS, NUMPY_KERNELS


def _cases(rows, dim, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((rows, dim))
    theta = rng.standard_normal(dim)
    labels = np.where(rng.random(rows) < 0.5, -1.0, 1.0)
    half = np.sort(rng.choice(rows, rows // 2, replace=False)).astype(np.int64)
    s = X @ theta
    return {
        "scores": (X, theta),
        "sign_labels": (s,),
        "label_weighted_mean": (X, labels, half),
        "count_misclassified": (X, labels, theta),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=100_000)
    ap.add_argument("--dim", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args(argv)
    if NUMBA_KERNELS is None:
        raise SystemExit("numba is not importable; nothing to compare")

    cases = _cases(args.rows, args.dim)
    print(f"rows={args.rows} dim={args.dim} best of {args.repeat}")
    print(f"{'kernel':<22}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, call_args in cases.items():
        fast, slow = NUMBA_KERNELS[name], NUMPY_KERNELS[name]
        a, b = fast(*call_args), slow(*call_args)  # also triggers compilation
        if not np.allclose(a, b, rtol=1e-10, atol=1e-12):
            raise SystemExit(f"{name}: backends disagree")
        t_np = min(timeit.repeat(lambda: slow(*call_args), number=5, repeat=args.repeat)) / 5
        t_nb = min(timeit.repeat(lambda: fast(*call_args), number=5, repeat=args.repeat)) / 5
        print(f"{name:<22}{t_np * 1e3:>10.3f}{t_nb * 1e3:>10.3f}{t_np / t_nb:>8.2f}x")


if __name__ == "__main__":
    main()
