#!/usr/bin/env python3
"""Side-by-side timing of the compiled and vectorized kernel backends.

The package picks one backend at import time (``SIDEKICK_NUMBA=0`` forces
the numpy path), but the numpy implementations are defined unconditionally,
so with numba active this script can time each pair on identical inputs and
report the ratio:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --repeat 9 --scale 2.0
"""

import argparse
import time

import numpy as np

from sidekick import _kernels as k


def best_of(fn, args, repeat):
    """Best wall-clock time over *repeat* calls."""
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def build_tree(rng, depth, n_feat, n_qual, n_cats):
    """A complete binary decision tree in flat-array form (heap layout)."""
    n_nodes = 2 ** (depth + 1) - 1
    n_internal = 2 ** depth - 1
    feat = np.zeros(n_nodes, dtype=np.int64)
    thr = np.zeros(n_nodes, dtype=np.float64)
    mask = np.zeros(n_nodes, dtype=np.int64)
    is_qual = np.zeros(n_nodes, dtype=bool)
    left = np.full(n_nodes, -1, dtype=np.int64)
    right = np.full(n_nodes, -1, dtype=np.int64)
    for i in range(n_internal):
        left[i] = 2 * i + 1
        right[i] = 2 * i + 2
        j = int(rng.integers(n_feat))
        feat[i] = j
        if j >= n_feat - n_qual:
            is_qual[i] = True
            mask[i] = int(rng.integers(1, 2**n_cats - 1))
        else:
            thr[i] = float(rng.normal())
    return feat, thr, mask, is_qual, left, right


def main():
    parser = argparse.ArgumentParser(
        description="compare the numba and numpy kernel backends"
    )
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repeats per kernel; the best is kept")
    parser.add_argument("--scale", type=float, default=1.0,
                        help="multiplier applied to every workload size")
    args = parser.parse_args()

    if k.backend() != "numba":
        raise SystemExit(
            "the numba backend is not active (SIDEKICK_NUMBA=0 or numba "
            "missing); nothing to compare"
        )

    rng = np.random.default_rng(7)
    s = args.scale

    values = rng.uniform(0.0, 300.0, size=int(1_000_000 * s))
    scaled = k._normalize_batch_np(values, 40.0, 60.0, 100.0, 140.0)

    n_rows = int(200_000 * s)
    n_feat, n_qual, n_cats = 8, 2, 4
    x = rng.normal(size=(n_rows, n_feat))
    x[:, n_feat - n_qual:] = rng.integers(0, n_cats, size=(n_rows, n_qual))
    tree = build_tree(rng, 8, n_feat, n_qual, n_cats)

    n_scan = int(300_000 * s)
    sorted_values = np.sort(rng.normal(size=n_scan))
    scan_labels = rng.integers(0, 3, size=n_scan).astype(np.int64)
    codes = rng.integers(0, 20, size=n_scan).astype(np.int64)

    table = rng.integers(0, 2, size=(int(200_000 * s), 12)).astype(np.int64)
    feat_idx = np.array([1, 4, 7], dtype=np.int64)
    val_codes = np.array([1, 0, 1], dtype=np.int64)

    cases = [
        ("normalize_batch", k._normalize_batch_nb, k._normalize_batch_np,
         (values, 40.0, 60.0, 100.0, 140.0)),
        ("severity_distance_batch", k._severity_distance_batch_nb,
         k._severity_distance_batch_np, (scaled,)),
        ("route_batch", k._route_batch_nb, k._route_batch_np, (x, *tree)),
        ("quant_split_scan", k._quant_split_scan_nb, k._quant_split_scan_np,
         (sorted_values, scan_labels, 3, 5)),
        ("qual_split_scan", k._qual_split_scan_nb, k._qual_split_scan_np,
         (codes, scan_labels, 20, 3, 5)),
        ("count_support", k._count_support_nb, k._count_support_np,
         (table, feat_idx, val_codes)),
    ]

    k.warmup()
    print(f"{'kernel':<26} {'numba':>10} {'numpy':>10} {'ratio':>8}")
    for name, fn_nb, fn_np, call_args in cases:
        t_nb = best_of(fn_nb, call_args, args.repeat)
        t_np = best_of(fn_np, call_args, args.repeat)
        print(
            f"{name:<26} {t_nb * 1e3:>8.2f}ms {t_np * 1e3:>8.2f}ms "
            f"{t_np / t_nb:>7.1f}x"
        )


if __name__ == "__main__":
    main()
