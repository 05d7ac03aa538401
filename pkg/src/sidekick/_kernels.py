"""Hot numeric kernels.

Two interchangeable backends:

* ``numba`` -- explicit loops compiled with ``@njit`` (default when numba
  imports cleanly),
* ``numpy`` -- vectorized fallback, selected by setting the environment
  variable ``SIDEKICK_NUMBA=0`` before import.

Every kernel has both implementations with identical signatures and
semantics; ``backend()`` reports which one is live.  The benchmark in
``benchmarks/bench_kernels.py`` times the two side by side.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = os.environ.get("SIDEKICK_NUMBA", "1").strip().lower()
_WANT_NUMBA = _ENV_FLAG not in ("0", "false", "no", "off")

if _WANT_NUMBA:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _HAVE_NUMBA = False
else:
    _HAVE_NUMBA = False


def backend() -> str:
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if _HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy implementations (fallback path)
# ---------------------------------------------------------------------------


def _normalize_batch_np(x, a1, a2, a3, a4):
    x = np.asarray(x, dtype=np.float64)
    out = np.select(
        [x < a1, x < a2, x < a3, x < a4],
        [
            x / a1,
            1.0 + (x - a1) / (a2 - a1),
            2.0 + (x - a2) / (a3 - a2),
            3.0 + (x - a3) / (a4 - a3),
        ],
        default=3.0 + x / a4,
    )
    return np.maximum(out, 0.0)


def _severity_distance_batch_np(v):
    v = np.asarray(v, dtype=np.float64)
    return np.maximum(0.0, np.maximum(2.0 - v, v - 3.0))


def _route_batch_np(x, feat, thr, mask, is_qual, left, right):
    n = x.shape[0]
    node = np.zeros(n, dtype=np.int64)
    while True:
        live = left[node] >= 0
        if not live.any():
            break
        rows = np.nonzero(live)[0]
        cur = node[rows]
        j = feat[cur]
        vals = x[rows, j]
        qual = is_qual[cur]
        go_left = np.empty(rows.shape[0], dtype=bool)
        if qual.any():
            codes = vals[qual].astype(np.int64)
            go_left[qual] = (mask[cur[qual]] >> codes) & 1 == 1
        nq = ~qual
        if nq.any():
            go_left[nq] = vals[nq] < thr[cur[nq]]
        node[rows] = np.where(go_left, left[cur], right[cur])
    return node


def _quant_split_scan_np(values, labels, n_labels, min_leaf):
    n = values.shape[0]
    if n < 2 * min_leaf:
        return np.inf, -1
    onehot = np.zeros((n, n_labels), dtype=np.float64)
    onehot[np.arange(n), labels] = 1.0
    prefix = np.cumsum(onehot, axis=0)
    total = prefix[-1]
    # split index i separates [0, i) from [i, n)
    idx = np.arange(min_leaf, n - min_leaf + 1)
    if idx.size == 0:
        return np.inf, -1
    valid = values[idx] > values[idx - 1]
    if not valid.any():
        return np.inf, -1
    idx = idx[valid]
    left_counts = prefix[idx - 1]
    right_counts = total - left_counts
    n_l = idx.astype(np.float64)
    n_r = n - n_l
    g_l = 1.0 - np.sum((left_counts / n_l[:, None]) ** 2, axis=1)
    g_r = 1.0 - np.sum((right_counts / n_r[:, None]) ** 2, axis=1)
    weighted = (n_l * g_l + n_r * g_r) / n
    best = int(np.argmin(weighted))
    return float(weighted[best]), int(idx[best])


def _qual_split_scan_np(codes, labels, n_cats, n_labels, min_leaf):
    n = codes.shape[0]
    if n < 2 * min_leaf:
        return np.inf, -1
    counts = np.zeros((n_cats, n_labels), dtype=np.float64)
    np.add.at(counts, (codes, labels), 1.0)
    total = counts.sum(axis=0)
    best_score, best_cat = np.inf, -1
    for c in range(n_cats):
        n_l = counts[c].sum()
        n_r = n - n_l
        if n_l < min_leaf or n_r < min_leaf:
            continue
        g_l = 1.0 - np.sum((counts[c] / n_l) ** 2)
        rc = total - counts[c]
        g_r = 1.0 - np.sum((rc / n_r) ** 2)
        weighted = (n_l * g_l + n_r * g_r) / n
        if weighted < best_score:
            best_score, best_cat = float(weighted), c
    return best_score, best_cat


def _count_support_np(codes, feat_idx, val_codes):
    if feat_idx.shape[0] == 0:
        return codes.shape[0]
    return int(np.all(codes[:, feat_idx] == val_codes, axis=1).sum())


# ---------------------------------------------------------------------------
# numba implementations (loop kernels, same contracts)
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(cache=True)
    def _normalize_batch_nb(x, a1, a2, a3, a4):  # pragma: no cover - compiled
        out = np.empty(x.shape[0], dtype=np.float64)
        for i in range(x.shape[0]):
            v = x[i]
            if v < a1:
                r = v / a1
            elif v < a2:
                r = 1.0 + (v - a1) / (a2 - a1)
            elif v < a3:
                r = 2.0 + (v - a2) / (a3 - a2)
            elif v < a4:
                r = 3.0 + (v - a3) / (a4 - a3)
            else:
                r = 3.0 + v / a4
            out[i] = r if r > 0.0 else 0.0
        return out

    @njit(cache=True)
    def _severity_distance_batch_nb(v):  # pragma: no cover - compiled
        out = np.empty(v.shape[0], dtype=np.float64)
        for i in range(v.shape[0]):
            d = 0.0
            if 2.0 - v[i] > d:
                d = 2.0 - v[i]
            if v[i] - 3.0 > d:
                d = v[i] - 3.0
            out[i] = d
        return out

    @njit(cache=True)
    def _route_batch_nb(x, feat, thr, mask, is_qual, left, right):  # pragma: no cover
        n = x.shape[0]
        node = np.zeros(n, dtype=np.int64)
        for r in range(n):
            cur = 0
            while left[cur] >= 0:
                j = feat[cur]
                if is_qual[cur]:
                    code = np.int64(x[r, j])
                    if (mask[cur] >> code) & 1 == 1:
                        cur = left[cur]
                    else:
                        cur = right[cur]
                else:
                    if x[r, j] < thr[cur]:
                        cur = left[cur]
                    else:
                        cur = right[cur]
            node[r] = cur
        return node

    @njit(cache=True)
    def _quant_split_scan_nb(values, labels, n_labels, min_leaf):  # pragma: no cover
        n = values.shape[0]
        if n < 2 * min_leaf:
            return np.inf, -1
        total = np.zeros(n_labels, dtype=np.float64)
        for i in range(n):
            total[labels[i]] += 1.0
        left_counts = np.zeros(n_labels, dtype=np.float64)
        best_score = np.inf
        best_idx = -1
        for i in range(1, n - min_leaf + 1):
            left_counts[labels[i - 1]] += 1.0
            if i < min_leaf:
                continue
            if values[i] <= values[i - 1]:
                continue
            n_l = float(i)
            n_r = float(n - i)
            s_l = 0.0
            s_r = 0.0
            for k in range(n_labels):
                pl = left_counts[k] / n_l
                pr = (total[k] - left_counts[k]) / n_r
                s_l += pl * pl
                s_r += pr * pr
            weighted = (n_l * (1.0 - s_l) + n_r * (1.0 - s_r)) / n
            if weighted < best_score:
                best_score = weighted
                best_idx = i
        return best_score, best_idx

    @njit(cache=True)
    def _qual_split_scan_nb(codes, labels, n_cats, n_labels, min_leaf):  # pragma: no cover
        n = codes.shape[0]
        if n < 2 * min_leaf:
            return np.inf, -1
        counts = np.zeros((n_cats, n_labels), dtype=np.float64)
        total = np.zeros(n_labels, dtype=np.float64)
        for i in range(n):
            counts[codes[i], labels[i]] += 1.0
            total[labels[i]] += 1.0
        best_score = np.inf
        best_cat = -1
        for c in range(n_cats):
            n_l = 0.0
            for k in range(n_labels):
                n_l += counts[c, k]
            n_r = n - n_l
            if n_l < min_leaf or n_r < min_leaf:
                continue
            s_l = 0.0
            s_r = 0.0
            for k in range(n_labels):
                pl = counts[c, k] / n_l
                pr = (total[k] - counts[c, k]) / n_r
                s_l += pl * pl
                s_r += pr * pr
            weighted = (n_l * (1.0 - s_l) + n_r * (1.0 - s_r)) / n
            if weighted < best_score:
                best_score = weighted
                best_cat = c
        return best_score, best_cat

    @njit(cache=True)
    def _count_support_nb(codes, feat_idx, val_codes):  # pragma: no cover
        n = codes.shape[0]
        m = feat_idx.shape[0]
        count = 0
        for r in range(n):
            ok = True
            for k in range(m):
                if codes[r, feat_idx[k]] != val_codes[k]:
                    ok = False
                    break
            if ok:
                count += 1
        return count

    normalize_batch = _normalize_batch_nb
    severity_distance_batch = _severity_distance_batch_nb
    route_batch = _route_batch_nb
    quant_split_scan = _quant_split_scan_nb
    qual_split_scan = _qual_split_scan_nb
    count_support = _count_support_nb
else:
    normalize_batch = _normalize_batch_np
    severity_distance_batch = _severity_distance_batch_np
    route_batch = _route_batch_np
    quant_split_scan = _quant_split_scan_np
    qual_split_scan = _qual_split_scan_np
    count_support = _count_support_np


def warmup() -> None:
    """Trigger JIT compilation of every kernel (no-op on the numpy path)."""
    x = np.array([0.5, 1.5, 2.5, 3.5, 4.5])
    normalize_batch(x, 1.0, 2.0, 3.0, 4.0)
    severity_distance_batch(x)
    route_batch(
        np.array([[0.0], [9.0]]),
        np.array([0], dtype=np.int64),
        np.array([5.0]),
        np.array([0], dtype=np.int64),
        np.array([False]),
        np.array([-1], dtype=np.int64),
        np.array([-1], dtype=np.int64),
    )
    quant_split_scan(
        np.array([1.0, 2.0, 8.0, 9.0]),
        np.array([0, 0, 1, 1], dtype=np.int64),
        2,
        1,
    )
    qual_split_scan(
        np.array([0, 1, 0, 1], dtype=np.int64),
        np.array([0, 0, 1, 1], dtype=np.int64),
        2,
        2,
        1,
    )
    count_support(
        np.array([[0, 1], [1, 0]], dtype=np.int64),
        np.array([0], dtype=np.int64),
        np.array([1], dtype=np.int64),
    )
