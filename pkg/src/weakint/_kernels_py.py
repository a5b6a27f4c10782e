"""Pure NumPy implementations of the hot kernels.

Every function here has a twin with the same signature in the compiled
``_kernels`` extension; ``weakint._backend`` picks one at import time.
Tables are C-contiguous float64 arrays of shape ``(K,) * n`` holding the
values of a statistic on every index tuple of a K-point alphabet.
"""
import numpy as np


def _strides(K, n):
    return K ** np.arange(n - 1, -1, -1, dtype=np.int64)


def seminorms_table(table):
    """Return ``(max |D|, max |DD|)`` over all coordinates and arguments.

    The mixed value is the raw second difference, not yet multiplied by n.
    """
    T = np.ascontiguousarray(table, dtype=np.float64)
    n = T.ndim
    K = T.shape[0]
    m_val = 0.0
    for k in range(n):
        m_val = max(m_val, float((T.max(axis=k) - T.min(axis=k)).max()))
    j_val = 0.0
    for k in range(n):
        for l in range(k + 1, n):
            A = np.moveaxis(T, (k, l), (0, 1)).reshape(K, K, -1)
            for y in range(K):
                for y2 in range(y + 1, K):
                    d = A[y] - A[y2]
                    j_val = max(j_val, float((d.max(axis=0) - d.min(axis=0)).max()))
    return m_val, j_val


def vf_table_point(table, idx):
    """Variance estimator of a table statistic at one (n+1)-index sample."""
    T = np.ascontiguousarray(table, dtype=np.float64).ravel()
    n = np.ndim(table)
    K = np.shape(table)[0]
    idx = np.asarray(idx, dtype=np.int64)
    st = _strides(K, n)
    acc = 0.0
    for j in range(n + 1):
        d = np.delete(idx, j)
        base = int(d @ st)
        fb = T[base]
        for r in range(n):
            diff = fb - T[base + (idx[j] - d[r]) * st[r]]
            acc += diff * diff
    return acc / (2.0 * (n + 1))


def vf_table_all(table):
    """Variance estimator evaluated on every point of the (n+1)-fold alphabet."""
    T = np.ascontiguousarray(table, dtype=np.float64).ravel()
    n = np.ndim(table)
    K = np.shape(table)[0]
    st = _strides(K, n)
    grid = np.indices((K,) * (n + 1)).reshape(n + 1, -1).T
    acc = np.zeros(len(grid))
    for j in range(n + 1):
        d = np.delete(grid, j, axis=1)
        base = d @ st
        fb = T[base]
        xj = grid[:, j]
        for r in range(n):
            diff = fb - T[base + (xj - d[:, r]) * st[r]]
            acc += diff * diff
    return (acc / (2.0 * (n + 1))).reshape((K,) * (n + 1))


def lstat_patched(base, values, weights):
    """L-statistic values after replacing each coordinate in turn.

    Entry r is ``sum_i weights[i] * sorted(base with base[r] -> values[r])[i]``,
    computed in O(log n) per entry from prefix sums over the sorted base.
    """
    x = np.asarray(base, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    n = len(x)
    order = np.argsort(x, kind="stable")
    s = x[order]
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    total = float(w @ s)
    up = np.zeros(n + 1)
    up[1:n] = np.cumsum((w[1:] - w[:-1]) * s[:-1])
    down = np.zeros(n + 1)
    down[2:] = np.cumsum((w[:-1] - w[1:]) * s[1:])
    p = rank
    less = np.searchsorted(s, y, side="left")
    q = np.where(p < less, less - 1, less)
    out = total - w[p] * s[p] + w[q] * y
    # q <= p: s[q..p-1] move up one rank; q > p: s[p+1..q] move down one rank
    out = out + np.where(q <= p, up[p] - up[q], down[np.maximum(q, p) + 1] - down[p + 1])
    return out


def vf_inner_sums(base_vals, patched_vals):
    """Row sums of squared differences between each base and its patches."""
    b = np.asarray(base_vals, dtype=np.float64)
    P = np.asarray(patched_vals, dtype=np.float64)
    d = b[:, None] - P
    return np.sum(d * d, axis=1)
