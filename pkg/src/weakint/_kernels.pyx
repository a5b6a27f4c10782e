# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def seminorms_table(table):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] T = np.ascontiguousarray(table, dtype=np.float64).ravel()
    cdef Py_ssize_t n = np.ndim(table)
    cdef Py_ssize_t K = np.shape(table)[0]
    cdef Py_ssize_t N = T.shape[0]
    cdef double[::1] t = T
    cdef Py_ssize_t[::1] st = np.asarray([K ** (n - 1 - k) for k in range(n)], dtype=np.intp)
    cdef Py_ssize_t k, l, f, o, y, y2, z, sk, sl, span
    cdef double lo, hi, v, m_val = 0.0, j_val = 0.0
    with nogil:
        for k in range(n):
            sk = st[k]
            # o enumerates the flat indices whose digit k is zero
            for o in range(N // K):
                f = (o // sk) * sk * K + o % sk
                lo = t[f]
                hi = lo
                for y in range(1, K):
                    v = t[f + y * sk]
                    if v < lo:
                        lo = v
                    if v > hi:
                        hi = v
                if hi - lo > m_val:
                    m_val = hi - lo
        for k in range(n):
            sk = st[k]
            for l in range(k + 1, n):
                sl = st[l]
                span = sk // (sl * K)
                # digits k and l both zero; sk > sl since k < l
                for o in range(N // (K * K)):
                    f = ((o // sl) // span) * sk * K + ((o // sl) % span) * sl * K + o % sl
                    for y in range(K):
                        for y2 in range(y + 1, K):
                            lo = t[f + y * sk] - t[f + y2 * sk]
                            hi = lo
                            for z in range(1, K):
                                v = t[f + y * sk + z * sl] - t[f + y2 * sk + z * sl]
                                if v < lo:
                                    lo = v
                                if v > hi:
                                    hi = v
                            if hi - lo > j_val:
                                j_val = hi - lo
    return float(m_val), float(j_val)


cdef double _vf_at(double[::1] t, Py_ssize_t[::1] st, Py_ssize_t[::1] idx,
                   Py_ssize_t[::1] d, Py_ssize_t n) nogil:
    cdef Py_ssize_t j, r, c, base
    cdef double fb, diff, acc = 0.0
    for j in range(n + 1):
        c = 0
        for r in range(n + 1):
            if r != j:
                d[c] = idx[r]
                c += 1
        base = 0
        for r in range(n):
            base += d[r] * st[r]
        fb = t[base]
        for r in range(n):
            diff = fb - t[base + (idx[j] - d[r]) * st[r]]
            acc += diff * diff
    return acc / (2.0 * (n + 1))


def vf_table_point(table, idx):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] T = np.ascontiguousarray(table, dtype=np.float64).ravel()
    cdef Py_ssize_t n = np.ndim(table)
    cdef Py_ssize_t K = np.shape(table)[0]
    cdef Py_ssize_t[::1] st = np.asarray([K ** (n - 1 - k) for k in range(n)], dtype=np.intp)
    cdef Py_ssize_t[::1] ix = np.ascontiguousarray(idx, dtype=np.intp)
    cdef Py_ssize_t[::1] d = np.empty(n, dtype=np.intp)
    return _vf_at(T, st, ix, d, n)


def vf_table_all(table):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] T = np.ascontiguousarray(table, dtype=np.float64).ravel()
    cdef Py_ssize_t n = np.ndim(table)
    cdef Py_ssize_t K = np.shape(table)[0]
    cdef Py_ssize_t total = K ** (n + 1)
    cdef Py_ssize_t[::1] st = np.asarray([K ** (n - 1 - k) for k in range(n)], dtype=np.intp)
    cdef Py_ssize_t[::1] ix = np.empty(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] d = np.empty(n, dtype=np.intp)
    cdef double[::1] t = T
    out = np.empty(total, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t f, r, rem
    with nogil:
        for f in range(total):
            rem = f
            for r in range(n, -1, -1):
                ix[r] = rem % K
                rem = rem // K
            o[f] = _vf_at(t, st, ix, d, n)
    return out.reshape((K,) * (n + 1))


def lstat_patched(base, values, weights):
    cdef double[::1] x = np.ascontiguousarray(base, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    order_arr = np.argsort(np.asarray(x), kind="stable").astype(np.intp)
    cdef Py_ssize_t[::1] order = order_arr
    cdef double[::1] s = np.asarray(x)[order_arr]
    cdef Py_ssize_t[::1] rank = np.empty(n, dtype=np.intp)
    cdef double[::1] up = np.zeros(n + 1)
    cdef double[::1] down = np.zeros(n + 1)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, r, p, q, lo, hi, mid
    cdef double total = 0.0, yy
    with nogil:
        for i in range(n):
            rank[order[i]] = i
            total += w[i] * s[i]
        for i in range(n - 1):
            up[i + 1] = up[i] + (w[i + 1] - w[i]) * s[i]
        for i in range(1, n):
            down[i + 1] = down[i] + (w[i - 1] - w[i]) * s[i]
        for r in range(n):
            p = rank[r]
            yy = y[r]
            lo = 0
            hi = n
            while lo < hi:
                mid = (lo + hi) // 2
                if s[mid] < yy:
                    lo = mid + 1
                else:
                    hi = mid
            q = lo - 1 if p < lo else lo
            if q <= p:
                o[r] = total - w[p] * s[p] + w[q] * yy + (up[p] - up[q])
            else:
                o[r] = total - w[p] * s[p] + w[q] * yy + (down[q + 1] - down[p + 1])
    return out


def vf_inner_sums(base_vals, patched_vals):
    cdef double[::1] b = np.ascontiguousarray(base_vals, dtype=np.float64)
    cdef double[:, ::1] P = np.ascontiguousarray(patched_vals, dtype=np.float64)
    cdef Py_ssize_t m = P.shape[0], n = P.shape[1], j, r
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef double acc, diff
    with nogil:
        for j in range(m):
            acc = 0.0
            for r in range(n):
                diff = b[j] - P[j, r]
                acc += diff * diff
            o[j] = acc
    return out
