# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Same contracts as ``_pykernels``.

Row updates in a sweep touch disjoint rows of X and disjoint rhat entries,
so the row loop runs under OpenMP without locks. Every accumulation runs in
a fixed order, making results independent of the thread count.
"""

import numpy as np

from cython.parallel cimport parallel, prange
from libc.stdlib cimport free, malloc

NAME = "compiled"


def build_cache(const double[:, ::1] F, const double[:, ::1] W, int nthreads=1):
    """S[t, f, k] = sum_j W[j, t] F[j, k] F[j, f]; upper triangle then mirror."""
    cdef Py_ssize_t n = F.shape[0], K = F.shape[1], Z = W.shape[1]
    S_arr = np.zeros((Z, K, K))
    cdef double[:, :, ::1] S = S_arr
    cdef Py_ssize_t j, t, f, k, cell, ncell, npair = K * (K + 1) // 2
    cdef double x, acc
    cdef Py_ssize_t[::1] pf = np.empty(npair, dtype=np.intp)
    cdef Py_ssize_t[::1] pk = np.empty(npair, dtype=np.intp)

    cell = 0
    for f in range(K):
        for k in range(f, K):
            pf[cell] = f
            pk[cell] = k
            cell = cell + 1

    if nthreads <= 1:
        with nogil:
            for j in range(n):
                for t in range(Z):
                    for f in range(K):
                        x = W[j, t] * F[j, f]
                        for k in range(f, K):
                            S[t, f, k] += x * F[j, k]
    else:
        ncell = Z * npair
        for cell in prange(ncell, nogil=True, num_threads=nthreads, schedule="static"):
            t = cell // npair
            f = pf[cell % npair]
            k = pk[cell % npair]
            acc = 0.0
            for j in range(n):
                acc = acc + (W[j, t] * F[j, f]) * F[j, k]
            S[t, f, k] = acc

    for t in range(Z):
        for f in range(K):
            for k in range(f + 1, K):
                S[t, k, f] = S[t, f, k]
    return S_arr


cdef int _fast_row(
    Py_ssize_t u,
    double[:, ::1] X, const double[:, ::1] Y,
    const double[:, ::1] Wx, const double[:, ::1] Wy,
    const Py_ssize_t[::1] ptr, const Py_ssize_t[::1] ids, const Py_ssize_t[::1] other,
    const double[::1] r, const double[::1] c, double[::1] rhat,
    const double[:, :, ::1] S,
    Py_ssize_t f_start, Py_ssize_t f_stop, double lam, double eps,
    double* yb, double* rh, double* rf, double* cr, double* cw,
) noexcept nogil:
    cdef Py_ssize_t K = X.shape[1], Z = Wx.shape[1]
    cdef Py_ssize_t start = ptr[u], n = ptr[u + 1] - ptr[u]
    cdef Py_ssize_t j, e, i, t, k, f
    cdef double acc, s, xf, y, v, num, den

    # per-row gathers: partner factors stored factor-major, cached
    # predictions, c*r and c - a_u.b_i for every observed entry
    for j in range(n):
        e = ids[start + j]
        i = other[e]
        for k in range(K):
            yb[k * n + j] = Y[i, k]
        rh[j] = rhat[e]
        acc = 0.0
        for t in range(Z):
            acc = acc + Wx[u, t] * Wy[i, t]
        cr[j] = c[e] * r[e]
        cw[j] = c[e] - acc

    for f in range(f_start, f_stop):
        xf = X[u, f]
        num = 0.0
        den = 0.0
        for j in range(n):
            y = yb[f * n + j]
            v = rh[j] - xf * y
            rf[j] = v
            num = num + (cr[j] - cw[j] * v) * y
            den = den + cw[j] * y * y
        # missing-cell terms over all partners, read from the cache
        # (S[t, f, k] == S[t, k, f])
        for t in range(Z):
            s = 0.0
            for k in range(f):
                s = s + X[u, k] * S[t, f, k]
            for k in range(f + 1, K):
                s = s + X[u, k] * S[t, f, k]
            num = num - Wx[u, t] * s
            den = den + Wx[u, t] * S[t, f, f]
        den = den + lam
        if not den >= eps:
            return 1
        xf = num / den
        for j in range(n):
            rh[j] = rf[j] + xf * yb[f * n + j]
        X[u, f] = xf

    for j in range(n):
        rhat[ids[start + j]] = rh[j]
    return 0


def sweep_fast(double[:, ::1] X, const double[:, ::1] Y,
               const double[:, ::1] Wx, const double[:, ::1] Wy,
               const Py_ssize_t[::1] ptr, const Py_ssize_t[::1] ids, const Py_ssize_t[::1] other,
               const double[::1] r, const double[::1] c, double[::1] rhat,
               const double[:, :, ::1] S, const Py_ssize_t[::1] rows,
               Py_ssize_t f_start, Py_ssize_t f_stop, double lam, double eps, int nthreads=1):
    cdef Py_ssize_t K = X.shape[1], nrows = rows.shape[0]
    cdef Py_ssize_t q, u, maxlen = 1
    cdef double* yb
    cdef double* rh
    cdef double* rf
    cdef double* cr
    cdef double* cw
    cdef signed char[::1] failed = np.zeros(max(nrows, 1), dtype=np.int8)

    for q in range(nrows):
        u = rows[q]
        if ptr[u + 1] - ptr[u] > maxlen:
            maxlen = ptr[u + 1] - ptr[u]

    with nogil, parallel(num_threads=max(nthreads, 1)):
        yb = <double*> malloc(maxlen * K * sizeof(double))
        rh = <double*> malloc(maxlen * sizeof(double))
        rf = <double*> malloc(maxlen * sizeof(double))
        cr = <double*> malloc(maxlen * sizeof(double))
        cw = <double*> malloc(maxlen * sizeof(double))
        for q in prange(nrows, schedule="dynamic", chunksize=16):
            if yb == NULL or rh == NULL or rf == NULL or cr == NULL or cw == NULL:
                failed[q] = 2
            else:
                failed[q] = _fast_row(rows[q], X, Y, Wx, Wy, ptr, ids, other, r, c, rhat, S,
                                      f_start, f_stop, lam, eps, yb, rh, rf, cr, cw)
        free(yb)
        free(rh)
        free(rf)
        free(cr)
        free(cw)

    for q in range(nrows):
        if failed[q] == 2:
            raise MemoryError()
        if failed[q]:
            return rows[q]
    return -1


def sweep_vanilla(double[:, ::1] X, const double[:, ::1] Y,
                  const double[:, ::1] Wx, const double[:, ::1] Wy,
                  const Py_ssize_t[::1] ptr, const Py_ssize_t[::1] ids, const Py_ssize_t[::1] other,
                  const double[::1] r, const double[::1] c, double[::1] rhat,
                  const Py_ssize_t[::1] rows,
                  Py_ssize_t f_start, Py_ssize_t f_stop, double lam, double eps):
    cdef Py_ssize_t K = X.shape[1], Z = Wx.shape[1], n_other = Y.shape[0]
    cdef Py_ssize_t q, u, i, j, e, k, t, f
    cdef double acc, xf, v, y, num, den
    # column-major copies keep the per-factor scans contiguous
    cdef const double[:, ::1] YT = np.ascontiguousarray(np.asarray(Y).T)
    cdef const double[:, ::1] WyT = np.ascontiguousarray(np.asarray(Wy).T)
    cdef double[::1] w = np.empty(n_other)
    cdef double[::1] target = np.empty(n_other)
    cdef double[::1] pred = np.empty(n_other)
    cdef double[::1] rf = np.empty(n_other)

    with nogil:
        for q in range(rows.shape[0]):
            u = rows[q]
            for i in range(n_other):
                w[i] = 0.0
                target[i] = 0.0
                pred[i] = 0.0
            for t in range(Z):
                for i in range(n_other):
                    w[i] += Wx[u, t] * WyT[t, i]
            for k in range(K):
                for i in range(n_other):
                    pred[i] += X[u, k] * YT[k, i]
            for j in range(ptr[u], ptr[u + 1]):
                e = ids[j]
                i = other[e]
                w[i] = c[e]
                target[i] = r[e]
                pred[i] = rhat[e]
            for f in range(f_start, f_stop):
                xf = X[u, f]
                num = 0.0
                den = 0.0
                for i in range(n_other):
                    y = YT[f, i]
                    v = pred[i] - xf * y
                    rf[i] = v
                    num = num + (target[i] - v) * w[i] * y
                    den = den + w[i] * y * y
                den = den + lam
                if not den >= eps:
                    with gil:
                        return u
                xf = num / den
                for i in range(n_other):
                    pred[i] = rf[i] + xf * YT[f, i]
                X[u, f] = xf
            for j in range(ptr[u], ptr[u + 1]):
                e = ids[j]
                rhat[e] = pred[other[e]]
    return -1


def missing_quadratic(const double[:, ::1] X, const double[:, ::1] Wx,
                      const double[:, :, ::1] S, int nthreads=1):
    """sum_u sum_t Wx[u, t] sum_f sum_k x_uf x_uk S[t, f, k], upper triangle doubled."""
    cdef Py_ssize_t n = X.shape[0], K = X.shape[1], Z = Wx.shape[1]
    cdef Py_ssize_t u, t, f, k
    cdef double acc, inner, row, part
    cdef double[::1] partial = np.zeros(n)
    for u in prange(n, nogil=True, num_threads=max(nthreads, 1), schedule="static"):
        row = 0.0
        for t in range(Z):
            part = 0.0
            for f in range(K):
                inner = 0.0
                for k in range(f + 1, K):
                    inner = inner + S[t, f, k] * X[u, k]
                part = part + X[u, f] * (S[t, f, f] * X[u, f] + 2.0 * inner)
            row = row + Wx[u, t] * part
        partial[u] = row
    acc = 0.0
    for u in range(n):
        acc += partial[u]
    return acc


def observed_terms(const double[:, ::1] A, const double[:, ::1] B,
                   const Py_ssize_t[::1] rows, const Py_ssize_t[::1] cols,
                   const double[::1] r, const double[::1] c, const double[::1] rhat):
    """(sum_e c_e (r_e - rhat_e)^2, sum_e (a_u . b_i) rhat_e^2) over observed entries."""
    cdef Py_ssize_t e, t, Z = A.shape[1]
    cdef double obs = 0.0, overlap = 0.0, ab, d
    with nogil:
        for e in range(r.shape[0]):
            ab = 0.0
            for t in range(Z):
                ab = ab + A[rows[e], t] * B[cols[e], t]
            d = r[e] - rhat[e]
            obs = obs + c[e] * d * d
            overlap = overlap + ab * rhat[e] * rhat[e]
    return obs, overlap
