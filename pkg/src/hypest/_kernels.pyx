# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled least-squares and logistic Newton kernels.

Both functions mirror ``hypest._kernels_py`` exactly in signature and return
values; the numerical results agree to rounding error.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, exp

cnp.import_array()


cdef double _householder_solve(double[:, ::1] a, double[::1] b, double[::1] out,
                               double[::1] rdiag) noexcept nogil:
    """In-place Householder QR of ``a`` (n x p, row-major), applied to ``b``.

    Writes the least-squares solution to ``out`` and the R diagonal to
    ``rdiag``. Returns min|R_jj| / max|R_jj| (0.0 when a column vanishes).
    """
    cdef Py_ssize_t n = a.shape[0], p = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double norm, alpha, vtv, s, rmax = 0.0, rmin = 0.0, d

    for k in range(p):
        norm = 0.0
        for i in range(k, n):
            norm += a[i, k] * a[i, k]
        norm = sqrt(norm)
        if norm == 0.0:
            rdiag[k] = 0.0
            continue
        alpha = -norm if a[k, k] >= 0.0 else norm
        # v = x - alpha e1 stored in column k below the diagonal
        a[k, k] -= alpha
        vtv = 0.0
        for i in range(k, n):
            vtv += a[i, k] * a[i, k]
        if vtv > 0.0:
            for j in range(k + 1, p):
                s = 0.0
                for i in range(k, n):
                    s += a[i, k] * a[i, j]
                s = 2.0 * s / vtv
                for i in range(k, n):
                    a[i, j] -= s * a[i, k]
            s = 0.0
            for i in range(k, n):
                s += a[i, k] * b[i]
            s = 2.0 * s / vtv
            for i in range(k, n):
                b[i] -= s * a[i, k]
        rdiag[k] = alpha

    for k in range(p):
        d = fabs(rdiag[k])
        if k == 0 or d > rmax:
            rmax = d
        if k == 0 or d < rmin:
            rmin = d
    if rmax == 0.0 or rmin == 0.0:
        for k in range(p):
            out[k] = 0.0
        return 0.0

    for k in range(p - 1, -1, -1):
        s = b[k]
        for j in range(k + 1, p):
            s -= a[k, j] * out[j]
        out[k] = s / rdiag[k]
    return rmin / rmax


def lstsq(x, y):
    """Least-squares coefficients of ``y`` on the columns of ``x``.

    Returns ``(coef, rank_ratio)`` where ``rank_ratio`` is the ratio of the
    smallest to the largest absolute diagonal entry of R.
    """
    cdef double[:, ::1] a = np.array(x, dtype=np.float64, order="C", copy=True)
    cdef double[::1] b = np.array(y, dtype=np.float64, copy=True)
    cdef Py_ssize_t p = a.shape[1]
    if a.shape[0] != b.shape[0]:
        raise ValueError("design rows and response length differ")
    coef = np.zeros(p, dtype=np.float64)
    cdef double[::1] coef_v = coef
    cdef double[::1] rdiag = np.zeros(p, dtype=np.float64)
    cdef double ratio
    with nogil:
        ratio = _householder_solve(a, b, coef_v, rdiag)
    return coef, ratio


cdef int _cholesky_solve(double[:, ::1] h, double[::1] g, double[::1] out) noexcept nogil:
    """Solve h out = g for symmetric positive definite h (overwrites h, g)."""
    cdef Py_ssize_t p = h.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s
    for j in range(p):
        s = h[j, j]
        for k in range(j):
            s -= h[j, k] * h[j, k]
        if s <= 0.0:
            return -1
        h[j, j] = sqrt(s)
        for i in range(j + 1, p):
            s = h[i, j]
            for k in range(j):
                s -= h[i, k] * h[j, k]
            h[i, j] = s / h[j, j]
    for i in range(p):
        s = g[i]
        for k in range(i):
            s -= h[i, k] * g[k]
        g[i] = s / h[i, i]
    for i in range(p - 1, -1, -1):
        s = g[i]
        for k in range(i + 1, p):
            s -= h[k, i] * out[k]
        out[i] = s / h[i, i]
    return 0


def logistic_newton(x, r, double tol=1e-10, int max_iter=50, double bound=30.0):
    """Newton-Raphson maximiser of the Bernoulli log-likelihood.

    Returns ``(coef, status, iterations)``; status 0 converged, 1 a
    coefficient left ``[-bound, bound]``, 2 iteration cap reached,
    3 singular information matrix.
    """
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], p = xv.shape[1]
    coef_arr = np.zeros(p, dtype=np.float64)
    cdef double[::1] coef = coef_arr
    cdef double[::1] step = np.zeros(p, dtype=np.float64)
    cdef double[::1] grad = np.zeros(p, dtype=np.float64)
    cdef double[:, ::1] hess = np.zeros((p, p), dtype=np.float64)
    cdef Py_ssize_t i, j, k
    cdef int it, status = 2, iters = 0
    cdef double eta, mu, w, resid, gnorm, dmax

    with nogil:
        for it in range(max_iter):
            for j in range(p):
                grad[j] = 0.0
                for k in range(p):
                    hess[j, k] = 0.0
            for i in range(n):
                eta = 0.0
                for j in range(p):
                    eta += xv[i, j] * coef[j]
                if eta >= 0.0:
                    mu = 1.0 / (1.0 + exp(-eta))
                else:
                    mu = exp(eta) / (1.0 + exp(eta))
                w = mu * (1.0 - mu)
                resid = rv[i] - mu
                for j in range(p):
                    grad[j] += xv[i, j] * resid
                    for k in range(j + 1):
                        hess[j, k] += w * xv[i, j] * xv[i, k]
            gnorm = 0.0
            for j in range(p):
                gnorm += grad[j] * grad[j]
            gnorm = sqrt(gnorm)
            if gnorm < tol:
                status = 0
                iters = it
                break
            for j in range(p):
                for k in range(j + 1, p):
                    hess[j, k] = hess[k, j]
            if _cholesky_solve(hess, grad, step) != 0:
                status = 3
                iters = it + 1
                break
            dmax = 0.0
            for j in range(p):
                coef[j] += step[j]
                if fabs(step[j]) > dmax:
                    dmax = fabs(step[j])
            iters = it + 1
            for j in range(p):
                if fabs(coef[j]) > bound:
                    status = 1
                    break
            if status == 1:
                break
            if dmax < tol:
                status = 0
                break
    return coef_arr, status, iters
