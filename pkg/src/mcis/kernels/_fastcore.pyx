# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot kernels (see pure.py for the contract)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def mean_pool(double[:, ::1] table, long long[::1] token_ids,
              long long[::1] offsets):
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t d = table.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n, d), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, t, k, s, e
    cdef double inv
    for i in range(n):
        s = offsets[i]
        e = offsets[i + 1]
        inv = 1.0 / (e - s)
        for t in range(s, e):
            for k in range(d):
                ov[i, k] += table[token_ids[t], k]
        for k in range(d):
            ov[i, k] *= inv
    return out


def scatter_mean_grad(double[:, ::1] grad, long long[::1] token_ids,
                      long long[::1] offsets, Py_ssize_t n_rows):
    cdef Py_ssize_t n = grad.shape[0]
    cdef Py_ssize_t d = grad.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n_rows, d), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, t, k, s, e, row
    cdef double inv
    for i in range(n):
        s = offsets[i]
        e = offsets[i + 1]
        inv = 1.0 / (e - s)
        for t in range(s, e):
            row = token_ids[t]
            for k in range(d):
                ov[row, k] += grad[i, k] * inv
    return out


def lattice_weighted_f1(factual, label_cf, context_cf, gold, lam_hat, lam_tilde,
                        bint drop_zero_gold):
    cdef cnp.ndarray[double, ndim=1] f = np.ascontiguousarray(factual, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] lc = np.ascontiguousarray(label_cf, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] cc = np.ascontiguousarray(context_cf, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] g = np.ascontiguousarray(gold, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] lh = np.ascontiguousarray(lam_hat, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] lt = np.ascontiguousarray(lam_tilde, dtype=np.float64)

    if drop_zero_gold:
        keep = g != 0.0
        f, lc, cc, g = f[keep], lc[keep], cc[keep], g[keep]

    cdef double[::1] fv = f, lcv = lc, ccv = cc, gv = g, lhv = lh, ltv = lt
    cdef Py_ssize_t n = fv.shape[0]
    cdef Py_ssize_t ncells = lhv.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(ncells, dtype=np.float64)
    cdef double[::1] ov = out

    cdef Py_ssize_t i, c
    cdef long sup_p = 0, sup_n = 0, tp_p, fp_p, fn_p, tp_n, fp_n, fn_n
    cdef bint gp, pp
    cdef double s, a, b

    for i in range(n):
        if (gv[i] > 0.0) if drop_zero_gold else (gv[i] >= 0.0):
            sup_p += 1
        else:
            sup_n += 1

    for c in range(ncells):
        a = lhv[c]
        b = ltv[c]
        tp_p = 0
        fp_p = 0
        for i in range(n):
            s = fv[i] - a * lcv[i] - b * ccv[i]
            pp = (s > 0.0) if drop_zero_gold else (s >= 0.0)
            gp = (gv[i] > 0.0) if drop_zero_gold else (gv[i] >= 0.0)
            if pp and gp:
                tp_p += 1
            elif pp and not gp:
                fp_p += 1
        fn_p = sup_p - tp_p
        tp_n = sup_n - fp_p
        fp_n = fn_p
        fn_n = fp_p
        ov[c] = _weighted_f1(tp_p, fp_p, fn_p, sup_p, tp_n, fp_n, fn_n, sup_n)
    return out


cdef inline double _f1(long tp, long fp, long fn):
    cdef double prec = (<double>tp) / (tp + fp) if tp + fp > 0 else 0.0
    cdef double rec = (<double>tp) / (tp + fn) if tp + fn > 0 else 0.0
    if prec + rec == 0.0:
        return 0.0
    return 2.0 * prec * rec / (prec + rec)


cdef inline double _weighted_f1(long tp_p, long fp_p, long fn_p, long sup_p,
                                long tp_n, long fp_n, long fn_n, long sup_n):
    cdef long total = sup_p + sup_n
    if total == 0:
        return 0.0
    return (sup_p * _f1(tp_p, fp_p, fn_p) + sup_n * _f1(tp_n, fp_n, fn_n)) / total
