# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels for packed polynomial vector fields.

A packed field is ``(comps, exps, coeffs)``: term ``t`` contributes
``coeffs[t] * prod_j x_j**exps[t, j]`` to component ``comps[t]``.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx


cdef int _max_exp(const long long[:, :] exps) nogil:
    cdef Py_ssize_t t, j
    cdef int m = 0
    for t in range(exps.shape[0]):
        for j in range(exps.shape[1]):
            if exps[t, j] > m:
                m = <int>exps[t, j]
    return m


cdef void _eval_into(const long long[:] comps, const long long[:, :] exps,
                     const cplx[:] coeffs, const cplx[:] x, cplx[:, :] pw,
                     cplx[:] out, int maxe) nogil:
    cdef Py_ssize_t t, j, e
    cdef Py_ssize_t dim = x.shape[0]
    cdef cplx mono
    for j in range(dim):
        pw[j, 0] = 1.0
        for e in range(1, maxe + 1):
            pw[j, e] = pw[j, e - 1] * x[j]
        out[j] = 0.0
    for t in range(coeffs.shape[0]):
        mono = coeffs[t]
        for j in range(dim):
            if exps[t, j]:
                mono = mono * pw[j, exps[t, j]]
        out[comps[t]] = out[comps[t]] + mono


def poly_eval(const long long[:] comps, const long long[:, :] exps,
              const cplx[:] coeffs, const cplx[:] x, int dim):
    cdef int maxe = _max_exp(exps)
    pw_arr = np.empty((dim, maxe + 1), dtype=np.complex128)
    out_arr = np.zeros(dim, dtype=np.complex128)
    cdef cplx[:, :] pw = pw_arr
    cdef cplx[:] out = out_arr
    with nogil:
        _eval_into(comps, exps, coeffs, x, pw, out, maxe)
    return out_arr


def poly_eval_batch(const long long[:] comps, const long long[:, :] exps,
                    const cplx[:] coeffs, const cplx[:, :] X, int dim):
    cdef Py_ssize_t P = X.shape[1]
    cdef Py_ssize_t p, j
    cdef int maxe = _max_exp(exps)
    pw_arr = np.empty((dim, maxe + 1), dtype=np.complex128)
    col_arr = np.empty(dim, dtype=np.complex128)
    tmp_arr = np.empty(dim, dtype=np.complex128)
    out_arr = np.zeros((dim, P), dtype=np.complex128)
    cdef cplx[:, :] pw = pw_arr
    cdef cplx[:] col = col_arr
    cdef cplx[:] tmp = tmp_arr
    cdef cplx[:, :] out = out_arr
    with nogil:
        for p in range(P):
            for j in range(dim):
                col[j] = X[j, p]
            _eval_into(comps, exps, coeffs, col, pw, tmp, maxe)
            for j in range(dim):
                out[j, p] = tmp[j]
    return out_arr


def rk4_poly(lam_in, const long long[:] comps, const long long[:, :] exps,
             const cplx[:] coeffs, x0, double h, Py_ssize_t n_steps):
    cdef cplx[:] lam = np.ascontiguousarray(lam_in, dtype=np.complex128)
    cdef Py_ssize_t dim = lam.shape[0]
    cdef int maxe = _max_exp(exps)
    states_arr = np.empty((n_steps + 1, dim), dtype=np.complex128)
    cdef cplx[:, :] states = states_arr
    work = np.zeros((6, dim), dtype=np.complex128)
    cdef cplx[:] x = work[0]
    cdef cplx[:] y = work[1]
    cdef cplx[:] k1 = work[2]
    cdef cplx[:] k2 = work[3]
    cdef cplx[:] k3 = work[4]
    cdef cplx[:] k4 = work[5]
    pw_arr = np.empty((dim, maxe + 1), dtype=np.complex128)
    cdef cplx[:, :] pw = pw_arr
    cdef Py_ssize_t k, j
    x0c = np.ascontiguousarray(x0, dtype=np.complex128)
    for j in range(dim):
        x[j] = x0c[j]
        states[0, j] = x[j]
    with nogil:
        for k in range(n_steps):
            _eval_into(comps, exps, coeffs, x, pw, k1, maxe)
            for j in range(dim):
                k1[j] = k1[j] + lam[j] * x[j]
                y[j] = x[j] + 0.5 * h * k1[j]
            _eval_into(comps, exps, coeffs, y, pw, k2, maxe)
            for j in range(dim):
                k2[j] = k2[j] + lam[j] * y[j]
                y[j] = x[j] + 0.5 * h * k2[j]
            _eval_into(comps, exps, coeffs, y, pw, k3, maxe)
            for j in range(dim):
                k3[j] = k3[j] + lam[j] * y[j]
                y[j] = x[j] + h * k3[j]
            _eval_into(comps, exps, coeffs, y, pw, k4, maxe)
            for j in range(dim):
                k4[j] = k4[j] + lam[j] * y[j]
                x[j] = x[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                states[k + 1, j] = x[j]
    return states_arr
