# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled loops for the dense-layer and label-enumeration kernels.

Mirrors ``_pykernels``. Matrix products go straight to BLAS dgemm; the bias,
activation and activation-derivative passes are fused C loops, which avoids
the temporaries and per-call overhead of the numpy path.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

cdef double SIGMOID_CLAMP = 36.0


cdef inline double _sigmoid(double z) nogil:
    cdef double e
    if z > SIGMOID_CLAMP:
        z = SIGMOID_CLAMP
    elif z < -SIGMOID_CLAMP:
        z = -SIGMOID_CLAMP
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef void _gemm_nn(const double[:, ::1] a, const double[:, ::1] b,
                   double[:, ::1] out) noexcept nogil:
    # row-major out = a @ b, computed as the column-major product b^T a^T
    cdef int n = <int>a.shape[0], k = <int>a.shape[1], m = <int>b.shape[1]
    cdef int ldb = m if m > 0 else 1, lda = k if k > 0 else 1
    cdef double one = 1.0, zero = 0.0
    if n == 0 or m == 0:
        return
    dgemm("N", "N", &m, &n, &k, &one, <double*>&b[0, 0], &ldb,
          <double*>&a[0, 0], &lda, &zero, &out[0, 0], &ldb)


def sigmoid(z):
    cdef cnp.ndarray[double, ndim=1] flat = np.ascontiguousarray(z, dtype=np.float64).ravel().copy()
    cdef double[::1] v = flat
    cdef Py_ssize_t i
    for i in range(v.shape[0]):
        v[i] = _sigmoid(v[i])
    return flat.reshape(np.shape(z))


def matmul(a, b):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    out = np.empty((av.shape[0], bv.shape[1]), dtype=np.float64)
    _gemm_nn(av, bv, out)
    return out


def dense_forward(x, w, b, int act):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], m = wv.shape[1], i, j
    pre = np.empty((n, m), dtype=np.float64)
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] pv = pre
    cdef double[:, ::1] ov = out
    cdef double z
    _gemm_nn(xv, wv, pv)
    for i in range(n):
        for j in range(m):
            z = pv[i, j] + bv[j]
            pv[i, j] = z
            if act == 0:
                ov[i, j] = z
            elif act == 1:
                ov[i, j] = z if z > 0.0 else 0.0
            else:
                ov[i, j] = _sigmoid(z)
    return out, pre


def dense_backward(x, pre, w, grad_out, int act):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] pv = np.ascontiguousarray(pre, dtype=np.float64)
    cdef const double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[:, ::1] gov = np.ascontiguousarray(grad_out, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], k = xv.shape[1], m = wv.shape[1]
    cdef Py_ssize_t i, j
    cdef double s, gij
    cdef int ni = <int>n, ki = <int>k, mi = <int>m
    cdef double one = 1.0, zero = 0.0
    g = np.empty((n, m), dtype=np.float64)
    grad_w = np.zeros((k, m), dtype=np.float64)
    grad_b = np.zeros(m, dtype=np.float64)
    grad_in = np.zeros((n, k), dtype=np.float64)
    cdef double[:, ::1] gv = g
    cdef double[:, ::1] gwv = grad_w
    cdef double[::1] gbv = grad_b
    cdef double[:, ::1] giv = grad_in
    with nogil:
        for i in range(n):
            for j in range(m):
                if act == 0:
                    gij = gov[i, j]
                elif act == 1:
                    gij = gov[i, j] if pv[i, j] > 0.0 else 0.0
                else:
                    s = _sigmoid(pv[i, j])
                    gij = gov[i, j] * (s * (1.0 - s))
                gv[i, j] = gij
                gbv[j] += gij
        if n > 0:
            # grad_w = x^T g  ->  column-major grad_w^T = g^T x
            dgemm("N", "T", &mi, &ki, &ni, &one, &gv[0, 0], &mi,
                  <double*>&xv[0, 0], &ki, &zero, &gwv[0, 0], &mi)
            # grad_in = g w^T  ->  column-major grad_in^T = w g^T
            dgemm("T", "N", &ki, &ni, &mi, &one, <double*>&wv[0, 0], &mi,
                  &gv[0, 0], &mi, &zero, &giv[0, 0], &ki)
    return grad_in, grad_w, grad_b


def pattern_energies(int n_labels, unary, pair_i, pair_j, strength):
    cdef const double[::1] u = np.ascontiguousarray(unary, dtype=np.float64)
    cdef const long long[::1] pi = np.ascontiguousarray(pair_i, dtype=np.int64)
    cdef const long long[::1] pj = np.ascontiguousarray(pair_j, dtype=np.int64)
    cdef const double[::1] st = np.ascontiguousarray(strength, dtype=np.float64)
    cdef Py_ssize_t n_pat = 1 << n_labels, n_pairs = pi.shape[0]
    cdef Py_ssize_t pat, k
    cdef double e
    energy = np.empty(n_pat, dtype=np.float64)
    cdef double[::1] ev = energy
    with nogil:
        for pat in range(n_pat):
            e = 0.0
            for k in range(n_labels):
                if (pat >> k) & 1:
                    e = e + u[k]
            for k in range(n_pairs):
                if ((pat >> pi[k]) & 1) and ((pat >> pj[k]) & 1):
                    e = e + st[k]
            ev[pat] = e
    return energy
