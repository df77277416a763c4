# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of ``numpy_backend``: same two functions, same semantics.

The forward fuses both affine layers, tanh, and the max-pool into one pass
over the points; the backward exploits max-pool sparsity (only the winning
point of each pooled channel carries gradient) instead of materializing the
full (batch, N, H) gradient tensor.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport tanh
from libc.string cimport memset

cnp.import_array()

BACKEND = "compiled"


def encoder_forward(const double[:, :, ::1] points, const double[:, ::1] w1,
                    const double[::1] b1, const double[:, ::1] w2,
                    const double[::1] b2):
    cdef Py_ssize_t batch = points.shape[0]
    cdef Py_ssize_t N = points.shape[1]
    cdef Py_ssize_t H = w1.shape[1]
    cdef Py_ssize_t b, n, j, h, g

    pooled_arr = np.empty((batch, H), dtype=np.float64)
    a1_arr = np.empty((batch, N, H), dtype=np.float64)
    argmax_arr = np.zeros((batch, H), dtype=np.int64)
    buf_arr = np.empty(2 * H, dtype=np.float64)
    best_arr = np.empty(H, dtype=np.float64)

    cdef double[:, ::1] pooled = pooled_arr
    cdef double[:, :, ::1] a1 = a1_arr
    cdef long long[:, ::1] argmax = argmax_arr
    cdef double[::1] buf = buf_arr  # [0:H] point activations, [H:2H] z2
    cdef double[::1] best = best_arr
    cdef double acc, p0, p1, p2

    for b in range(batch):
        for h in range(H):
            best[h] = -1e308
        for n in range(N):
            p0 = points[b, n, 0]
            p1 = points[b, n, 1]
            p2 = points[b, n, 2]
            for h in range(H):
                buf[h] = tanh(p0 * w1[0, h] + p1 * w1[1, h] + p2 * w1[2, h] + b1[h])
            for g in range(H):
                buf[H + g] = b2[g]
            for h in range(H):
                acc = buf[h]
                a1[b, n, h] = acc
                for g in range(H):
                    buf[H + g] += acc * w2[h, g]
            for g in range(H):
                if buf[H + g] > best[g]:
                    best[g] = buf[H + g]
                    argmax[b, g] = n
        for g in range(H):
            pooled[b, g] = tanh(best[g])
    return pooled_arr, a1_arr, argmax_arr


def encoder_backward(const double[:, :, ::1] points, const double[:, :, ::1] a1,
                     const long long[:, ::1] argmax, const double[:, ::1] pooled,
                     const double[:, ::1] w1, const double[:, ::1] w2,
                     const double[:, ::1] dpooled):
    cdef Py_ssize_t batch = points.shape[0]
    cdef Py_ssize_t N = points.shape[1]
    cdef Py_ssize_t H = a1.shape[2]
    cdef Py_ssize_t b, n, j, h, g, i

    dw1_arr = np.zeros((3, H), dtype=np.float64)
    db1_arr = np.zeros(H, dtype=np.float64)
    dw2_arr = np.zeros((H, H), dtype=np.float64)
    db2_arr = np.zeros(H, dtype=np.float64)
    da1_arr = np.zeros((N, H), dtype=np.float64)
    touched_arr = np.zeros(N, dtype=np.uint8)

    cdef double[:, ::1] dw1 = dw1_arr
    cdef double[::1] db1 = db1_arr
    cdef double[:, ::1] dw2 = dw2_arr
    cdef double[::1] db2 = db2_arr
    cdef double[:, ::1] da1 = da1_arr
    cdef unsigned char[::1] touched = touched_arr
    cdef double dz2, g_val, a, dz1

    for b in range(batch):
        memset(&da1[0, 0], 0, N * H * sizeof(double))
        memset(&touched[0], 0, N * sizeof(unsigned char))
        for g in range(H):
            g_val = pooled[b, g]
            dz2 = dpooled[b, g] * (1.0 - g_val * g_val)
            if dz2 == 0.0:
                continue
            n = argmax[b, g]
            touched[n] = 1
            db2[g] += dz2
            for h in range(H):
                dw2[h, g] += dz2 * a1[b, n, h]
                da1[n, h] += dz2 * w2[h, g]
        for n in range(N):
            if not touched[n]:
                continue
            for h in range(H):
                a = a1[b, n, h]
                dz1 = da1[n, h] * (1.0 - a * a)
                dw1[0, h] += points[b, n, 0] * dz1
                dw1[1, h] += points[b, n, 1] * dz1
                dw1[2, h] += points[b, n, 2] * dz1
                db1[h] += dz1
    return dw1_arr, db1_arr, dw2_arr, db2_arr
