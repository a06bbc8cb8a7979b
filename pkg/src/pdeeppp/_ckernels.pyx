# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled float32 kernels for the conv/pool inner loops.

Signature-compatible with :mod:`pdeeppp.kernels_numpy`; float32 only.
Accumulation is done in double precision to match the numpy path's
64-bit reduction policy.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def conv1d_same(cnp.float32_t[:, :, ::1] x, cnp.float32_t[:, :, ::1] w,
                cnp.float32_t[::1] bias):
    cdef Py_ssize_t b = x.shape[0], c_in = x.shape[1], length = x.shape[2]
    cdef Py_ssize_t c_out = w.shape[0]
    cdef Py_ssize_t i, o, c, p, k, src
    cdef double acc
    y_arr = np.empty((b, c_out, length), dtype=np.float32)
    cdef cnp.float32_t[:, :, ::1] y = y_arr
    for i in range(b):
        for o in range(c_out):
            for p in range(length):
                acc = bias[o]
                for c in range(c_in):
                    for k in range(3):
                        src = p + k - 1
                        if 0 <= src < length:
                            acc += w[o, c, k] * x[i, c, src]
                y[i, o, p] = <cnp.float32_t>acc
    return y_arr


def conv1d_same_backward(cnp.float32_t[:, :, ::1] g, cnp.float32_t[:, :, ::1] x,
                         cnp.float32_t[:, :, ::1] w):
    cdef Py_ssize_t b = x.shape[0], c_in = x.shape[1], length = x.shape[2]
    cdef Py_ssize_t c_out = w.shape[0]
    cdef Py_ssize_t i, o, c, p, k, src
    dx_arr = np.zeros((b, c_in, length), dtype=np.float32)
    dw_arr = np.zeros((c_out, c_in, 3), dtype=np.float64)
    db_arr = np.zeros(c_out, dtype=np.float64)
    cdef cnp.float32_t[:, :, ::1] dx = dx_arr
    cdef cnp.float64_t[:, :, ::1] dw = dw_arr
    cdef cnp.float64_t[::1] db = db_arr
    for i in range(b):
        for o in range(c_out):
            for p in range(length):
                db[o] += g[i, o, p]
                for c in range(c_in):
                    for k in range(3):
                        src = p + k - 1
                        if 0 <= src < length:
                            dx[i, c, src] += g[i, o, p] * w[o, c, k]
                            dw[o, c, k] += g[i, o, p] * x[i, c, src]
    return dx_arr, dw_arr.astype(np.float32), db_arr.astype(np.float32)


def avg_pool_masked(cnp.float32_t[:, :, ::1] x, cnp.int64_t[::1] lengths,
                    cnp.uint8_t[:, ::1] mask, Py_ssize_t out_len):
    cdef Py_ssize_t b = x.shape[0], c = x.shape[1]
    cdef Py_ssize_t i, j, ch, p, lo, hi, li, n
    cdef double acc
    y_arr = np.zeros((b, c, out_len), dtype=np.float32)
    cdef cnp.float32_t[:, :, ::1] y = y_arr
    for i in range(b):
        li = lengths[i]
        for j in range(out_len):
            lo = (j * li) // out_len
            hi = ((j + 1) * li) // out_len
            n = 0
            for p in range(lo, hi):
                if mask[i, p]:
                    n += 1
            if n == 0:
                continue
            for ch in range(c):
                acc = 0.0
                for p in range(lo, hi):
                    if mask[i, p]:
                        acc += x[i, ch, p]
                y[i, ch, j] = <cnp.float32_t>(acc / n)
    return y_arr


def avg_pool_masked_backward(cnp.float32_t[:, :, ::1] g, cnp.int64_t[::1] lengths,
                             cnp.uint8_t[:, ::1] mask, Py_ssize_t length):
    cdef Py_ssize_t b = g.shape[0], c = g.shape[1], out_len = g.shape[2]
    cdef Py_ssize_t i, j, ch, p, lo, hi, li, n
    dx_arr = np.zeros((b, c, length), dtype=np.float32)
    cdef cnp.float32_t[:, :, ::1] dx = dx_arr
    for i in range(b):
        li = lengths[i]
        for j in range(out_len):
            lo = (j * li) // out_len
            hi = ((j + 1) * li) // out_len
            n = 0
            for p in range(lo, hi):
                if mask[i, p]:
                    n += 1
            if n == 0:
                continue
            for ch in range(c):
                for p in range(lo, hi):
                    if mask[i, p]:
                        dx[i, ch, p] += g[i, ch, j] / n
    return dx_arr
