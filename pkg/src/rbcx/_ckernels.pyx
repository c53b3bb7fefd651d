# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; signatures mirror :mod:`rbcx._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil, fabs, sin, cos, M_PI
from libc.stdint cimport uint64_t, uint8_t

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

NAME = "compiled"

cdef double _THIN = 1e-3


cdef inline double _cube_pos(double x) noexcept nogil:
    if x <= 0.0:
        return 0.0
    return x * x * x


cdef inline double _footprint(double x, double a, double b) noexcept nogil:
    cdef double h, total
    if a < _THIN or b < _THIN:
        h = a if a > b else b
        total = 1.0 - fabs(x) / h
        return total / h if total > 0.0 else 0.0
    total = 0.0
    # coefficient pattern (+1, -2, +1) at offsets (-1, 0, +1) per width
    total += _cube_pos(x - a - b)
    total += -2.0 * _cube_pos(x - a)
    total += _cube_pos(x - a + b)
    total += -2.0 * _cube_pos(x - b)
    total += 4.0 * _cube_pos(x)
    total += -2.0 * _cube_pos(x + b)
    total += _cube_pos(x + a - b)
    total += -2.0 * _cube_pos(x + a)
    total += _cube_pos(x + a + b)
    return total / (6.0 * a * a * b * b)


def radon_splat(img, double cos_t, double sin_t, Py_ssize_t length, double origin):
    cdef const double[:, ::1] im = np.ascontiguousarray(img, dtype=np.float64)
    out_arr = np.zeros(length, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t n_rows = im.shape[0], n_cols = im.shape[1]
    cdef double cx = (n_cols - 1) / 2.0, cy = (n_rows - 1) / 2.0
    cdef double a = fabs(cos_t), b = fabs(sin_t)
    cdef double reach = (a if a > b else b) if (a < _THIN or b < _THIN) else a + b
    cdef Py_ssize_t span = <Py_ssize_t>ceil(2 * reach) + 2
    cdef double w[8]
    cdef Py_ssize_t i, j, d, k0, k
    cdef double t, v, wsum
    with nogil:
        for i in range(n_rows):
            for j in range(n_cols):
                v = im[i, j]
                if v == 0.0:
                    continue
                t = (j - cx) * cos_t + (i - cy) * sin_t + origin
                k0 = <Py_ssize_t>floor(t - reach)
                wsum = 0.0
                for d in range(span):
                    w[d] = _footprint((k0 + d) - t, a, b)
                    wsum += w[d]
                for d in range(span):
                    k = k0 + d
                    if 0 <= k < length:
                        out[k] += (w[d] / wsum) * v
    return out_arr


def hamming_scan(words, query):
    cdef const uint64_t[:, ::1] wv = np.ascontiguousarray(words, dtype=np.uint64)
    cdef const uint64_t[::1] q = np.ascontiguousarray(query, dtype=np.uint64)
    cdef Py_ssize_t n = wv.shape[0], nw = wv.shape[1], i, j
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef cnp.int64_t acc
    with nogil:
        for i in range(n):
            acc = 0
            for j in range(nw):
                acc += __builtin_popcountll(wv[i, j] ^ q[j])
            out[i] = acc
    return out_arr


def l1_scan(rows, query):
    cdef const float[:, ::1] r = np.ascontiguousarray(rows, dtype=np.float32)
    cdef const float[::1] q = np.ascontiguousarray(query, dtype=np.float32)
    cdef Py_ssize_t n = r.shape[0], L = r.shape[1], i, j
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(L):
                acc += fabs(<double>r[i, j] - <double>q[j])
            out[i] = acc
    return out_arr


def shifted_l1(query, cands, Py_ssize_t max_shift):
    cdef const double[:, ::1] qv = np.ascontiguousarray(query, dtype=np.float64)
    cdef const double[:, :, ::1] cv = np.ascontiguousarray(cands, dtype=np.float64)
    cdef Py_ssize_t m = cv.shape[0], A = cv.shape[1], L = cv.shape[2]
    out_arr = np.full((m, A), np.inf)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, a, s, x, lo, hi, overlap
    cdef double acc
    with nogil:
        for i in range(m):
            for a in range(A):
                for s in range(-max_shift, max_shift + 1):
                    overlap = L - (s if s >= 0 else -s)
                    if overlap <= 0:
                        continue
                    lo = 0 if s >= 0 else -s
                    hi = L - s if s >= 0 else L
                    acc = 0.0
                    for x in range(lo, hi):
                        acc += fabs(qv[a, x] - cv[i, a, x + s])
                    acc = acc * (<double>L / overlap)
                    if acc < out[i, a]:
                        out[i, a] = acc
    return out_arr


def lbp_codes(img, bint bilinear=True):
    cdef const double[:, ::1] im = np.ascontiguousarray(img, dtype=np.float64)
    cdef Py_ssize_t h = im.shape[0], w = im.shape[1]
    codes_arr = np.zeros((h - 2, w - 2), dtype=np.uint8)
    cdef uint8_t[:, ::1] codes = codes_arr
    # per neighbour: 4 (dy, dx, weight) taps; axis neighbours use a single tap
    cdef Py_ssize_t ty[8][4]
    cdef Py_ssize_t tx[8][4]
    cdef double tw[8][4]
    cdef int ntap[8]
    cdef int p, t
    cdef double dy, dx, fy, fx
    cdef Py_ssize_t y0, x0
    for p in range(8):
        dy = -sin(2 * M_PI * p / 8)
        dx = cos(2 * M_PI * p / 8)
        if fabs(dy) < 1e-12 or fabs(dx) < 1e-12 or not bilinear:
            ntap[p] = 1
            ty[p][0] = <Py_ssize_t>floor(dy + 0.5)
            tx[p][0] = <Py_ssize_t>floor(dx + 0.5)
            tw[p][0] = 1.0
        else:
            ntap[p] = 4
            y0 = <Py_ssize_t>floor(dy)
            x0 = <Py_ssize_t>floor(dx)
            fy = dy - y0
            fx = dx - x0
            ty[p][0] = y0; tx[p][0] = x0; tw[p][0] = (1 - fy) * (1 - fx)
            ty[p][1] = y0; tx[p][1] = x0 + 1; tw[p][1] = (1 - fy) * fx
            ty[p][2] = y0 + 1; tx[p][2] = x0; tw[p][2] = fy * (1 - fx)
            ty[p][3] = y0 + 1; tx[p][3] = x0 + 1; tw[p][3] = fy * fx
    cdef Py_ssize_t i, j
    cdef double c, diff
    cdef uint8_t code
    with nogil:
        for i in range(1, h - 1):
            for j in range(1, w - 1):
                c = im[i, j]
                code = 0
                for p in range(8):
                    if ntap[p] == 1:
                        diff = im[i + ty[p][0], j + tx[p][0]] - c
                    else:
                        diff = 0.0
                        for t in range(4):
                            diff += tw[p][t] * (im[i + ty[p][t], j + tx[p][t]] - c)
                    if diff >= 0:
                        code |= <uint8_t>(1 << p)
                codes[i - 1, j - 1] = code
    return codes_arr
