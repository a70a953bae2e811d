# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-frame pixel kernels (single fused pass, no temporaries).

Must stay numerically identical to handrub.kernels.pure: same luma rounding
(floor(x + 0.5) via C truncation of a non-negative double), same integer
block sums, same final division order.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "native"


def luma_u8(cnp.ndarray[cnp.uint8_t, ndim=3] rgb not None):
    cdef Py_ssize_t h = rgb.shape[0]
    cdef Py_ssize_t w = rgb.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.empty((h, w), dtype=np.uint8)
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(h):
        for j in range(w):
            v = 0.299 * rgb[i, j, 0] + 0.587 * rgb[i, j, 1] + 0.114 * rgb[i, j, 2] + 0.5
            out[i, j] = <unsigned char> v
    return out


def foreground_mask(cnp.ndarray[cnp.uint8_t, ndim=3] rgb not None,
                    double reference_luma, double tolerance):
    cdef Py_ssize_t h = rgb.shape[0]
    cdef Py_ssize_t w = rgb.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.empty((h, w), dtype=np.uint8)
    cdef Py_ssize_t i, j
    cdef double v, d
    for i in range(h):
        for j in range(w):
            v = 0.299 * rgb[i, j, 0] + 0.587 * rgb[i, j, 1] + 0.114 * rgb[i, j, 2] + 0.5
            d = <double> (<unsigned char> v) - reference_luma
            if d < 0:
                d = -d
            out[i, j] = 1 if d > tolerance else 0
    return out.view(np.bool_)


def roi_foreground_count(cnp.ndarray mask not None,
                         Py_ssize_t x, Py_ssize_t y, Py_ssize_t w, Py_ssize_t h):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(
        mask.view(np.uint8) if mask.dtype == np.bool_ else mask, dtype=np.uint8
    )
    cdef Py_ssize_t i, j
    cdef long long count = 0
    for i in range(y, y + h):
        for j in range(x, x + w):
            if m[i, j]:
                count += 1
    return count


def gray32_features(cnp.ndarray[cnp.uint8_t, ndim=3] rgb not None):
    cdef Py_ssize_t h = rgb.shape[0]
    cdef Py_ssize_t w = rgb.shape[1]
    if h < 32 or w < 32:
        raise ValueError(f"frame {w}x{h} too small for 32x32 features")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(32 * 32, dtype=np.float64)
    cdef Py_ssize_t bi, bj, i, j, y0, y1, x0, x1
    cdef long long acc, area
    cdef double v
    for bi in range(32):
        y0 = (bi * h) // 32
        y1 = ((bi + 1) * h) // 32
        for bj in range(32):
            x0 = (bj * w) // 32
            x1 = ((bj + 1) * w) // 32
            acc = 0
            for i in range(y0, y1):
                for j in range(x0, x1):
                    v = (0.299 * rgb[i, j, 0] + 0.587 * rgb[i, j, 1]
                         + 0.114 * rgb[i, j, 2] + 0.5)
                    acc += <unsigned char> v
            area = (y1 - y0) * (x1 - x0)
            out[bi * 32 + bj] = (<double> acc / <double> area) / 255.0
    return out
