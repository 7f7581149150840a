# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled patch gather/scatter for stride-1 "same" convolutions (channels last)."""
import numpy as np
from cython cimport floating


cdef void _im2col(const floating[:, :, :, ::1] x, floating[:, :, :, ::1] out, int kh, int kw) noexcept nogil:
    cdef Py_ssize_t b = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef int pt = (kh - 1) // 2, pl = (kw - 1) // 2
    cdef Py_ssize_t n, i, j, ch, si, sj, base
    cdef int di, dj
    for n in range(b):
        for i in range(h):
            for j in range(w):
                base = 0
                for di in range(kh):
                    si = i + di - pt
                    for dj in range(kw):
                        sj = j + dj - pl
                        if 0 <= si < h and 0 <= sj < w:
                            for ch in range(c):
                                out[n, i, j, base + ch] = x[n, si, sj, ch]
                        else:
                            for ch in range(c):
                                out[n, i, j, base + ch] = 0
                        base += c


cdef void _col2im(const floating[:, :, :, ::1] cols, floating[:, :, :, ::1] out, int kh, int kw) noexcept nogil:
    cdef Py_ssize_t b = out.shape[0], h = out.shape[1], w = out.shape[2], c = out.shape[3]
    cdef int pt = (kh - 1) // 2, pl = (kw - 1) // 2
    cdef Py_ssize_t n, i, j, ch, si, sj, base
    cdef int di, dj
    for n in range(b):
        for i in range(h):
            for j in range(w):
                base = 0
                for di in range(kh):
                    si = i + di - pt
                    for dj in range(kw):
                        sj = j + dj - pl
                        if 0 <= si < h and 0 <= sj < w:
                            for ch in range(c):
                                out[n, si, sj, ch] += cols[n, i, j, base + ch]
                        base += c


def im2col_f32(const float[:, :, :, ::1] x, int kh, int kw):
    out = np.empty((x.shape[0], x.shape[1], x.shape[2], kh * kw * x.shape[3]), dtype=np.float32)
    cdef float[:, :, :, ::1] view = out
    _im2col(x, view, kh, kw)
    return out


def im2col_f64(const double[:, :, :, ::1] x, int kh, int kw):
    out = np.empty((x.shape[0], x.shape[1], x.shape[2], kh * kw * x.shape[3]), dtype=np.float64)
    cdef double[:, :, :, ::1] view = out
    _im2col(x, view, kh, kw)
    return out


def col2im_f32(const float[:, :, :, ::1] cols, tuple shape, int kh, int kw):
    out = np.zeros(shape, dtype=np.float32)
    cdef float[:, :, :, ::1] view = out
    _col2im(cols, view, kh, kw)
    return out


def col2im_f64(const double[:, :, :, ::1] cols, tuple shape, int kh, int kw):
    out = np.zeros(shape, dtype=np.float64)
    cdef double[:, :, :, ::1] view = out
    _col2im(cols, view, kh, kw)
    return out
