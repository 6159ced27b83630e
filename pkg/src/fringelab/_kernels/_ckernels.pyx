# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-pixel kernels; numerically identical twins of ``_fallback``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, floor, sqrt, fabs, M_PI

cnp.import_array()


cdef inline double _wrap(double u) noexcept nogil:
    return u - M_PI * ceil(u / M_PI - 0.5)


def wrap(u):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat
    arr = np.array(u, dtype=np.float64, copy=True)
    flat = arr.reshape(-1)
    cdef Py_ssize_t i, n = flat.shape[0]
    cdef double[::1] v = flat
    with nogil:
        for i in range(n):
            v[i] = _wrap(v[i])
    return arr if arr.ndim else float(arr)


def wrap_vector(vx, vy):
    ax = np.array(vx, dtype=np.float64, copy=True)
    ay = np.array(vy, dtype=np.float64, copy=True)
    cdef double[::1] x = ax.reshape(-1)
    cdef double[::1] y = ay.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double m, s
    with nogil:
        for i in range(n):
            m = sqrt(x[i] * x[i] + y[i] * y[i])
            if m > 0.0:
                s = _wrap(m) / m
            else:
                s = 0.0
            x[i] = x[i] * s
            y[i] = y[i] * s
    return ax, ay


def bilinear_periodic(tile, pos):
    cdef const double[::1] t = np.ascontiguousarray(tile, dtype=np.float64)
    p_arr = np.ascontiguousarray(pos, dtype=np.float64)
    out = np.empty_like(p_arr)
    cdef const double[::1] p = p_arr.reshape(-1)
    cdef double[::1] o = out.reshape(-1)
    cdef Py_ssize_t i, m = p.shape[0]
    cdef long n = t.shape[0]
    cdef long k0, k1
    cdef double f, w
    with nogil:
        for i in range(m):
            f = floor(p[i])
            w = p[i] - f
            k0 = (<long>f) % n
            if k0 < 0:
                k0 += n
            k1 = k0 + 1
            if k1 == n:
                k1 = 0
            o[i] = (1.0 - w) * t[k0] + w * t[k1]
    return out


def wrapped_gradient(u):
    cdef const double[:, ::1] a = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1]
    gx_arr = np.empty((h, w))
    gy_arr = np.empty((h, w))
    worst_arr = np.zeros((h, w))
    cdef double[:, ::1] gx = gx_arr
    cdef double[:, ::1] gy = gy_arr
    cdef double[:, ::1] worst = worst_arr
    cdef Py_ssize_t i, j
    cdef double dl, dr, s
    with nogil:
        for i in range(h):
            for j in range(w):
                if j == 0:
                    dr = _wrap(a[i, 1] - a[i, 0])
                    gx[i, j] = dr
                    s = fabs(dr)
                elif j == w - 1:
                    dl = _wrap(a[i, j] - a[i, j - 1])
                    gx[i, j] = dl
                    s = fabs(dl)
                else:
                    dl = _wrap(a[i, j] - a[i, j - 1])
                    dr = _wrap(a[i, j + 1] - a[i, j])
                    gx[i, j] = 0.5 * (dl + dr)
                    s = fabs(dl) if fabs(dl) > fabs(dr) else fabs(dr)
                worst[i, j] = s
                if i == 0:
                    dr = _wrap(a[1, j] - a[0, j])
                    gy[i, j] = dr
                    s = fabs(dr)
                elif i == h - 1:
                    dl = _wrap(a[i, j] - a[i - 1, j])
                    gy[i, j] = dl
                    s = fabs(dl)
                else:
                    dl = _wrap(a[i, j] - a[i - 1, j])
                    dr = _wrap(a[i + 1, j] - a[i, j])
                    gy[i, j] = 0.5 * (dl + dr)
                    s = fabs(dl) if fabs(dl) > fabs(dr) else fabs(dr)
                if s > worst[i, j]:
                    worst[i, j] = s
    return gx_arr, gy_arr, worst_arr
