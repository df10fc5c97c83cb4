# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: event warp/splat accumulation and the gradient loss.

Mirrors `reference.py`; keep the two in lockstep.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"


def accumulate(xs, ys, ts, double t0, double theta_x, double theta_y,
               double theta_z, double theta_r, double cx, double cy,
               int width, int height):
    """Warp events back to t0 and splat them with bilinear weights.

    Same contract as the reference implementation: returns
    (sum_w, sum_wt, sum_wt2, dropped).
    """
    cdef double[::1] x_arr = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] y_arr = np.ascontiguousarray(ys, dtype=np.float64)
    cdef double[::1] t_arr = np.ascontiguousarray(ts, dtype=np.float64)
    cdef Py_ssize_t n = x_arr.shape[0]

    sum_w = np.zeros((height, width), dtype=np.float64)
    sum_wt = np.zeros((height, width), dtype=np.float64)
    sum_wt2 = np.zeros((height, width), dtype=np.float64)
    cdef double[:, ::1] w_img = sum_w
    cdef double[:, ::1] wt_img = sum_wt
    cdef double[:, ::1] wt2_img = sum_wt2

    cdef Py_ssize_t i, x0, y0
    cdef long dropped = 0
    cdef double dt, dx, dy, u, v, fx, fy, w, dt2
    cdef double w00, w10, w01, w11

    for i in range(n):
        dt = t_arr[i] - t0
        dx = x_arr[i] - cx
        dy = y_arr[i] - cy
        u = x_arr[i] - dt * (theta_x + theta_z * dx - theta_r * dy)
        v = y_arr[i] - dt * (theta_y + theta_z * dy + theta_r * dx)
        if not (u >= 0.0 and u <= width - 1.0 and v >= 0.0 and v <= height - 1.0):
            dropped += 1
            continue
        x0 = <Py_ssize_t> floor(u)
        if x0 > width - 2:
            x0 = width - 2
        y0 = <Py_ssize_t> floor(v)
        if y0 > height - 2:
            y0 = height - 2
        fx = u - x0
        fy = v - y0
        w00 = (1.0 - fx) * (1.0 - fy)
        w10 = fx * (1.0 - fy)
        w01 = (1.0 - fx) * fy
        w11 = fx * fy
        dt2 = dt * dt

        w_img[y0, x0] += w00
        wt_img[y0, x0] += w00 * dt
        wt2_img[y0, x0] += w00 * dt2

        w_img[y0, x0 + 1] += w10
        wt_img[y0, x0 + 1] += w10 * dt
        wt2_img[y0, x0 + 1] += w10 * dt2

        w_img[y0 + 1, x0] += w01
        wt_img[y0 + 1, x0] += w01 * dt
        wt2_img[y0 + 1, x0] += w01 * dt2

        w_img[y0 + 1, x0 + 1] += w11
        wt_img[y0 + 1, x0 + 1] += w11 * dt
        wt2_img[y0 + 1, x0 + 1] += w11 * dt2

    return sum_w, sum_wt, sum_wt2, int(dropped)


def gradient_loss(mean_t, support):
    """Mean over supported pixels of the gradient norm of mean_t.

    Same stencil as the reference implementation: central differences in
    the interior, one-sided at image borders, components skipped where a
    needed neighbor is unsupported.
    """
    cdef double[:, ::1] m = np.ascontiguousarray(mean_t, dtype=np.float64)
    cdef cnp.uint8_t[:, ::1] s = np.ascontiguousarray(support, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0]
    cdef Py_ssize_t w = m.shape[1]
    cdef Py_ssize_t x, y
    cdef long n_support = 0
    cdef double total = 0.0
    cdef double gx, gy

    for y in range(h):
        for x in range(w):
            if not s[y, x]:
                continue
            n_support += 1
            gx = 0.0
            gy = 0.0
            if 0 < x < w - 1:
                if s[y, x - 1] and s[y, x + 1]:
                    gx = (m[y, x + 1] - m[y, x - 1]) * 0.5
            elif x == 0 and w > 1:
                if s[y, 1]:
                    gx = m[y, 1] - m[y, 0]
            elif x == w - 1 and w > 1:
                if s[y, w - 2]:
                    gx = m[y, w - 1] - m[y, w - 2]
            if 0 < y < h - 1:
                if s[y - 1, x] and s[y + 1, x]:
                    gy = (m[y + 1, x] - m[y - 1, x]) * 0.5
            elif y == 0 and h > 1:
                if s[1, x]:
                    gy = m[1, x] - m[0, x]
            elif y == h - 1 and h > 1:
                if s[h - 2, x]:
                    gy = m[h - 1, x] - m[h - 2, x]
            total += sqrt(gx * gx + gy * gy)

    if n_support == 0:
        return 0.0
    return total / n_support
