# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled compositing kernel; semantics match ``_compose_py.compose_tile``."""

from libc.math cimport exp

import numpy as np


def compose_tile(double[:, :, ::1] rgb, double[:, ::1] wsum,
                 double[::1] xs, double[::1] ys,
                 double[:, ::1] means, double[:, ::1] inv_abc,
                 double[::1] alphas, double[:, ::1] colors,
                 double alpha_cutoff, double alpha_clamp, double t_stop):
    cdef Py_ssize_t h = ys.shape[0]
    cdef Py_ssize_t w = xs.shape[0]
    cdef Py_ssize_t k = means.shape[0]
    cdef Py_ssize_t x, y, i
    cdef double dx, dy, q, a, contrib, trans

    if k == 0:
        return
    for y in range(h):
        for x in range(w):
            trans = 1.0
            for i in range(k):
                if trans < t_stop:
                    break
                dx = xs[x] - means[i, 0]
                dy = ys[y] - means[i, 1]
                q = (inv_abc[i, 0] * dx * dx
                     + 2.0 * inv_abc[i, 1] * dx * dy
                     + inv_abc[i, 2] * dy * dy)
                a = alphas[i] * exp(-0.5 * q)
                if a > alpha_clamp:
                    a = alpha_clamp
                if a < alpha_cutoff:
                    continue
                contrib = trans * a
                rgb[y, x, 0] += contrib * colors[i, 0]
                rgb[y, x, 1] += contrib * colors[i, 1]
                rgb[y, x, 2] += contrib * colors[i, 2]
                wsum[y, x] += contrib
                trans *= 1.0 - a
