# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled mini-batch SGD epoch.

Identical contract to the numpy implementation in fallback.py: flat
float64 parameter vector (row-major weights then bias per layer), batch
schedule given by the caller's permutation, mean-gradient updates, ReLU
hidden units with derivative 0 at exactly 0, sigmoid output.
"""

import numpy as np

from libc.math cimport exp

NAME = "cython"

MAX_LAYERS = 8  # generous bound; the trainer builds at most 4 layers


def sgd_epoch(double[:, ::1] X, double[::1] y, long long[::1] perm,
              double[::1] params, long long[::1] sizes,
              double lr, Py_ssize_t batch_size):
    cdef Py_ssize_t n = perm.shape[0]
    cdef Py_ssize_t n_layers = sizes.shape[0] - 1
    cdef Py_ssize_t woff[8]
    cdef Py_ssize_t boff[8]
    cdef Py_ssize_t offset = 0
    cdef Py_ssize_t l, i, j, k, m, start, r, total
    cdef Py_ssize_t fin, fout, max_width
    cdef double s, z, p

    if n_layers < 1 or n_layers > 8:
        raise ValueError("unsupported layer count")
    if sizes[n_layers] != 1:
        raise ValueError("output layer must have exactly one unit")
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    max_width = 0
    for l in range(n_layers + 1):
        if sizes[l] < 1:
            raise ValueError("layer sizes must be positive")
        if sizes[l] > max_width:
            max_width = sizes[l]
    for l in range(n_layers):
        woff[l] = offset
        offset += sizes[l] * sizes[l + 1]
        boff[l] = offset
        offset += sizes[l + 1]
    total = offset
    if params.shape[0] != total:
        raise ValueError("parameter vector length does not match layer sizes")
    if X.shape[1] != sizes[0]:
        raise ValueError("input dimension does not match first layer")

    acts_arr = np.empty((n_layers + 1, batch_size, max_width), dtype=np.float64)
    zs_arr = np.empty((n_layers, batch_size, max_width), dtype=np.float64)
    delta_arr = np.empty((batch_size, max_width), dtype=np.float64)
    delta_prev_arr = np.empty((batch_size, max_width), dtype=np.float64)
    grad_arr = np.empty(total, dtype=np.float64)
    cdef double[:, :, ::1] acts = acts_arr
    cdef double[:, :, ::1] zs = zs_arr
    cdef double[:, ::1] delta = delta_arr
    cdef double[:, ::1] delta_prev = delta_prev_arr
    cdef double[:, ::1] swap
    cdef double[::1] grad = grad_arr

    for start in range(0, n, batch_size):
        m = n - start
        if m > batch_size:
            m = batch_size
        fin = sizes[0]
        for i in range(m):
            r = perm[start + i]
            for j in range(fin):
                acts[0, i, j] = X[r, j]
        for l in range(n_layers):
            fin = sizes[l]
            fout = sizes[l + 1]
            for i in range(m):
                for k in range(fout):
                    s = params[boff[l] + k]
                    for j in range(fin):
                        s += acts[l, i, j] * params[woff[l] + j * fout + k]
                    zs[l, i, k] = s
                    if l == n_layers - 1 or s > 0.0:
                        acts[l + 1, i, k] = s
                    else:
                        acts[l + 1, i, k] = 0.0
        for i in range(m):
            z = zs[n_layers - 1, i, 0]
            p = 1.0 / (1.0 + exp(-z))
            delta[i, 0] = (p - y[perm[start + i]]) / m
        for l in range(n_layers - 1, -1, -1):
            fin = sizes[l]
            fout = sizes[l + 1]
            for j in range(fin):
                for k in range(fout):
                    s = 0.0
                    for i in range(m):
                        s += acts[l, i, j] * delta[i, k]
                    grad[woff[l] + j * fout + k] = s
            for k in range(fout):
                s = 0.0
                for i in range(m):
                    s += delta[i, k]
                grad[boff[l] + k] = s
            if l > 0:
                for i in range(m):
                    for j in range(fin):
                        s = 0.0
                        for k in range(fout):
                            s += delta[i, k] * params[woff[l] + j * fout + k]
                        if zs[l - 1, i, j] > 0.0:
                            delta_prev[i, j] = s
                        else:
                            delta_prev[i, j] = 0.0
                swap = delta
                delta = delta_prev
                delta_prev = swap
        for j in range(total):
            params[j] -= lr * grad[j]
