"""Compiled kernels (numba ``@njit``, serial, cached).

Signature-for-signature twins of :mod:`peripore.kernels_numpy`; see that
module for the bond-model formulas. These loops are deliberately serial so a
given input always produces bit-identical output, and they accumulate per
source row only (no scattered writes), which keeps them correct should they
ever be parallelized.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"

SINGULAR_REL = 1e-12


@njit(cache=True)
def segment_sum(offsets, vals):
    n = offsets.shape[0] - 1
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for b in range(offsets[i], offsets[i + 1]):
            acc += vals[b]
        out[i] = acc
    return out


@njit(cache=True)
def count_neighbors(pos, cell, dims, bin_start, order, r2max, counts):
    n = pos.shape[0]
    s1 = dims[1] * dims[2]
    s2 = dims[2]
    for i in range(n):
        x0 = pos[i, 0]
        x1 = pos[i, 1]
        x2 = pos[i, 2]
        cnt = 0
        for a0 in range(max(0, cell[i, 0] - 1), min(dims[0], cell[i, 0] + 2)):
            for a1 in range(max(0, cell[i, 1] - 1), min(dims[1], cell[i, 1] + 2)):
                for a2 in range(max(0, cell[i, 2] - 1), min(dims[2], cell[i, 2] + 2)):
                    b = a0 * s1 + a1 * s2 + a2
                    for k in range(bin_start[b], bin_start[b + 1]):
                        j = order[k]
                        if j == i:
                            continue
                        d0 = pos[j, 0] - x0
                        d1 = pos[j, 1] - x1
                        d2 = pos[j, 2] - x2
                        if d0 * d0 + d1 * d1 + d2 * d2 <= r2max:
                            cnt += 1
        counts[i] = cnt


@njit(cache=True)
def fill_neighbors(pos, cell, dims, bin_start, order, r2max, offsets, indices):
    n = pos.shape[0]
    s1 = dims[1] * dims[2]
    s2 = dims[2]
    for i in range(n):
        x0 = pos[i, 0]
        x1 = pos[i, 1]
        x2 = pos[i, 2]
        w = offsets[i]
        for a0 in range(max(0, cell[i, 0] - 1), min(dims[0], cell[i, 0] + 2)):
            for a1 in range(max(0, cell[i, 1] - 1), min(dims[1], cell[i, 1] + 2)):
                for a2 in range(max(0, cell[i, 2] - 1), min(dims[2], cell[i, 2] + 2)):
                    b = a0 * s1 + a1 * s2 + a2
                    for k in range(bin_start[b], bin_start[b + 1]):
                        j = order[k]
                        if j == i:
                            continue
                        d0 = pos[j, 0] - x0
                        d1 = pos[j, 1] - x1
                        d2 = pos[j, 2] - x2
                        if d0 * d0 + d1 * d1 + d2 * d2 <= r2max:
                            indices[w] = j
                            w += 1


@njit(cache=True)
def matvec(u, offsets, rows, indices, dirs, w_dev, w_dil, inv_m, a, vol, mu,
           e_buf, theta, out):
    n = offsets.shape[0] - 1
    for i in range(n):
        u0 = u[i, 0]
        u1 = u[i, 1]
        u2 = u[i, 2]
        acc = 0.0
        for b in range(offsets[i], offsets[i + 1]):
            j = indices[b]
            e = (dirs[b, 0] * (u[j, 0] - u0)
                 + dirs[b, 1] * (u[j, 1] - u1)
                 + dirs[b, 2] * (u[j, 2] - u2))
            e_buf[b] = e
            acc += w_dil[b] * e
        theta[i] = 3.0 * inv_m[i] * acc
    mu15 = 15.0 * mu
    for i in range(n):
        f0 = 0.0
        f1 = 0.0
        f2 = 0.0
        ci = mu15 * inv_m[i]
        ati = a[i] * theta[i]
        for b in range(offsets[i], offsets[i + 1]):
            j = indices[b]
            s = ((ci + mu15 * inv_m[j]) * w_dev[b] * e_buf[b]
                 + (ati + a[j] * theta[j]) * w_dil[b])
            f0 += s * dirs[b, 0]
            f1 += s * dirs[b, 1]
            f2 += s * dirs[b, 2]
        out[i, 0] = -vol[i] * f0
        out[i, 1] = -vol[i] * f1
        out[i, 2] = -vol[i] * f2


@njit(cache=True)
def nonlinear_force(x, u, offsets, rows, indices, ref_len, w_dev, w_dil, inv_m,
                    a, vol, mu, e_buf, dirs_buf, theta, out):
    n = offsets.shape[0] - 1
    for i in range(n):
        y0 = x[i, 0] + u[i, 0]
        y1 = x[i, 1] + u[i, 1]
        y2 = x[i, 2] + u[i, 2]
        acc = 0.0
        for b in range(offsets[i], offsets[i + 1]):
            j = indices[b]
            d0 = x[j, 0] + u[j, 0] - y0
            d1 = x[j, 1] + u[j, 1] - y1
            d2 = x[j, 2] + u[j, 2] - y2
            ylen = np.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            if ylen <= SINGULAR_REL * ref_len[b]:
                return b
            dirs_buf[b, 0] = d0 / ylen
            dirs_buf[b, 1] = d1 / ylen
            dirs_buf[b, 2] = d2 / ylen
            e = ylen - ref_len[b]
            e_buf[b] = e
            acc += w_dil[b] * e
        theta[i] = 3.0 * inv_m[i] * acc
    mu15 = 15.0 * mu
    for i in range(n):
        f0 = 0.0
        f1 = 0.0
        f2 = 0.0
        ci = mu15 * inv_m[i]
        ati = a[i] * theta[i]
        for b in range(offsets[i], offsets[i + 1]):
            j = indices[b]
            s = ((ci + mu15 * inv_m[j]) * w_dev[b] * e_buf[b]
                 + (ati + a[j] * theta[j]) * w_dil[b])
            f0 += s * dirs_buf[b, 0]
            f1 += s * dirs_buf[b, 1]
            f2 += s * dirs_buf[b, 2]
        out[i, 0] = vol[i] * f0
        out[i, 1] = vol[i] * f1
        out[i, 2] = vol[i] * f2
    return -1
