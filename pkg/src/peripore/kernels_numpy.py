"""Pure-numpy reference kernels.

Every function here has a numba twin in :mod:`peripore.kernels_numba` with the
same signature and semantics (bond ordering, degenerate-bond detection, sign
conventions). The numpy versions are vectorized over bonds and serve both as
the fallback backend and as the readable statement of what the compiled
kernels compute.

Notation for bond ``b`` connecting source row ``i = rows[b]`` to neighbor
``j = indices[b]`` (influence function is 1 inside the horizon):

    e_b     = dirs_b . (u_j - u_i)                    bond extension
    theta_i = (3 / m_i) sum_b L_b e_b V_j             dilatation
    t_ij + t_ji = 15 mu e_b (1/m_i + 1/m_j)
                + L_b (a_i theta_i + a_j theta_j),    a_i = (3k - 5 mu) / m_i
    f_i     = sum_b (t_ij + t_ji) dirs_b V_j          force density

with the per-bond weights ``w_dev = V_j`` and ``w_dil = L_b V_j`` carried as
arrays so the loops never touch the neighbor volumes directly.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

# A bond whose deformed length falls below this fraction of its reference
# length is reported as degenerate (the deformed direction is undefined).
SINGULAR_REL = 1e-12

_SHELL = [
    (dx, dy, dz)
    for dx in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dz in (-1, 0, 1)
]


def segment_sum(offsets, vals):
    """Sum ``vals`` (1-D or 2-D per-bond data) over the CSR rows described by
    ``offsets``, reducing each segment independently so precision does not
    degrade with the total bond count."""
    n = offsets.shape[0] - 1
    out = np.zeros((n,) + vals.shape[1:], dtype=np.float64)
    nonempty = offsets[1:] > offsets[:-1]
    if np.any(nonempty):
        out[nonempty] = np.add.reduceat(vals, offsets[:-1][nonempty], axis=0)
    return out


def _candidate_pairs(pos, cell, dims, bin_start, order, r2max):
    """Yield (i, j) index arrays of in-range pairs, one 3x3x3 shell at a time."""
    s1 = int(dims[1] * dims[2])
    s2 = int(dims[2])
    for off in _SHELL:
        nb = cell + np.asarray(off, dtype=cell.dtype)
        ok = np.all((nb >= 0) & (nb < dims), axis=1)
        isel = np.nonzero(ok)[0]
        if isel.size == 0:
            continue
        b = nb[isel, 0] * s1 + nb[isel, 1] * s2 + nb[isel, 2]
        start = bin_start[b]
        cnt = bin_start[b + 1] - start
        keep = cnt > 0
        isel, start, cnt = isel[keep], start[keep], cnt[keep]
        if isel.size == 0:
            continue
        total = int(cnt.sum())
        first_out = np.concatenate(([0], np.cumsum(cnt)[:-1]))
        slot = np.arange(total, dtype=np.int64) + np.repeat(start - first_out, cnt)
        jj = order[slot]
        ii = np.repeat(isel, cnt)
        d = pos[jj] - pos[ii]
        m = (d * d).sum(axis=1) <= r2max
        m &= ii != jj
        if m.any():
            yield ii[m], jj[m]


def count_neighbors(pos, cell, dims, bin_start, order, r2max, counts):
    """Fill ``counts[i]`` with the number of particles within sqrt(r2max) of i."""
    counts[:] = 0
    for ii, _ in _candidate_pairs(pos, cell, dims, bin_start, order, r2max):
        counts += np.bincount(ii, minlength=counts.shape[0]).astype(counts.dtype)


def fill_neighbors(pos, cell, dims, bin_start, order, r2max, offsets, indices):
    """Write neighbor ids into ``indices`` grouped by source row (order within
    a row is unspecified; callers canonicalize)."""
    pairs = list(_candidate_pairs(pos, cell, dims, bin_start, order, r2max))
    if not pairs:
        return
    ii = np.concatenate([p[0] for p in pairs])
    jj = np.concatenate([p[1] for p in pairs])
    grouped = np.argsort(ii, kind="stable")
    indices[:] = jj[grouped].astype(indices.dtype)


def matvec(u, offsets, rows, indices, dirs, w_dev, w_dil, inv_m, a, vol, mu,
           e_buf, theta, out):
    """Apply the linearized operator: ``out = -F(u)`` (force units) for the
    bond model evaluated with the frozen directions ``dirs``."""
    du = u[indices] - u[rows]
    e = dirs[:, 0] * du[:, 0] + dirs[:, 1] * du[:, 1] + dirs[:, 2] * du[:, 2]
    e_buf[:] = e
    theta[:] = 3.0 * inv_m * segment_sum(offsets, w_dil * e)
    c15 = (15.0 * mu) * inv_m
    at = a * theta
    s = (c15[rows] + c15[indices]) * w_dev * e + (at[rows] + at[indices]) * w_dil
    f = segment_sum(offsets, s[:, None] * dirs)
    np.multiply(f, -vol[:, None], out=out)


def nonlinear_force(x, u, offsets, rows, indices, ref_len, w_dev, w_dil, inv_m,
                    a, vol, mu, e_buf, dirs_buf, theta, out):
    """Evaluate the internal force with geometric extensions and deformed bond
    directions. Returns the flat index of the first degenerate bond, or -1."""
    y = x + u
    dy = y[indices] - y[rows]
    ylen = np.sqrt((dy * dy).sum(axis=1))
    bad = ylen <= SINGULAR_REL * ref_len
    if bad.any():
        return int(np.nonzero(bad)[0][0])
    np.divide(dy, ylen[:, None], out=dirs_buf)
    e = ylen - ref_len
    e_buf[:] = e
    theta[:] = 3.0 * inv_m * segment_sum(offsets, w_dil * e)
    c15 = (15.0 * mu) * inv_m
    at = a * theta
    s = (c15[rows] + c15[indices]) * w_dev * e + (at[rows] + at[indices]) * w_dil
    f = segment_sum(offsets, s[:, None] * dirs_buf)
    np.multiply(f, vol[:, None], out=out)
    return -1
