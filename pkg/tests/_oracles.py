"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written the slow, obvious way (all-pairs
loops, dense matrices, direct quadrature) so the fast production code has
something independent to be compared against.
"""

import numpy as np

H_SLACK = 1e-12


def brute_force_neighbors(positions, horizon):
    """All-pairs neighbor sets: list of sorted index arrays, one per particle,
    using the same closed-ball inclusion rule as the production search."""
    pos = np.asarray(positions, dtype=np.float64)
    n = pos.shape[0]
    r2max = (horizon * (1.0 + H_SLACK)) ** 2
    sets = []
    block = 512
    for start in range(0, n, block):
        stop = min(start + block, n)
        d = pos[start:stop, None, :] - pos[None, :, :]
        within = (d * d).sum(axis=2) <= r2max
        for k in range(stop - start):
            within[k, start + k] = False
            sets.append(np.nonzero(within[k])[0])
    return sets


def neighbor_sets_from_list(neighbors):
    """Per-row sorted neighbor index arrays from a CSR NeighborList."""
    out = []
    for i in range(neighbors.offsets.shape[0] - 1):
        row = neighbors.indices[neighbors.offsets[i]:neighbors.offsets[i + 1]]
        out.append(np.sort(np.asarray(row, dtype=np.int64)))
    return out


def dense_operator(system):
    """Assemble the linearized operator ``A`` column by column through
    ``matvec`` on unit vectors (3N x 3N)."""
    n = system.n
    a = np.empty((3 * n, 3 * n))
    e = np.zeros((n, 3))
    for col in range(3 * n):
        e.reshape(-1)[col] = 1.0
        a[:, col] = system.matvec(e).reshape(-1)
        e.reshape(-1)[col] = 0.0
    return a


def column_quadrature_displacement(x_probes, params, dry=False, n_quad=200_000):
    """Settlement of the partially submerged column by direct quadrature of
    the axial strain profile that underlies the published settlement formula,

        E eps(s) = F/A + a (gamma_t + gamma_f) + |s| (gamma_t - gamma_f),

    a profile symmetric about the waterline s = 0 (``dry=True`` sets
    gamma_f = 0, which keeps the kink). The closed form integrates this
    profile analytically; integrating it numerically checks that algebra
    without repeating it.
    """
    a, b = params["a"], params["b"]
    gamma_f = 0.0 if dry else params["gamma_f"]
    psi1 = params["gamma_t"] + gamma_f
    psi2 = params["gamma_t"] - gamma_f
    out = []
    for x in np.atleast_1d(np.asarray(x_probes, dtype=np.float64)):
        s = np.linspace(x, b, n_quad)
        strain = params["F"] / params["A"] + a * psi1 + np.abs(s) * psi2
        out.append(np.trapezoid(strain, s) / params["E"])
    return np.asarray(out)


def harmonic_quadrature_displacement(t, params, dry=False, n_quad=20_001):
    """Surface deflection of the harmonically loaded draining column by direct
    quadrature: the axial stress is the surface traction F(t) everywhere, the
    pore pressure magnitude ramps linearly from 0 (drained surface) to
    p_f0(t) = 2 F(t) (1 - t/tau) at depth L, and every slice contributes its
    effective strain:

        u(0, t) = (1/E) integral_0^L [ F(t) + p_f0(t) x / L ] dx
    """
    p = params
    load = p["F0"] * (1.0 - np.cos(p["omega"] * t))
    pf0 = 0.0 if dry else 2.0 * load * max(1.0 - t / p["tau"], 0.0)
    x = np.linspace(0.0, p["L"], n_quad)
    return float(np.trapezoid(load + pf0 * x / p["L"], x) / p["E"])
