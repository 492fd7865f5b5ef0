"""Quasistatic equilibrium solver.

The assembled linear operator is ``A = -dF/du`` for the bond force ``F``
evaluated with frozen (reference) bond directions and linearized extensions.
``A`` is symmetric positive semidefinite -- it is the Hessian of the quadratic
bond energy

    W(u) = sum_i V_i [ k theta_i^2 / 2 + (15 mu / 2 m_i)
                       sum_j (e_ij - theta_i |xi| / 3)^2 V_j ]

so equilibrium ``A u = b`` is solved matrix-free with Jacobi-preconditioned
conjugate gradients; prescribed displacements are removed by lifting
(``b - A u_prescribed`` on the free degrees of freedom). Pore pressure and all
external loads only enter ``b``.

With ``geometric=True`` the bond directions and extensions follow the
deformed configuration: each outer iteration re-freezes the directions at the
current deformed state, solves the resulting linear correction, and repeats
until the true nonlinear residual drops below tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import get_kernels
from .discretization import NeighborList, ParticleSet, row_sum, weighted_volume
from .errors import (ConfigurationError, NonConvergenceError, SingularBondError,
                     SingularOperatorError, SolveRefusalError)
from .fields import evaluate_body_force, evaluate_pressure, scale_factor
from .material import Material, peridynamic_pressure


def _norm(x: np.ndarray) -> float:
    return float(np.sqrt(np.vdot(x, x).real))


# ---------------------------------------------------------------------------
# assembled operator
# ---------------------------------------------------------------------------

@dataclass
class BondSystem:
    """Kernel-ready arrays for one particle set + material pair."""

    particles: ParticleSet
    neighbors: NeighborList
    material: Material
    gamma: float                 # effective-stress factor for pore pressure
    m: np.ndarray                # (N,) weighted volumes
    inv_m: np.ndarray
    a: np.ndarray                # (3k - 5 mu) / m_i
    w_dev: np.ndarray            # (M,) V_j
    w_dil: np.ndarray            # (M,) |xi| V_j
    kernels: object
    _e_buf: np.ndarray = field(repr=False, default=None)
    _theta: np.ndarray = field(repr=False, default=None)
    _dirs_buf: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.particles.n

    @property
    def n_dof(self) -> int:
        return 3 * self.particles.n

    def matvec(self, u: np.ndarray, out: np.ndarray | None = None,
               dirs: np.ndarray | None = None) -> np.ndarray:
        """``A u`` (equals ``-F(u)``) with bond directions frozen at ``dirs``
        (reference directions by default)."""
        nb = self.neighbors
        if out is None:
            out = np.empty_like(u)
        self.kernels.matvec(
            u, nb.offsets, nb.rows, nb.indices,
            nb.dirs if dirs is None else dirs,
            self.w_dev, self.w_dil, self.inv_m, self.a,
            self.particles.cell_volumes, self.material.shear_modulus,
            self._e_buf, self._theta, out)
        return out

    def force(self, u: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """Internal force with geometric extensions and deformed directions."""
        nb = self.neighbors
        if out is None:
            out = np.empty_like(u)
        if self._dirs_buf is None:
            self._dirs_buf = np.empty_like(nb.dirs)
        bad = self.kernels.nonlinear_force(
            self.particles.positions, u, nb.offsets, nb.rows, nb.indices,
            nb.ref_len, self.w_dev, self.w_dil, self.inv_m, self.a,
            self.particles.cell_volumes, self.material.shear_modulus,
            self._e_buf, self._dirs_buf, self._theta, out)
        if bad >= 0:
            i = int(np.searchsorted(nb.offsets, bad, side="right") - 1)
            raise SingularBondError(i, int(nb.indices[bad]))
        return out

    def diagonal(self, dirs: np.ndarray | None = None) -> np.ndarray:
        """Diagonal of ``A`` (for Jacobi preconditioning); entries of rows
        that carry no stiffness are replaced by 1. Exact when no two bonds
        share the same endpoint pair; with mirror-image neighborhoods the
        dilatational cross products of doubled pairs are missed, which only
        softens the preconditioner on the (constrained) in-plane axes."""
        nb = self.neighbors
        d = nb.dirs if dirs is None else dirs
        vol = self.particles.cell_volumes
        r, c = nb.rows, nb.indices
        c15 = (15.0 * self.material.shear_modulus) * self.inv_m
        g_dev = (c15[r] + c15[c]) * self.w_dev
        g_dil = 3.0 * self.a[c] * self.inv_m[c] * self.w_dil ** 2 / vol[c]
        self_dil = 3.0 * self.a * self.inv_m
        out = np.empty((self.n, 3))
        for ax in range(3):
            da2 = d[:, ax] ** 2
            t_dev = row_sum(nb.offsets, g_dev * da2)
            t_dil = row_sum(nb.offsets, g_dil * da2)
            s_ax = row_sum(nb.offsets, self.w_dil * d[:, ax])
            out[:, ax] = vol * t_dev + vol ** 2 * t_dil + self_dil * vol * s_ax ** 2
        return np.where(out > 0.0, out, 1.0)

    def pore_forces(self, pore_pressure: np.ndarray,
                    dirs: np.ndarray | None = None) -> np.ndarray:
        """Equivalent nodal forces of a pore-pressure field:

            F_i = -3 gamma V_i sum_j (p_i / m_i + p_j / m_j) |xi| V_j M

        (positive pressure pushes bonded particles apart)."""
        nb = self.neighbors
        d = nb.dirs if dirs is None else dirs
        s = pore_pressure * self.inv_m
        w = (s[nb.rows] + s[nb.indices]) * self.w_dil
        f = row_sum(nb.offsets, w[:, None] * d)
        return (-3.0 * self.gamma) * self.particles.cell_volumes[:, None] * f

    def last_dilatation(self) -> np.ndarray:
        """Dilatation computed by the most recent matvec/force call."""
        return self._theta.copy()


def build_bond_system(particles: ParticleSet, neighbors: NeighborList,
                      material: Material, gamma: float = 1.0,
                      backend: str | None = None) -> BondSystem:
    m = weighted_volume(particles, neighbors)
    if np.any(m <= 0.0):
        i = int(np.argmin(m))
        raise SolveRefusalError(
            f"particle {i} at {particles.positions[i].tolist()} has no bonds inside "
            f"the horizon (weighted volume is zero); refusing to build a singular operator")
    inv_m = 1.0 / m
    vol = particles.cell_volumes
    w_dev = vol[neighbors.indices].astype(np.float64)
    w_dil = neighbors.ref_len * w_dev
    a = (3.0 * material.bulk_modulus - 5.0 * material.shear_modulus) * inv_m
    n_bonds = neighbors.n_bonds
    return BondSystem(
        particles=particles, neighbors=neighbors, material=material, gamma=float(gamma),
        m=m, inv_m=inv_m, a=a, w_dev=w_dev, w_dil=w_dil,
        kernels=get_kernels(backend),
        _e_buf=np.empty(n_bonds), _theta=np.empty(particles.n))


# ---------------------------------------------------------------------------
# boundary conditions
# ---------------------------------------------------------------------------

@dataclass
class BoundaryConditions:
    """Per-dof prescribed displacements and applied point forces."""

    fixed: np.ndarray    # (N,3) bool
    values: np.ndarray   # (N,3) prescribed displacement where fixed
    forces: np.ndarray   # (N,3) applied external force

    @classmethod
    def empty(cls, n: int) -> "BoundaryConditions":
        return cls(fixed=np.zeros((n, 3), dtype=bool),
                   values=np.zeros((n, 3)),
                   forces=np.zeros((n, 3)))

    def fix(self, idx, axis: int | None = None, value: float = 0.0) -> "BoundaryConditions":
        """Prescribe ``u[idx, axis] = value`` (all axes when ``axis`` is None).
        Re-fixing a dof to a different value, or fixing an already loaded dof,
        is rejected."""
        axes = range(3) if axis is None else (axis,)
        for ax in axes:
            if np.any(self.fixed[idx, ax] & (self.values[idx, ax] != value)):
                raise ConfigurationError(
                    f"a particle is prescribed two different displacements on axis {ax}")
            if np.any(self.forces[idx, ax] != 0.0):
                raise ConfigurationError(
                    f"a particle with an applied force on axis {ax} cannot also have "
                    f"its displacement prescribed on that axis")
            self.fixed[idx, ax] = True
            self.values[idx, ax] = value
        return self

    def load(self, idx, vector, skip_fixed: bool = False) -> "BoundaryConditions":
        """Accumulate an external point force on each particle in ``idx``.

        Loading a dof whose displacement is prescribed is rejected unless
        ``skip_fixed`` is set, in which case those force components are
        dropped (they would be absorbed by the constraint reaction anyway, so
        the solution is unchanged — used for loads straddling symmetry
        planes)."""
        idx = np.atleast_1d(np.asarray(idx))
        if idx.dtype == bool:
            idx = np.nonzero(idx)[0]
        add = np.broadcast_to(np.asarray(vector, dtype=np.float64), (idx.shape[0], 3)).copy()
        hit = self.fixed[idx] & (add != 0.0)
        if np.any(hit):
            if not skip_fixed:
                ax = int(np.nonzero(hit.any(axis=0))[0][0])
                raise ConfigurationError(
                    f"a particle with prescribed displacement on axis {ax} cannot also "
                    f"carry an applied force on that axis")
            add[self.fixed[idx]] = 0.0
        np.add.at(self.forces, idx, add)
        return self


def external_forces(system: BondSystem, bc: BoundaryConditions,
                    body_force=None, pore_field=None, t: float = 0.0,
                    dirs: np.ndarray | None = None, load_scale=None):
    """Total applied load: point forces (scaled by the load schedule at ``t``)
    + body force * cell volume + the equivalent forces of the pore-pressure
    field. Returns ``(b, pf)``."""
    x = system.particles.positions
    b = scale_factor(load_scale, t) * bc.forces \
        + evaluate_body_force(body_force, x) * system.particles.cell_volumes[:, None]
    pf = None
    if pore_field is not None:
        pf = evaluate_pressure(pore_field, x, t)
        b += system.pore_forces(pf, dirs)
    return b, pf


def apply_bcs(system: BondSystem, bc: BoundaryConditions, b: np.ndarray):
    """Lift prescribed displacements out of ``A u = b``: returns
    ``(b_eff, u_prescribed)`` with ``b_eff = b - A u_prescribed`` and zeros on
    the fixed degrees of freedom."""
    u_presc = np.zeros_like(b)
    u_presc[bc.fixed] = bc.values[bc.fixed]
    if np.any(u_presc != 0.0):
        b_eff = b - system.matvec(u_presc)
    else:
        b_eff = b.copy()
    b_eff[bc.fixed] = 0.0
    return b_eff, u_presc


def residual(system: BondSystem, u: np.ndarray, bc: BoundaryConditions,
             body_force=None, pore_field=None, t: float = 0.0,
             geometric: bool = False, load_scale=None):
    """Out-of-balance force ``F(u) + b`` with fixed dofs masked to zero.
    Returns ``(r, norm)`` where the norm is relative to the external load
    (absolute when the load vanishes), so ``u = 0`` under any load gives 1."""
    if geometric:
        f_int = system.force(u)
        dirs = system._dirs_buf
    else:
        f_int = -system.matvec(u)
        dirs = None
    b, _ = external_forces(system, bc, body_force, pore_field, t, dirs, load_scale)
    r = f_int + b
    r[bc.fixed] = 0.0
    free_load = np.where(bc.fixed, 0.0, b)
    bnorm = _norm(free_load)
    rnorm = _norm(r)
    return r, (rnorm / bnorm if bnorm > 0.0 else rnorm)


# ---------------------------------------------------------------------------
# conjugate gradients
# ---------------------------------------------------------------------------

def conjugate_gradient(apply_op, b: np.ndarray, x0: np.ndarray, diag: np.ndarray,
                       fixed: np.ndarray, tol: float = 1e-8,
                       max_iter: int | None = None):
    """Jacobi-preconditioned CG on the free dofs (``fixed`` entries of the
    iterates are pinned to zero). Convergence is ``|r| <= tol |b|``. Returns
    ``(x, residual_history)``."""
    if max_iter is None:
        max_iter = max(1000, 3 * b.size)
    diag = np.where(fixed, 1.0, diag)
    x = x0.copy()
    x[fixed] = 0.0
    bnorm = _norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), [0.0]
    q = np.empty_like(b)
    apply_op(x, q)
    q[fixed] = 0.0
    r = b - q
    hist = [_norm(r) / bnorm]
    if hist[-1] <= tol:
        return x, hist
    z = r / diag
    p = z.copy()
    rz = float(np.vdot(r, z).real)
    for _ in range(max_iter):
        apply_op(p, q)
        q[fixed] = 0.0
        pq = float(np.vdot(p, q).real)
        if pq <= 0.0:
            if hist[-1] <= tol:
                break
            raise SingularOperatorError(
                "conjugate gradients hit a direction with p.Ap <= 0; the free "
                "degrees of freedom admit zero-energy motion (body is underconstrained)")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        hist.append(_norm(r) / bnorm)
        if hist[-1] <= tol:
            break
        z = r / diag
        rz_new = float(np.vdot(r, z).real)
        p *= rz_new / rz
        p += z
        rz = rz_new
    else:
        raise NonConvergenceError(
            f"conjugate gradients did not reach |r|/|b| <= {tol:g} in {max_iter} "
            f"iterations (last residual {hist[-1]:.3e})", hist)
    return x, hist


def solve_linear(system: BondSystem, bc: BoundaryConditions, b: np.ndarray,
                 x0: np.ndarray | None = None, dirs: np.ndarray | None = None,
                 diag: np.ndarray | None = None, tol: float = 1e-8,
                 max_iter: int | None = None):
    """Solve ``A u = b`` subject to the prescribed displacements; returns
    ``(u, cg_history)``."""
    b_eff, u_presc = apply_bcs(system, bc, b)
    if diag is None:
        diag = system.diagonal(dirs)
    start = np.zeros_like(b) if x0 is None else x0 - u_presc

    def apply_op(v, out):
        system.matvec(v, out=out, dirs=dirs)

    y, hist = conjugate_gradient(apply_op, b_eff, start, diag, bc.fixed,
                                 tol=tol, max_iter=max_iter)
    return y + u_presc, hist


# ---------------------------------------------------------------------------
# quasistatic driver
# ---------------------------------------------------------------------------

@dataclass
class StepInfo:
    time: float
    cg_iterations: int
    outer_iterations: int
    residual: float


@dataclass
class QuasistaticResult:
    u: np.ndarray
    theta: np.ndarray
    pressure: np.ndarray      # solid + pore pressure, -k theta + gamma p_f
    pore_pressure: np.ndarray
    steps: list[StepInfo]


def solve_quasistatic(system: BondSystem, bc: BoundaryConditions,
                      body_force=None, pore_field=None, times=None,
                      load_scale=None, geometric: bool = False, tol: float = 1e-8,
                      max_iter: int | None = None, max_outer: int = 50,
                      on_step=None) -> QuasistaticResult:
    """March the load program through ``times`` (a single static solve when
    None), warm-starting each step from the previous displacement. ``on_step``
    is called as ``on_step(k, t, u, theta, pf)`` after each converged step."""
    from .material import dilatation, extension_state

    if times is None:
        times = [0.0]
    times = [float(t) for t in times]
    if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
        raise ConfigurationError("load-step times must be strictly increasing")
    n = system.n
    u = np.zeros((n, 3))
    pf = np.zeros(n)
    steps: list[StepInfo] = []
    diag_ref = system.diagonal() if not geometric else None
    for k, t in enumerate(times):
        if not geometric:
            b, pf = external_forces(system, bc, body_force, pore_field, t,
                                    load_scale=load_scale)
            u, hist = solve_linear(system, bc, b, x0=u, diag=diag_ref,
                                   tol=tol, max_iter=max_iter)
            e = extension_state(system.particles, system.neighbors, u, linearize=True)
            theta = dilatation(system.particles, system.neighbors, system.m, e)
            info = StepInfo(time=t, cg_iterations=len(hist) - 1,
                            outer_iterations=1, residual=hist[-1])
        else:
            u, theta, info = _solve_step_geometric(
                system, bc, body_force, pore_field, t, u, load_scale=load_scale,
                tol=tol, max_iter=max_iter, max_outer=max_outer)
            pf = evaluate_pressure(pore_field, system.particles.positions, t) \
                if pore_field is not None else None
        if pf is None:
            pf = np.zeros(n)
        steps.append(info)
        if on_step is not None:
            on_step(k, t, u, theta, pf)
    pressure = peridynamic_pressure(theta, system.material, pf, system.gamma)
    return QuasistaticResult(u=u, theta=theta, pressure=pressure,
                             pore_pressure=pf, steps=steps)


def _solve_step_geometric(system, bc, body_force, pore_field, t, u, load_scale,
                          tol, max_iter, max_outer):
    from .material import dilatation, extension_state

    u = u.copy()
    u[bc.fixed] = bc.values[bc.fixed]
    outer_hist = []
    cg_total = 0
    for outer in range(max_outer):
        f_int = system.force(u)
        dirs = system._dirs_buf
        b, _ = external_forces(system, bc, body_force, pore_field, t, dirs, load_scale)
        r = f_int + b
        r[bc.fixed] = 0.0
        bnorm = max(_norm(np.where(bc.fixed, 0.0, b)), 1e-300)
        rel = _norm(r) / bnorm
        outer_hist.append(rel)
        if rel <= tol:
            e = extension_state(system.particles, system.neighbors, u, linearize=False)
            theta = dilatation(system.particles, system.neighbors, system.m, e)
            return u, theta, StepInfo(time=t, cg_iterations=cg_total,
                                      outer_iterations=outer + 1, residual=rel)
        dirs = dirs.copy()
        diag = system.diagonal(dirs)

        def apply_op(v, out):
            system.matvec(v, out=out, dirs=dirs)

        du, hist = conjugate_gradient(apply_op, r, np.zeros_like(u), diag,
                                      bc.fixed, tol=min(tol, rel * 1e-2),
                                      max_iter=max_iter)
        cg_total += len(hist) - 1
        u += du
    raise NonConvergenceError(
        f"geometric solve did not balance forces to {tol:g} within {max_outer} "
        f"outer iterations (last relative residual {outer_hist[-1]:.3e})", outer_hist)
