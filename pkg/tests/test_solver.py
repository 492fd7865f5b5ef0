"""Operator assembly, boundary conditions, and the quasistatic solves."""

import numpy as np
import pytest

from peripore.discretization import build_lattice, build_neighbors
from peripore.errors import (ConfigurationError, NonConvergenceError,
                             SingularOperatorError, SolveRefusalError)
from peripore.fields import ConstantPressure
from peripore.material import Material, internal_force
from peripore.solver import (BoundaryConditions, apply_bcs, build_bond_system,
                             external_forces, residual, solve_linear,
                             solve_quasistatic)

from _oracles import dense_operator

MAT = Material(bulk_modulus=3.0e6, shear_modulus=2.0e6)


def small_system(side=5, ratio=2.5, backend=None):
    h = 1.0 / side
    parts = build_lattice([[0.0, 1.0]] * 3, h)
    nb = build_neighbors(parts, ratio * h, backend=backend)
    return parts, build_bond_system(parts, nb, MAT, backend=backend)


def pin_rigid_modes(parts, bc):
    """3-2-1 pinning compatible with any pure expansion about the first corner."""
    x = parts.positions
    corner = int(np.lexsort((x[:, 2], x[:, 1], x[:, 0]))[0])
    along_x = np.nonzero((x[:, 1] == x[corner, 1]) & (x[:, 2] == x[corner, 2]))[0]
    along_y = np.nonzero((x[:, 0] == x[corner, 0]) & (x[:, 2] == x[corner, 2]))[0]
    bc.fix(corner)
    bc.fix(int(along_x[-1]), axis=1).fix(int(along_x[-1]), axis=2)
    bc.fix(int(along_y[-1]), axis=2)
    return bc


class TestBoundaryConditions:
    def test_refix_same_value_ok_different_rejected(self):
        bc = BoundaryConditions.empty(4)
        bc.fix([0, 1], axis=2, value=0.5)
        bc.fix([1], axis=2, value=0.5)
        with pytest.raises(ConfigurationError):
            bc.fix([1], axis=2, value=0.7)

    def test_fix_then_load_conflict(self):
        bc = BoundaryConditions.empty(4)
        bc.fix([2], axis=0)
        with pytest.raises(ConfigurationError):
            bc.load([2], [1.0, 0.0, 0.0])
        # orthogonal components are fine
        bc.load([2], [0.0, 5.0, 0.0])
        assert bc.forces[2, 1] == 5.0

    def test_load_then_fix_conflict(self):
        bc = BoundaryConditions.empty(4)
        bc.load([3], [0.0, 0.0, 2.0])
        with pytest.raises(ConfigurationError):
            bc.fix([3], axis=2)

    def test_skip_fixed_drops_reacted_components(self):
        bc = BoundaryConditions.empty(4)
        bc.fix([0], axis=0)
        bc.load([0, 1], [1.0, 2.0, 0.0], skip_fixed=True)
        assert bc.forces[0, 0] == 0.0  # absorbed by the constraint
        assert bc.forces[0, 1] == 2.0
        assert bc.forces[1, 0] == 1.0

    def test_loads_accumulate(self):
        bc = BoundaryConditions.empty(2)
        bc.load([0], [1.0, 0.0, 0.0]).load([0], [2.0, 0.0, 0.0])
        assert bc.forces[0, 0] == 3.0


class TestOperator:
    def test_matvec_is_negated_internal_force(self):
        parts, system = small_system()
        rng = np.random.default_rng(5)
        u = 1e-3 * rng.standard_normal((parts.n, 3))
        f = internal_force(parts, system.neighbors, system.m, u, MAT, linearize=True)
        assert np.abs(system.matvec(u) + f).max() < 1e-12 * np.abs(f).max()

    def test_dense_operator_symmetric(self):
        parts, system = small_system(side=4)
        a = dense_operator(system)
        scale = np.abs(a).max()
        assert np.abs(a - a.T).max() < 1e-12 * scale

    def test_dense_operator_positive_semidefinite(self):
        parts, system = small_system(side=4)
        a = dense_operator(system)
        w = np.linalg.eigvalsh(a)
        assert w.min() > -1e-10 * w.max()
        # exactly six rigid-body modes (3 translations + 3 rotations)
        assert int((w < 1e-8 * w.max()).sum()) == 6

    def test_diagonal_matches_dense(self):
        parts, system = small_system(side=4)
        a = dense_operator(system)
        diag = system.diagonal().reshape(-1)
        assert np.allclose(diag, np.diag(a), rtol=1e-12, atol=0)

    def test_pore_forces_self_balance(self):
        parts, system = small_system()
        pf = np.full(parts.n, 123.0)
        f = system.pore_forces(pf)
        assert np.abs(f.sum(axis=0)).max() < 1e-12 * np.abs(f).sum()

    def test_isolated_particle_refused(self):
        parts = build_lattice([[0.0, 3.0], [0.0, 1.0], [0.0, 1.0]], 1.0)
        # horizon shorter than the spacing: nobody has bonds
        nb = build_neighbors(parts, 0.5)
        with pytest.raises(SolveRefusalError):
            build_bond_system(parts, nb, MAT)


class TestLinearSolve:
    def test_matches_dense_direct_solve(self):
        # CG + lifting against a dense numpy solve of the same constrained
        # operator, mixed prescribed displacements and loads
        parts, system = small_system(side=4)
        x = parts.positions
        bc = BoundaryConditions.empty(parts.n)
        bottom = x[:, 2] == x[:, 2].min()
        bc.fix(bottom)
        bc.fix(x[:, 2] == x[:, 2].max(), axis=2, value=-0.01)
        bc.load(x[:, 0] == x[:, 0].max(), [3.0, 0.0, 0.0], skip_fixed=True)
        u, hist = solve_linear(system, bc, bc.forces.copy(), tol=1e-13)

        a = dense_operator(system)
        fixed = bc.fixed.reshape(-1)
        vals = np.where(bc.fixed, bc.values, 0.0).reshape(-1)
        rhs = bc.forces.reshape(-1) - a @ vals
        free = ~fixed
        ref = vals.copy()
        ref[free] = np.linalg.solve(a[np.ix_(free, free)], rhs[free])
        scale = np.abs(ref).max()
        assert np.abs(u.reshape(-1) - ref).max() < 1e-9 * scale
        assert hist[-1] <= 1e-13

    def test_lifting_moves_prescribed_values(self):
        parts, system = small_system()
        bc = BoundaryConditions.empty(parts.n)
        bc.fix(0, axis=1, value=0.25)
        b_eff, u_presc = apply_bcs(system, bc, np.zeros((parts.n, 3)))
        assert u_presc[0, 1] == 0.25
        assert np.all(b_eff[bc.fixed] == 0.0)
        assert np.any(b_eff != 0.0)

    def test_unconstrained_body_is_reported_singular(self):
        parts, system = small_system()
        bc = BoundaryConditions.empty(parts.n)
        bc.load(np.arange(parts.n), [1.0, 0.0, 0.0])
        with pytest.raises(SingularOperatorError):
            solve_linear(system, bc, bc.forces.copy())

    def test_iteration_budget_enforced(self):
        parts, system = small_system()
        bc = pin_rigid_modes(parts, BoundaryConditions.empty(parts.n))
        bc.load(int(np.argmax(parts.positions[:, 0])), [1.0, 0.0, 0.0])
        with pytest.raises(NonConvergenceError) as err:
            solve_linear(system, bc, bc.forces.copy(), tol=1e-12, max_iter=2)
        assert len(err.value.residual_history) >= 1

    def test_solution_linearity(self):
        parts, system = small_system()
        bc = pin_rigid_modes(parts, BoundaryConditions.empty(parts.n))
        top = parts.positions[:, 2] == parts.positions[:, 2].max()
        bc.load(top, [0.0, 0.0, -1.0], skip_fixed=True)
        u1, _ = solve_linear(system, bc, bc.forces.copy(), tol=1e-11)
        u2, _ = solve_linear(system, bc, 2.0 * bc.forces, tol=1e-11)
        scale = np.abs(u1).max()
        assert np.abs(u2 - 2.0 * u1).max() < 1e-8 * scale

    def test_repeat_solve_bitwise_identical(self):
        parts, system = small_system()
        bc = pin_rigid_modes(parts, BoundaryConditions.empty(parts.n))
        bc.load(int(np.argmax(parts.positions[:, 1])), [0.0, 2.0, 0.0])
        u1, h1 = solve_linear(system, bc, bc.forces.copy(), tol=1e-10)
        u2, h2 = solve_linear(system, bc, bc.forces.copy(), tol=1e-10)
        assert np.array_equal(u1, u2)
        assert h1 == h2


class TestQuasistatic:
    def test_superposition_of_pore_and_point_loads(self):
        parts, system = small_system(side=6)
        bc_load = pin_rigid_modes(parts, BoundaryConditions.empty(parts.n))
        top = parts.positions[:, 2] == parts.positions[:, 2].max()
        bc_load.load(top, [0.0, 0.0, -0.5], skip_fixed=True)
        bc_pore = pin_rigid_modes(parts, BoundaryConditions.empty(parts.n))
        pore = ConstantPressure(40.0)
        tol = 1e-11
        u_mech = solve_quasistatic(system, bc_load, tol=tol).u
        u_pore = solve_quasistatic(system, bc_pore, pore_field=pore, tol=tol).u
        u_both = solve_quasistatic(system, bc_load, pore_field=pore, tol=tol).u
        scale = max(np.abs(u_both).max(), 1e-300)
        assert np.abs(u_both - (u_mech + u_pore)).max() < 10 * tol * scale

    def test_result_records_fields(self):
        parts, system = small_system(side=6)
        bc = pin_rigid_modes(parts, BoundaryConditions.empty(parts.n))
        res = solve_quasistatic(system, bc, pore_field=ConstantPressure(10.0), tol=1e-10)
        assert res.u.shape == (parts.n, 3)
        assert res.theta.shape == (parts.n,)
        assert np.allclose(res.pore_pressure, 10.0)
        # p = -k theta + pf: away from the faces theta ~ pf / k, p ~ 0
        assert np.abs(res.pressure).max() < 10.0

    def test_load_schedule_scales_steps(self):
        parts, system = small_system()
        bc = pin_rigid_modes(parts, BoundaryConditions.empty(parts.n))
        tip = int(np.argmax(parts.positions[:, 0]))
        bc.load(tip, [1.0, 0.0, 0.0])
        seen = []
        res = solve_quasistatic(
            system, bc, times=[1.0, 2.0],
            load_scale=np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]),
            tol=1e-11, on_step=lambda k, t, u, theta, pf: seen.append((k, t, u.copy())))
        assert [s[:2] for s in seen] == [(0, 1.0), (1, 2.0)]
        u1, u2 = seen[0][2], seen[1][2]
        assert np.abs(u2 - 2.0 * u1).max() < 1e-7 * np.abs(u2).max()
        assert len(res.steps) == 2
        assert res.steps[1].cg_iterations >= 0

    def test_times_must_increase(self):
        parts, system = small_system()
        bc = pin_rigid_modes(parts, BoundaryConditions.empty(parts.n))
        with pytest.raises(ConfigurationError):
            solve_quasistatic(system, bc, times=[1.0, 1.0])

    def test_residual_is_one_at_zero_displacement(self):
        parts, system = small_system()
        bc = pin_rigid_modes(parts, BoundaryConditions.empty(parts.n))
        bc.load(int(np.argmax(parts.positions[:, 0])), [3.0, 0.0, 0.0])
        _, rel = residual(system, np.zeros((parts.n, 3)), bc)
        assert rel == pytest.approx(1.0)

    def test_residual_small_at_solution(self):
        parts, system = small_system()
        bc = pin_rigid_modes(parts, BoundaryConditions.empty(parts.n))
        bc.load(int(np.argmax(parts.positions[:, 0])), [3.0, 0.0, 0.0])
        res = solve_quasistatic(system, bc, tol=1e-11)
        _, rel = residual(system, res.u, bc)
        assert rel < 1e-9

    def test_geometric_matches_linear_for_small_strain(self):
        # strain ~1e-5: far above the cancellation floor of the geometric
        # extension |xi + du| - |xi| yet small enough to stay near linear
        parts, system = small_system(side=4)
        bc = pin_rigid_modes(parts, BoundaryConditions.empty(parts.n))
        top = parts.positions[:, 2] == parts.positions[:, 2].max()
        bc.load(top, [0.0, 0.0, -3.0], skip_fixed=True)
        u_lin = solve_quasistatic(system, bc, tol=1e-11).u
        res_geo = solve_quasistatic(system, bc, geometric=True, tol=1e-9)
        scale = np.abs(u_lin).max()
        # the correction is O(strain) ~ 1e-4 of the solution itself
        assert np.abs(res_geo.u - u_lin).max() < 1e-3 * scale
        assert res_geo.steps[0].outer_iterations >= 1

    def test_external_forces_combine_sources(self):
        parts, system = small_system()
        bc = BoundaryConditions.empty(parts.n)
        bc.load(0, [1.0, 0.0, 0.0])
        b, pf = external_forces(system, bc, pore_field=ConstantPressure(5.0))
        assert pf is not None and np.allclose(pf, 5.0)
        b_dry, pf_dry = external_forces(system, bc)
        assert pf_dry is None
        assert np.allclose(b - system.pore_forces(np.full(parts.n, 5.0)), b_dry)
