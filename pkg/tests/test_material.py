"""Material model, bond states, and the pore-pressure coupling."""

import numpy as np
import pytest

from peripore.discretization import (ParticleSet, build_lattice, build_neighbors,
                                     weighted_volume)
from peripore.errors import ConfigurationError, SingularBondError
from peripore.material import (EffectiveStress, Material, biot_coefficient,
                               deformed_directions, dilatation, extension_state,
                               force_scalar_state, internal_force,
                               peridynamic_pressure)


class TestMaterial:
    def test_engineering_round_trip(self):
        mat = Material.from_engineering(young=10e6, poisson=0.25)
        assert mat.young == pytest.approx(10e6, rel=1e-12)
        assert mat.poisson == pytest.approx(0.25, rel=1e-12)

    def test_bulk_shear_to_young(self):
        mat = Material(bulk_modulus=9e9, shear_modulus=15e9)
        assert mat.young == pytest.approx(9 * 9e9 * 15e9 / (3 * 9e9 + 15e9), rel=1e-14)
        # k < 2 mu / 3 means a negative Poisson ratio, still admissible
        assert mat.poisson == pytest.approx(-1.0 / 28.0, rel=1e-12)

    @pytest.mark.parametrize("k,mu", [(0.0, 1.0), (1.0, 0.0), (-2.0, 1.0)])
    def test_nonpositive_moduli_rejected(self, k, mu):
        with pytest.raises(ConfigurationError):
            Material(bulk_modulus=k, shear_modulus=mu)

    def test_poisson_bounds_rejected(self):
        with pytest.raises(ConfigurationError):
            Material.from_engineering(young=1e6, poisson=0.5)
        with pytest.raises(ConfigurationError):
            Material.from_engineering(young=-1e6, poisson=0.2)


class TestEffectiveStress:
    def test_biot_coefficient_value(self):
        assert biot_coefficient(1.0, 3.0) == pytest.approx(2.0 / 3.0, rel=1e-15)

    def test_biot_limits(self):
        assert biot_coefficient(0.0, 5.0) == 1.0
        assert biot_coefficient(5.0, 5.0) == 0.0

    def test_bulk_exceeding_grain_rejected(self):
        with pytest.raises(ConfigurationError):
            biot_coefficient(4.0, 3.0)
        with pytest.raises(ConfigurationError):
            biot_coefficient(1.0, 0.0)

    def test_gamma_range_enforced(self):
        with pytest.raises(ConfigurationError):
            EffectiveStress.explicit(1.5)
        with pytest.raises(ConfigurationError):
            EffectiveStress.explicit(-0.1)
        assert EffectiveStress.unit().gamma == 1.0
        assert EffectiveStress.biot(1.0, 4.0).gamma == pytest.approx(0.75)


@pytest.fixture(scope="module")
def cube():
    parts = build_lattice([[0.0, 1.0]] * 3, 1.0 / 10.0)
    nb = build_neighbors(parts, 0.35)
    m = weighted_volume(parts, nb)
    interior = np.all((parts.positions > 0.35) & (parts.positions < 0.65), axis=1)
    return parts, nb, m, interior


class TestExtensionAndDilatation:
    def test_linearized_extension_definition(self, cube):
        parts, nb, m, _ = cube
        rng = np.random.default_rng(3)
        u = 1e-4 * rng.standard_normal((parts.n, 3))
        e = extension_state(parts, nb, u, linearize=True)
        du = u[nb.indices] - u[nb.rows]
        assert np.allclose(e, (du * nb.dirs).sum(axis=1), rtol=0, atol=1e-18)

    def test_geometric_extension_exact_under_rotation(self, cube):
        parts, nb, m, _ = cube
        phi = 1e-3
        c, s = np.cos(phi), np.sin(phi)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        u = parts.positions @ rot.T - parts.positions
        e_geo = extension_state(parts, nb, u, linearize=False)
        e_lin = extension_state(parts, nb, u, linearize=True)
        assert np.abs(e_geo).max() < 1e-14 * nb.ref_len.max()
        # the linearization sees the second-order apparent stretch
        assert 0.1 * phi ** 2 < np.abs(e_lin / nb.ref_len).max() < 10.0 * phi ** 2

    @pytest.mark.parametrize("ratio", [2.0, 3.5, 5.0])
    def test_patch_uniform_expansion(self, ratio):
        # u = eps x on a full interior neighborhood: theta = 3 eps exactly and
        # every deviatoric extension vanishes
        h = 1.0 / 12.0
        parts = build_lattice([[0.0, 1.0]] * 3, h)
        nb = build_neighbors(parts, ratio * h)
        m = weighted_volume(parts, nb)
        eps = 1e-3
        e = extension_state(parts, nb, eps * parts.positions, linearize=True)
        theta = dilatation(parts, nb, m, e)
        interior = np.all(np.abs(parts.positions - 0.5) < 0.5 - ratio * h, axis=1)
        assert interior.any()
        assert np.abs(theta[interior] / (3.0 * eps) - 1.0).max() < 1e-12
        dev = e - theta[nb.rows] * nb.ref_len / 3.0
        bonds_int = interior[nb.rows]
        assert np.abs(dev[bonds_int]).max() < 1e-12 * eps * nb.ref_len.max()

    def test_traceless_affine_field_gives_zero_dilatation(self, cube):
        parts, nb, m, interior = cube
        grad = np.array([[0.0, 3e-4, 0.0], [0.0, 0.0, 1e-4], [2e-4, 0.0, 0.0]])
        u = parts.positions @ grad.T
        e = extension_state(parts, nb, u, linearize=True)
        theta = dilatation(parts, nb, m, e)
        assert np.abs(theta[interior]).max() < 1e-12

    def test_deformed_directions_rotate(self, cube):
        parts, nb, _, _ = cube
        u = np.full((parts.n, 3), 0.123)  # rigid translation
        assert np.allclose(deformed_directions(parts, nb, u), nb.dirs, atol=1e-15)

    def test_collapsed_bond_raises(self):
        pos = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        parts = ParticleSet(positions=pos, cell_volumes=np.ones(2))
        nb = build_neighbors(parts, 1.5)
        u = np.array([[0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
        with pytest.raises(SingularBondError):
            deformed_directions(parts, nb, u)


class TestForceStates:
    def test_two_particle_axial_force(self):
        # single bond of length L, volumes V: m = L^2 V, theta = 3 e / L,
        # e^d = 0, so the pair force is 18 k e V / L^2 along the bond
        L, V, e = 0.8, 0.3, 1e-4
        k, mu = 2.0e9, 1.5e9
        pos = np.array([[0.0, 0.0, 0.0], [L, 0.0, 0.0]])
        parts = ParticleSet(positions=pos, cell_volumes=np.full(2, V))
        nb = build_neighbors(parts, 1.5 * L)
        mat = Material(bulk_modulus=k, shear_modulus=mu)
        m = weighted_volume(parts, nb)
        u = np.array([[0.0, 0.0, 0.0], [e, 0.0, 0.0]])
        f = internal_force(parts, nb, m, u, mat, linearize=True)
        expect = 18.0 * k * e * V / L ** 2
        assert f[0, 0] == pytest.approx(expect, rel=1e-12)
        assert f[1, 0] == pytest.approx(-expect, rel=1e-12)
        assert np.allclose(f[:, 1:], 0.0)

    def test_pressure_sign_conventions(self):
        mat = Material(bulk_modulus=4.0, shear_modulus=3.0)
        theta = np.array([0.01, -0.01])
        # compression (theta < 0) gives positive pressure
        p = peridynamic_pressure(theta, mat)
        assert p[0] == pytest.approx(-0.04) and p[1] == pytest.approx(0.04)
        # pore pressure adds gamma * pf
        pf = np.array([10.0, 10.0])
        assert np.allclose(peridynamic_pressure(theta, mat, pf, gamma=0.5) - p, 5.0)

    def test_uniform_pore_pressure_pushes_apart(self):
        parts = build_lattice([[0.0, 1.0]] * 3, 0.25)
        nb = build_neighbors(parts, 0.6)
        m = weighted_volume(parts, nb)
        mat = Material(bulk_modulus=1e6, shear_modulus=1e6)
        pf = np.full(parts.n, 50.0)
        t = force_scalar_state(nb, m, np.zeros(parts.n), np.zeros(nb.n_bonds),
                               mat, pore_pressure=pf, gamma=1.0)
        # t = (-3 pf / m) |xi| < 0: bonds push their endpoints apart
        assert np.all(t < 0.0)
        f = internal_force(parts, nb, m, np.zeros((parts.n, 3)), mat,
                           pore_pressure=pf, gamma=1.0, linearize=True)
        corner = np.argmin(parts.positions.sum(axis=1))
        assert np.all(f[corner] < 0.0)  # corner particle pushed outward

    def test_gamma_scales_pore_term_linearly(self):
        parts = build_lattice([[0.0, 1.0]] * 3, 0.25)
        nb = build_neighbors(parts, 0.6)
        m = weighted_volume(parts, nb)
        mat = Material(bulk_modulus=1e6, shear_modulus=1e6)
        pf = np.full(parts.n, 50.0)
        z3 = np.zeros((parts.n, 3))
        f1 = internal_force(parts, nb, m, z3, mat, pf, gamma=1.0, linearize=True)
        f_half = internal_force(parts, nb, m, z3, mat, pf, gamma=0.5, linearize=True)
        assert np.allclose(f_half, 0.5 * f1, rtol=1e-13, atol=0)

    def test_internal_force_balances(self):
        parts = build_lattice([[0.0, 1.0]] * 3, 0.2)
        nb = build_neighbors(parts, 0.45)
        m = weighted_volume(parts, nb)
        mat = Material(bulk_modulus=3e6, shear_modulus=2e6)
        rng = np.random.default_rng(11)
        u = 1e-3 * rng.standard_normal((parts.n, 3))
        pf = rng.uniform(0.0, 100.0, parts.n)
        for lin in (True, False):
            f = internal_force(parts, nb, m, u, mat, pf, gamma=0.7, linearize=lin)
            scale = np.abs(f).sum()
            assert np.abs(f.sum(axis=0)).max() < 1e-12 * scale
