"""Prescribed body-force and pore-pressure fields."""

import numpy as np
import pytest

from peripore.errors import ConfigurationError
from peripore.fields import (AxialRampPressure, ConstantBodyForce,
                             ConstantPressure, HydrostaticPressure,
                             RadialRampPressure, SpecificWeight,
                             TimeScaledPressure, darcy_velocity,
                             evaluate_body_force, evaluate_pressure,
                             scale_factor)

POINTS = np.array([
    [0.0, 0.0, 0.0],
    [1.0, 2.0, -3.0],
    [0.5, -0.5, 10.0],
])


class TestBodyForces:
    def test_constant_vector(self):
        f = ConstantBodyForce(vector=(1.0, -2.0, 3.0)).evaluate(POINTS)
        assert f.shape == (3, 3)
        assert np.allclose(f, [1.0, -2.0, 3.0])

    def test_specific_weight_points_down_its_axis(self):
        f = SpecificWeight(axis=2, weight=9810.0).evaluate(POINTS)
        assert np.allclose(f[:, 2], -9810.0)
        assert np.allclose(f[:, :2], 0.0)
        with pytest.raises(ConfigurationError):
            SpecificWeight(axis=3, weight=1.0)

    def test_none_means_zero(self):
        assert np.allclose(evaluate_body_force(None, POINTS), 0.0)


class TestPressureFields:
    def test_constant(self):
        field = ConstantPressure(7.5)
        assert np.allclose(field.evaluate(POINTS), 7.5)
        assert np.allclose(field.gradient(POINTS), 0.0)

    def test_hydrostatic_profile_and_clamp(self):
        field = HydrostaticPressure(axis=2, datum=2.0, unit_weight=1000.0)
        x = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 2.0], [0.0, 0.0, 5.0]])
        assert np.allclose(field.evaluate(x), [2000.0, 0.0, 0.0])
        g = field.gradient(x)
        assert np.allclose(g[0], [0.0, 0.0, -1000.0])
        assert np.allclose(g[2], 0.0)  # dry above the datum

    def test_hydrostatic_unclamped_goes_negative(self):
        field = HydrostaticPressure(axis=2, datum=2.0, unit_weight=1000.0,
                                    clamp_negative=False)
        x = np.array([[0.0, 0.0, 5.0]])
        assert field.evaluate(x)[0] == pytest.approx(-3000.0)
        assert np.allclose(field.gradient(x)[0], [0.0, 0.0, -1000.0])

    def test_hydrostatic_validation(self):
        with pytest.raises(ConfigurationError):
            HydrostaticPressure(axis=0, datum=0.0, unit_weight=-5.0)

    def test_axial_ramp_interp_and_hold(self):
        field = AxialRampPressure(axis=0, x0=1.0, p0=10.0, x1=3.0, p1=30.0)
        x = np.array([[0.0, 0, 0], [1.0, 0, 0], [2.0, 0, 0], [3.0, 0, 0], [9.0, 0, 0]])
        assert np.allclose(field.evaluate(x), [10.0, 10.0, 20.0, 30.0, 30.0])
        g = field.gradient(x)
        assert np.allclose(g[:, 0], [0.0, 10.0, 10.0, 10.0, 0.0])
        with pytest.raises(ConfigurationError):
            AxialRampPressure(axis=0, x0=3.0, p0=1.0, x1=3.0, p1=2.0)

    def test_radial_ramp(self):
        field = RadialRampPressure(center=(0.0, 0.0, 0.0), axis=2,
                                   r_in=1.0, p_in=100.0, r_out=3.0, p_out=0.0)
        x = np.array([[0.5, 0.0, 7.0], [2.0, 0.0, -4.0], [0.0, 3.0, 0.0],
                      [5.0, 0.0, 0.0]])
        assert np.allclose(field.evaluate(x), [100.0, 50.0, 0.0, 0.0])
        g = field.gradient(x)
        assert np.allclose(g[1], [-50.0, 0.0, 0.0])  # pressure falls outward
        assert np.allclose(g[0], 0.0)  # flat inside r_in
        assert np.allclose(g[:, 2], 0.0)  # no axial component

    def test_radial_ramp_axial_interval(self):
        field = RadialRampPressure(center=(0.0, 0.0, 0.0), axis=2,
                                   r_in=1.0, p_in=100.0, r_out=3.0, p_out=0.0,
                                   axial_interval=(-1.0, 1.0))
        inside = np.array([[2.0, 0.0, 0.5]])
        outside = np.array([[2.0, 0.0, 1.5]])
        assert field.evaluate(inside)[0] == pytest.approx(50.0)
        assert field.evaluate(outside)[0] == 0.0
        assert np.allclose(field.gradient(outside), 0.0)

    def test_radial_ramp_validation(self):
        with pytest.raises(ConfigurationError):
            RadialRampPressure(center=(0, 0, 0), axis=2, r_in=2.0, p_in=1.0,
                               r_out=1.0, p_out=0.0)
        with pytest.raises(ConfigurationError):
            RadialRampPressure(center=(0, 0, 0), axis=2, r_in=0.0, p_in=1.0,
                               r_out=1.0, p_out=0.0, axial_interval=(2.0, -2.0))

    def test_none_means_dry(self):
        assert np.allclose(evaluate_pressure(None, POINTS), 0.0)


class TestTimeScaling:
    def test_table_interpolation_and_holds(self):
        table = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]])
        assert scale_factor(table, -1.0) == 0.0
        assert scale_factor(table, 0.5) == pytest.approx(1.0)
        assert scale_factor(table, 3.0) == 1.0
        assert scale_factor(table, 99.0) == 1.0

    def test_callable_and_none(self):
        assert scale_factor(lambda t: 3.0 * t, 2.0) == 6.0
        assert scale_factor(None, 123.0) == 1.0

    def test_malformed_table_rejected(self):
        with pytest.raises(ConfigurationError):
            scale_factor(np.zeros((2, 3)), 0.0)

    def test_time_scaled_pressure(self):
        base = AxialRampPressure(axis=0, x0=0.0, p0=0.0, x1=1.0, p1=100.0)
        field = TimeScaledPressure(base=base, scale=np.array([[0.0, 0.0], [1.0, 2.0]]))
        x = np.array([[0.5, 0.0, 0.0]])
        assert field.evaluate(x, t=0.0)[0] == 0.0
        assert field.evaluate(x, t=0.5)[0] == pytest.approx(50.0)
        assert field.gradient(x, t=1.0)[0, 0] == pytest.approx(200.0)


class TestDarcy:
    def test_velocity_opposes_gradient(self):
        v = darcy_velocity(np.array([2.0, 0.0, -4.0]), drag=2.0)
        assert np.allclose(v, [-1.0, 0.0, 2.0])

    def test_fluid_body_force_drives_flow(self):
        v = darcy_velocity(np.zeros(3), drag=4.0,
                           fluid_body_force=np.array([0.0, 0.0, -9.81e3]))
        assert v[2] == pytest.approx(-9.81e3 / 4.0)

    def test_zero_gradient_zero_flow(self):
        assert np.allclose(darcy_velocity(np.zeros((5, 3)), drag=1.0), 0.0)

    def test_nonpositive_drag_rejected(self):
        with pytest.raises(ConfigurationError):
            darcy_velocity(np.zeros(3), drag=0.0)
