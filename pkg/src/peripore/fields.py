"""Prescribed body-force and pore-pressure fields.

Pore pressure is never solved for here: each benchmark prescribes an analytic
field ``p_f(x, t)`` (hydrostatic columns, linear ramps along an axis or a
cylindrical radius, optionally rescaled in time), and the solver turns it into
equivalent bond forces. Every field also knows its own gradient so a Darcy
flux can be reported,

    q = -(kappa / mu_f) grad p_f,

with permeability ``kappa`` and fluid viscosity ``mu_f``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError


def _check_axis(axis: int) -> int:
    if axis not in (0, 1, 2):
        raise ConfigurationError(f"axis must be 0, 1 or 2, got {axis}")
    return axis


# ---------------------------------------------------------------------------
# body forces (force per unit volume)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantBodyForce:
    """Uniform force density vector."""

    vector: tuple[float, float, float]

    def evaluate(self, positions: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.vector, dtype=np.float64),
                               (positions.shape[0], 3)).copy()


@dataclass(frozen=True)
class SpecificWeight:
    """Self-weight ``f = -w e_axis`` for a material of specific weight ``w``."""

    axis: int
    weight: float

    def __post_init__(self):
        _check_axis(self.axis)

    def evaluate(self, positions: np.ndarray) -> np.ndarray:
        f = np.zeros((positions.shape[0], 3))
        f[:, self.axis] = -self.weight
        return f


def evaluate_body_force(field, positions: np.ndarray) -> np.ndarray:
    """Force density at each position; ``None`` means no body force."""
    if field is None:
        return np.zeros((positions.shape[0], 3))
    return field.evaluate(positions)


# ---------------------------------------------------------------------------
# pore-pressure fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantPressure:
    value: float

    def evaluate(self, positions: np.ndarray, t: float = 0.0) -> np.ndarray:
        return np.full(positions.shape[0], float(self.value))

    def gradient(self, positions: np.ndarray, t: float = 0.0) -> np.ndarray:
        return np.zeros((positions.shape[0], 3))


@dataclass(frozen=True)
class HydrostaticPressure:
    """Fluid column below a free surface: ``p = w (datum - x_axis)``, clipped
    at zero above the surface (unsaturated material carries no pressure)."""

    axis: int
    datum: float
    unit_weight: float
    clamp_negative: bool = True

    def __post_init__(self):
        _check_axis(self.axis)
        if self.unit_weight <= 0.0:
            raise ConfigurationError(
                f"hydrostatic unit_weight must be positive, got {self.unit_weight}")

    def evaluate(self, positions: np.ndarray, t: float = 0.0) -> np.ndarray:
        p = self.unit_weight * (self.datum - positions[:, self.axis])
        if self.clamp_negative:
            np.maximum(p, 0.0, out=p)
        return p

    def gradient(self, positions: np.ndarray, t: float = 0.0) -> np.ndarray:
        g = np.zeros((positions.shape[0], 3))
        g[:, self.axis] = -self.unit_weight
        if self.clamp_negative:
            dry = positions[:, self.axis] >= self.datum
            g[dry] = 0.0
        return g


@dataclass(frozen=True)
class AxialRampPressure:
    """Linear profile along one axis, held constant beyond the end points."""

    axis: int
    x0: float
    p0: float
    x1: float
    p1: float

    def __post_init__(self):
        _check_axis(self.axis)
        if not self.x1 > self.x0:
            raise ConfigurationError(
                f"axial ramp needs x1 > x0, got x0={self.x0}, x1={self.x1}")

    def evaluate(self, positions: np.ndarray, t: float = 0.0) -> np.ndarray:
        return np.interp(positions[:, self.axis], [self.x0, self.x1], [self.p0, self.p1])

    def gradient(self, positions: np.ndarray, t: float = 0.0) -> np.ndarray:
        x = positions[:, self.axis]
        g = np.zeros((positions.shape[0], 3))
        inside = (x >= self.x0) & (x <= self.x1)
        g[inside, self.axis] = (self.p1 - self.p0) / (self.x1 - self.x0)
        return g


@dataclass(frozen=True)
class RadialRampPressure:
    """Linear profile in cylindrical radius about an axis through ``center``:
    ``p_in`` out to ``r_in``, ramping to ``p_out`` at ``r_out`` and constant
    beyond. With ``axial_interval`` the field vanishes outside that slab of
    the axis coordinate (e.g. a pressurized layer)."""

    center: tuple[float, float, float]
    axis: int
    r_in: float
    p_in: float
    r_out: float
    p_out: float
    axial_interval: tuple[float, float] | None = None

    def __post_init__(self):
        _check_axis(self.axis)
        if self.r_in < 0.0 or not self.r_out > self.r_in:
            raise ConfigurationError(
                f"radial ramp needs 0 <= r_in < r_out, got r_in={self.r_in}, r_out={self.r_out}")
        if self.axial_interval is not None and not self.axial_interval[1] > self.axial_interval[0]:
            raise ConfigurationError(
                f"axial_interval must be increasing, got {self.axial_interval}")

    def _radius(self, positions: np.ndarray):
        d = positions - np.asarray(self.center, dtype=np.float64)
        d[:, self.axis] = 0.0
        return np.sqrt((d * d).sum(axis=1)), d

    def _slab(self, positions: np.ndarray) -> np.ndarray:
        if self.axial_interval is None:
            return np.ones(positions.shape[0], dtype=bool)
        z = positions[:, self.axis]
        return (z >= self.axial_interval[0]) & (z <= self.axial_interval[1])

    def evaluate(self, positions: np.ndarray, t: float = 0.0) -> np.ndarray:
        r, _ = self._radius(positions)
        p = np.interp(r, [self.r_in, self.r_out], [self.p_in, self.p_out])
        p[~self._slab(positions)] = 0.0
        return p

    def gradient(self, positions: np.ndarray, t: float = 0.0) -> np.ndarray:
        r, d = self._radius(positions)
        g = np.zeros((positions.shape[0], 3))
        inside = (r > self.r_in) & (r < self.r_out) & (r > 0.0) & self._slab(positions)
        slope = (self.p_out - self.p_in) / (self.r_out - self.r_in)
        g[inside] = slope * d[inside] / r[inside, None]
        return g


@dataclass(frozen=True)
class TimeScaledPressure:
    """``p(x, t) = s(t) p_base(x)`` where ``s`` is a callable or an (n, 2)
    table of (time, factor) rows interpolated piecewise-linearly (held at the
    end values outside the table)."""

    base: object
    scale: Callable[[float], float] | np.ndarray

    def factor(self, t: float) -> float:
        return scale_factor(self.scale, t)

    def evaluate(self, positions: np.ndarray, t: float = 0.0) -> np.ndarray:
        return self.factor(t) * self.base.evaluate(positions, t)

    def gradient(self, positions: np.ndarray, t: float = 0.0) -> np.ndarray:
        return self.factor(t) * self.base.gradient(positions, t)


def evaluate_pressure(field, positions: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Pore pressure at each position; ``None`` means a dry body."""
    if field is None:
        return np.zeros(positions.shape[0])
    return field.evaluate(positions, t)


def scale_factor(scale, t: float) -> float:
    """Evaluate a time-scaling ``scale`` at ``t``: a callable is called, an
    (n, 2) table of (time, factor) rows is interpolated (held at the ends),
    and ``None`` means 1."""
    if scale is None:
        return 1.0
    if callable(scale):
        return float(scale(t))
    table = np.asarray(scale, dtype=np.float64)
    if table.ndim != 2 or table.shape[1] != 2 or table.shape[0] < 1:
        raise ConfigurationError(
            f"time-scale table must have shape (n, 2), got {table.shape}")
    return float(np.interp(t, table[:, 0], table[:, 1]))


def darcy_velocity(grad_p: np.ndarray, drag: float,
                   fluid_body_force: np.ndarray | None = None) -> np.ndarray:
    """Fluid seepage velocity from the momentum balance of the fluid phase,

        alpha v_f + grad p_f = rho_f b_f   =>   v_f = (rho_f b_f - grad p_f) / alpha

    for drag coefficient ``alpha > 0``. ``grad_p`` (and the optional fluid
    body-force density ``rho_f b_f``) may be a single 3-vector or (N, 3)."""
    if drag <= 0.0:
        raise ConfigurationError(f"darcy drag coefficient must be positive, got {drag}")
    g = np.asarray(grad_p, dtype=np.float64)
    v = -g / drag
    if fluid_body_force is not None:
        v = v + np.asarray(fluid_body_force, dtype=np.float64) / drag
    return v
