"""Linear isotropic material model and the bond force states it induces.

The solid is parameterized by its bulk modulus ``k`` and shear modulus ``mu``.
For a bond ``xi`` from particle i with extension state ``e`` the force scalar
state is the classical linear one (unit influence function):

    e^d  = e - theta |xi| / 3                      deviatoric extension
    t    = (-3 p / m) |xi| + (15 mu / m) e^d       force scalar state
    T    = t M                                     force vector state

where ``m`` is the weighted volume, ``theta`` the dilatation, ``M`` the
deformed bond direction (reference direction when linearized), and ``p`` the
pressure. Pore fluid at pressure ``p_f`` offsets the pressure carried by the
solid skeleton,

    p = -k theta + gamma p_f,      gamma = 1 - K / K_solid,

so a positive pore pressure pushes bonded particles apart. ``gamma`` is the
fraction of the fluid pressure transmitted to the skeleton: 1 when the grains
are rigid relative to the bulk (the classical effective-stress limit), 0 when
the grains are as compressible as the bulk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import NeighborList, ParticleSet, row_sum
from .errors import ConfigurationError, SingularBondError


@dataclass(frozen=True)
class Material:
    """Isotropic elastic constants (any consistent unit system)."""

    bulk_modulus: float
    shear_modulus: float

    def __post_init__(self):
        if self.bulk_modulus <= 0.0:
            raise ConfigurationError(f"bulk_modulus must be positive, got {self.bulk_modulus}")
        if self.shear_modulus <= 0.0:
            raise ConfigurationError(f"shear_modulus must be positive, got {self.shear_modulus}")

    @classmethod
    def from_engineering(cls, young: float, poisson: float) -> "Material":
        if not -1.0 < poisson < 0.5:
            raise ConfigurationError(f"poisson ratio must lie in (-1, 0.5), got {poisson}")
        if young <= 0.0:
            raise ConfigurationError(f"young modulus must be positive, got {young}")
        return cls(bulk_modulus=young / (3.0 * (1.0 - 2.0 * poisson)),
                   shear_modulus=young / (2.0 * (1.0 + poisson)))

    @property
    def young(self) -> float:
        k, mu = self.bulk_modulus, self.shear_modulus
        return 9.0 * k * mu / (3.0 * k + mu)

    @property
    def poisson(self) -> float:
        k, mu = self.bulk_modulus, self.shear_modulus
        return (3.0 * k - 2.0 * mu) / (2.0 * (3.0 * k + mu))


def biot_coefficient(bulk_modulus: float, grain_bulk_modulus: float) -> float:
    """``gamma = 1 - K / K_solid`` for drained bulk modulus K and solid-grain
    modulus K_solid. K = 0 gives the granular limit gamma = 1; K = K_solid the
    rigid-skeleton limit gamma = 0; K > K_solid is rejected."""
    if grain_bulk_modulus <= 0.0:
        raise ConfigurationError(
            f"grain bulk modulus must be positive, got {grain_bulk_modulus}")
    if bulk_modulus < 0.0:
        raise ConfigurationError(f"bulk modulus must be nonnegative, got {bulk_modulus}")
    if bulk_modulus > grain_bulk_modulus:
        raise ConfigurationError(
            f"bulk modulus ({bulk_modulus}) exceeds the grain bulk modulus "
            f"({grain_bulk_modulus}); the pore-pressure factor would leave [0, 1]")
    return 1.0 - bulk_modulus / grain_bulk_modulus


@dataclass(frozen=True)
class EffectiveStress:
    """How strongly pore pressure enters the skeleton pressure.

    Three ways to resolve the factor: ``unit()`` (gamma = 1, fully
    transmitted), ``biot(K, K_solid)`` (gamma = 1 - K/K_solid), or
    ``explicit(gamma)``.
    """

    gamma: float
    mode: str = "explicit"

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(
                f"effective-stress factor gamma must lie in [0, 1], got {self.gamma}")

    @classmethod
    def unit(cls) -> "EffectiveStress":
        return cls(gamma=1.0, mode="unit")

    @classmethod
    def biot(cls, bulk_modulus: float, grain_bulk_modulus: float) -> "EffectiveStress":
        return cls(gamma=biot_coefficient(bulk_modulus, grain_bulk_modulus), mode="biot")

    @classmethod
    def explicit(cls, gamma: float) -> "EffectiveStress":
        return cls(gamma=float(gamma), mode="explicit")


def extension_state(particles: ParticleSet, neighbors: NeighborList,
                    u: np.ndarray, linearize: bool = False) -> np.ndarray:
    """Per-bond extension ``e``.

    Geometric: ``e = |y_j - y_i| - |xi|`` with ``y = x + u``. Linearized:
    ``e = (u_j - u_i) . xi / |xi|`` (exact to first order in the displacement
    gradient).
    """
    du = u[neighbors.indices] - u[neighbors.rows]
    if linearize:
        return (du * neighbors.dirs).sum(axis=1)
    dy = du + neighbors.dirs * neighbors.ref_len[:, None]
    return np.sqrt((dy * dy).sum(axis=1)) - neighbors.ref_len


def deformed_directions(particles: ParticleSet, neighbors: NeighborList,
                        u: np.ndarray) -> np.ndarray:
    """Unit vectors along the deformed bonds, ``M = (y_j - y_i)/|y_j - y_i|``."""
    y = particles.positions + u
    dy = y[neighbors.indices] - y[neighbors.rows]
    ylen = np.sqrt((dy * dy).sum(axis=1))
    bad = ylen <= 1e-12 * neighbors.ref_len
    if bad.any():
        b = int(np.nonzero(bad)[0][0])
        raise SingularBondError(int(neighbors.rows[b]), int(neighbors.indices[b]))
    return dy / ylen[:, None]


def dilatation(particles: ParticleSet, neighbors: NeighborList,
               m: np.ndarray, e: np.ndarray) -> np.ndarray:
    """theta_i = (3 / m_i) sum_j |xi| e V_j."""
    vals = neighbors.ref_len * e * particles.cell_volumes[neighbors.indices]
    return 3.0 / m * row_sum(neighbors.offsets, vals)


def peridynamic_pressure(theta: np.ndarray, material: Material,
                         pore_pressure: np.ndarray | None = None,
                         gamma: float = 1.0) -> np.ndarray:
    """p = -k theta + gamma p_f: positive in compression, so a positive pore
    pressure relieves the skeleton and induces expansion."""
    p = -material.bulk_modulus * theta
    if pore_pressure is not None:
        p = p + gamma * pore_pressure
    return p


def force_scalar_state(neighbors: NeighborList, m: np.ndarray, theta: np.ndarray,
                       e: np.ndarray, material: Material,
                       pore_pressure: np.ndarray | None = None,
                       gamma: float = 1.0) -> np.ndarray:
    """t = (-3 p / m) |xi| + (15 mu / m)(e - theta |xi| / 3), per bond, taken
    at the bond's source particle."""
    r = neighbors.rows
    p = peridynamic_pressure(theta, material, pore_pressure, gamma)
    dev = e - theta[r] * neighbors.ref_len / 3.0
    return (-3.0 * p[r] / m[r]) * neighbors.ref_len \
        + (15.0 * material.shear_modulus / m[r]) * dev


def force_vector_state(t: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """T = t M for per-bond directions M."""
    return t[:, None] * dirs


def internal_force(particles: ParticleSet, neighbors: NeighborList, m: np.ndarray,
                   u: np.ndarray, material: Material,
                   pore_pressure: np.ndarray | None = None,
                   gamma: float = 1.0, linearize: bool = False) -> np.ndarray:
    """Assembled internal force

        F_i = V_i sum_j (T_i<xi_ij> - T_j<xi_ji>) V_j

    built bond-by-bond from the force vector state. This is the plain,
    readable assembly; the solver uses fused kernels that must agree with it.
    """
    e = extension_state(particles, neighbors, u, linearize=linearize)
    theta = dilatation(particles, neighbors, m, e)
    t = force_scalar_state(neighbors, m, theta, e, material, pore_pressure, gamma)
    dirs = neighbors.dirs if linearize else deformed_directions(particles, neighbors, u)
    big_t = force_vector_state(t, dirs)
    vol = particles.cell_volumes
    contrib = big_t * (vol[neighbors.indices] * vol[neighbors.rows])[:, None]
    force = row_sum(neighbors.offsets, contrib)
    np.subtract.at(force, neighbors.indices, contrib)
    return force
