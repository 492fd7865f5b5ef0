"""peripore: meshfree nonlocal solid mechanics with pore-pressure effective stress.

A state-based bond model (linear peridynamic solid) discretized on regular
particle lattices, solved quasi-statically with matrix-free conjugate
gradients. Prescribed pore-pressure fields enter the skeleton force as
equivalent applied loads; four built-in benchmarks compare against closed-form
poroelastic solutions.
"""

from .backend import default_backend, get_kernels
from .benchmarks import (BenchmarkReport, BenchmarkSpec, benchmark_config,
                         harmonic_exact, lighthouse_exact, report_to_text,
                         report_to_tree, run_benchmark)
from .config import (ProblemSpec, build_problem, parse_config, run_problem,
                     serialize_config)
from .discretization import (NeighborList, ParticleSet, build_lattice,
                             build_neighbors, weighted_volume)
from .errors import (ConfigurationError, NonConvergenceError, PeriporeError,
                     SingularBondError, SingularOperatorError, SolveRefusalError)
from .fields import (AxialRampPressure, ConstantBodyForce, ConstantPressure,
                     HydrostaticPressure, RadialRampPressure, SpecificWeight,
                     TimeScaledPressure, darcy_velocity, evaluate_body_force,
                     evaluate_pressure)
from .material import (EffectiveStress, Material, biot_coefficient, dilatation,
                       extension_state, force_scalar_state, force_vector_state,
                       internal_force, peridynamic_pressure)
from .output import (ResultFrame, make_frame, read_csv, write_csv,
                     write_results, write_vtk)
from .solver import (BondSystem, BoundaryConditions, QuasistaticResult,
                     apply_bcs, build_bond_system, external_forces, residual,
                     solve_quasistatic)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
