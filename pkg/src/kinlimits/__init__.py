"""Kinetic-to-fluid limit verification toolkit.

Exact Gaussian-moment algebra for a BGK collision model, a discrete-velocity
solver for the scaled fluctuation equation on the 2D torus, stationary
incompressible reference solvers, and an epsilon-sweep harness.
"""

from .moment_algebra import VelocityPolynomial, gaussian_moment, inner_product, make_A, make_B
from .kinetic_model import (
    BgkOperator,
    RegimeClass,
    ScalingRegime,
    TensorMismatch,
    classify_regime,
    solve_hats,
    transport_coefficients,
)
from .kinetic_solver import KineticSolver, NotConverged, SolverConfig, StationarySolver, build_velocity_grid
from .fluid_reference import NoContraction, SingularMode, solve_stationary_nsf, solve_stationary_stokes
from .harness import EmptyInput, ExperimentConfig, SweepReport, cmd_sweep

__version__ = "0.1.0"
