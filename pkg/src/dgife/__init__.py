"""Interior-penalty DG immersed finite elements for parabolic interface problems."""

from .assembly import DgSystem, LoadOperator, assemble_load, assemble_mass, assemble_stiffness, assemble_system
from .exceptions import (
    DegenerateCut,
    DgIfeError,
    HypothesisViolation,
    IfeConstructionError,
    InvalidArgument,
    InvalidConfiguration,
    SolverError,
)
from .harness import RunConfig, emit_table, run_convergence, run_single
from .ife import IfeSpace, build_ife_basis, build_space, build_standard_basis, eval_basis
from .linsolve import SolverConfig, solve
from .mesh import CartesianMesh, Domain, InterfaceCurve, build_mesh, classify_elements
from .norms import ErrorReport, error_norms, rates
from .problems import ellipse_problem, make_example
from .timestepping import TimeLadder, elliptic_projection, initial_interpolant, run_theta_scheme

__version__ = "0.1.0"
