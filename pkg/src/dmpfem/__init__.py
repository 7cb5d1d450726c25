"""Spectral/hp finite elements for steady diffusion with decay, and maximum-principle audits."""
from .analysis import (
    DmpReport,
    FieldSolution,
    SweepTable,
    audit_dmp,
    error_norms,
    evaluate,
    scan_extrema,
    solve_problem,
    sweep,
)
from .assembly import Formulation, assemble_global, build_system
from .basis import SpectralBasis, gll_nodes, legendre
from .errors import (
    ComputationError,
    DegenerateCoefficientError,
    DmpFemError,
    FormulationError,
    InvalidArgumentError,
    MeshError,
)
from .mesh import Mesh, build_hole_mesh, build_interval_mesh, build_rect_mesh, jitter_mesh, refine
from .problem import ProblemSpec, canonical_problem
from .quadrature import gauss_rule
from .solver import SolveReport, solve_spd

__version__ = "0.1.0"
