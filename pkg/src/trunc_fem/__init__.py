"""TRUNC nonconforming finite elements for eps^2 Lap^2 u - Lap u = f with clamped boundary."""

from .assembly import DofMap, SparseSpdSystem, assemble, build_dof_map, interpolate
from .element import LocalDofLayout, ShapeSet, element_matrices, local_matrices
from .estimator import TruncSolver
from .mesh import SimplicialMesh, box_mesh, read_mesh, unit_box_mesh, write_mesh
from .postprocess import ConvergenceRecord, energy_error, rates
from .problems import ManufacturedProblem, layer_problem, make_problem, smooth_problem
from .quadrature import QuadratureRule, grundmann_moeller, rule_for_degree
from .simplex import Simplex, bary_frame, batch_frames
from .solver import SolveReport, dense_solve, pcg, solve
from .study import StudyConfig, run_study
from .verify import run_verify

__version__ = "0.1.0"

__all__ = [
    "ConvergenceRecord", "DofMap", "LocalDofLayout", "ManufacturedProblem", "QuadratureRule",
    "ShapeSet", "Simplex", "SimplicialMesh", "SolveReport", "SparseSpdSystem", "StudyConfig",
    "TruncSolver", "assemble", "bary_frame", "batch_frames", "box_mesh", "build_dof_map",
    "dense_solve", "element_matrices", "energy_error", "grundmann_moeller", "interpolate",
    "layer_problem", "local_matrices", "make_problem", "pcg", "rates", "read_mesh",
    "rule_for_degree", "run_study", "run_verify", "smooth_problem", "solve", "unit_box_mesh",
    "write_mesh",
]
