"""Hessian discretisations of fourth-order semilinear problems.

Morley, Adini and gradient-recovery schemes share one interface (per-cell
tables of the reconstructed value, gradient and Hessian), on top of which
the Navier-Stokes stream-function and von Karman problems are assembled,
solved by Newton's method and measured.
"""
from .core import (DiscreteField, ExactFunctionBundle, HessianDiscretisation, SmoothFunction,
                   build_hd, hd_norm, interpolate, reconstruct)
from .exact import get_case, validate_rhs
from .mesh import Mesh, MeshError, build_structured_mesh, mesh_sequence, red_refine
from .problems import ProblemSpec, ns_problem, vk_problem
from .solver import NewtonConfig, assemble_jacobian, assemble_residual, newton_solve, picard_step
from .study import ConvergenceReport, StudyConfig, compute_errors, run_convergence_study, write_csv

__version__ = "0.1.0"

__all__ = [
    "ConvergenceReport", "DiscreteField", "ExactFunctionBundle", "HessianDiscretisation", "Mesh",
    "MeshError", "NewtonConfig", "ProblemSpec", "SmoothFunction", "StudyConfig", "assemble_jacobian",
    "assemble_residual", "build_hd", "build_structured_mesh", "compute_errors", "get_case", "hd_norm",
    "interpolate", "mesh_sequence", "newton_solve", "ns_problem", "picard_step", "reconstruct",
    "red_refine", "run_convergence_study", "validate_rhs", "vk_problem", "write_csv",
]
