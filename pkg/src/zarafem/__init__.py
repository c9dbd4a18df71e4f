"""Adaptive iterative Galerkin FEM for quasilinear elliptic problems.

P1 finite elements on NVB-refined triangulations, damped Zarantonello
linearization, and mesh adaptation driven by the elliptic-reconstruction
residual estimator.
"""
from .mesh import (BoundaryLabel, DomainId, Mesh, build_initial_mesh, conformity_check,
                   mesh_size_function, refine_nvb, uniform_refine)
from .space import DofMap, FeFunction, build_dof_map, element_gradient, evaluate, prolongate
from .model import (Nonlinearity, ProblemSpec, ScalarProductSpec, benchmark1, benchmark2,
                    check_growth, cq, flux)
from .assembly import assemble_residual, assemble_scalar_product, energy_norm, h1_error
from .solver import solve_spd
from .estimators import IndicatorField, eta_indicators, restrict_total, zeta_indicators
from .driver import (AdaptiveParams, IterationRecord, RunLog, doerfler_mark, doerfler_monitor,
                     inner_loop, reference_discrete_solution, run, zarantonello_step)
from .report import RateFit, emit_csv, fit_rate, weighted_cost

__version__ = "0.1.0"
