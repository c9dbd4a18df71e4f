"""Adaptive iterative Galerkin loop: damped Zarantonello linearization on each
mesh, stopped once the update norm drops below ``lambda`` times the
reconstruction estimator, followed by Doerfler marking, NVB refinement and
nested iteration."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .assembly import assemble_residual, assemble_scalar_product, energy_norm, h1_error
from .estimators import IndicatorField, eta_indicators, restrict_total, zeta_indicators
from .mesh import Mesh, build_initial_mesh, refine_nvb
from .model import ProblemSpec, ScalarProductSpec
from .solver import DEFAULT_RTOL, SpdFactor
from .space import DofMap, FeFunction, build_dof_map, prolongate, zero_function

__all__ = [
    "AdaptiveParams",
    "IterationRecord",
    "LevelSummary",
    "RunLog",
    "ZarantonelloError",
    "zarantonello_step",
    "inner_loop",
    "doerfler_mark",
    "run",
    "reference_discrete_solution",
    "doerfler_monitor",
]

log = logging.getLogger(__name__)


class ZarantonelloError(RuntimeError):
    pass


@dataclass(frozen=True)
class AdaptiveParams:
    theta: float = 0.5
    lam: float = 0.1
    delta: float = 0.1
    scalar_product: ScalarProductSpec = ScalarProductSpec.H1
    max_dofs: int = 100_000
    max_inner: int = 500
    error_tol: Optional[float] = None
    solver_rtol: float = DEFAULT_RTOL
    max_levels: int = 10_000

    def __post_init__(self):
        object.__setattr__(self, "scalar_product", ScalarProductSpec(self.scalar_product))
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")
        if self.lam <= 0.0:
            raise ValueError("lambda must be positive")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.max_inner < 1 or self.max_dofs < 1:
            raise ValueError("max_inner and max_dofs must be positive")
        if not 0.0 < self.solver_rtol < 1.0:
            raise ValueError("solver_rtol must lie in (0, 1)")


@dataclass(frozen=True)
class IterationRecord:
    ell: int
    k: int
    abs_index: int
    ndofs: int
    zeta: float
    eta: float
    z_norm: float
    tildeZ: float
    h1_error: Optional[float]
    cum_cost: int
    wall_time: float


@dataclass
class LevelSummary:
    """Per-level data needed after the run (marking and effective bulk ratio)."""

    ell: int
    k_final: int
    ndofs: int
    n_triangles: int
    n_marked: int = 0
    eta_sq: float = 0.0
    eta_marked_sq: float = 0.0


@dataclass
class RunLog:
    params: AdaptiveParams
    problem: str
    records: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    termination: str = ""
    final_u: Optional[FeFunction] = None

    @property
    def k_underline(self) -> list:
        return [lv.k_final for lv in self.levels]

    def final_records(self) -> list:
        """Last record of every level."""
        last = {}
        for r in self.records:
            last[r.ell] = r
        return [last[ell] for ell in sorted(last)]


class _Operator:
    """Scalar-product matrix plus its factorization on one mesh."""

    def __init__(self, mesh, dofmap, spec, problem, w=None):
        self.M = assemble_scalar_product(mesh, dofmap, spec, problem, w)
        self.factor = SpdFactor(self.M)


def zarantonello_step(mesh: Mesh, dofmap: DofMap, M, problem: ProblemSpec, delta: float,
                      u_prev: FeFunction, rtol: float = DEFAULT_RTOL):
    """One damped update ``u_next = u_prev + delta z``.

    ``M`` is a scalar-product matrix or an already factorized
    :class:`~zarafem.solver.SpdFactor`.
    """
    factor = M if isinstance(M, SpdFactor) else SpdFactor(M)
    b = assemble_residual(mesh, dofmap, problem, u_prev)
    z = FeFunction.from_free(mesh, dofmap, factor.solve(b, rtol))
    return z, u_prev + delta * z


def doerfler_mark(ind, theta: float, cmark: float = 1.0) -> np.ndarray:
    """Minimal set ``M`` with ``theta * sum(ind) <= sum(ind[M])``.

    Greedy on the squared indicators sorted in decreasing order (stable, so
    ties go to the smaller index), which gives minimal cardinality
    (``cmark = 1``). ``theta = 1`` marks every triangle.
    """
    values = ind.values if isinstance(ind, IndicatorField) else np.asarray(ind, dtype=float)
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    if cmark < 1.0:
        raise ValueError("cmark must be >= 1")
    if theta == 1.0:
        return np.arange(len(values))
    total = values.sum()
    if total == 0.0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(-values, kind="stable")
    csum = np.cumsum(values[order])
    n = int(np.searchsorted(csum, theta * total, side="left")) + 1
    return np.sort(order[:min(n, len(values))])


@dataclass
class _LevelResult:
    u: FeFunction
    z: FeFunction
    zeta: IndicatorField
    eta: IndicatorField
    k: int
    status: str  # "stopped", "lucky_breakdown" or "inner_cap"


def inner_loop(mesh: Mesh, dofmap: DofMap, problem: ProblemSpec, params: AdaptiveParams,
               u0: FeFunction, ell: int = 0, records: list | None = None,
               counters: dict | None = None) -> _LevelResult:
    """Zarantonello iterations on a fixed mesh until
    ``||z||_a <= lambda * zeta(u^{k-1}; z^k)``.

    Appends one :class:`IterationRecord` per step to ``records``;
    ``counters`` carries ``abs_index``, ``cum_cost`` and ``t0`` across levels.
    """
    records = [] if records is None else records
    counters = {"abs_index": 0, "cum_cost": 0, "t0": time.perf_counter()} if counters is None \
        else counters
    spec = params.scalar_product
    fixed = None if spec is ScalarProductSpec.WEIGHTED_ITERATE else \
        _Operator(mesh, dofmap, spec, problem)
    u = u0
    k = 0
    while True:
        k += 1
        op = fixed if fixed is not None else _Operator(mesh, dofmap, spec, problem, u)
        z, u_next = zarantonello_step(mesh, dofmap, op.factor, problem, params.delta, u,
                                      params.solver_rtol)
        zeta = zeta_indicators(mesh, problem, spec, u, z)
        eta = eta_indicators(mesh, problem, u_next)
        z_norm = energy_norm(op.M, z.free_values(dofmap))
        zeta_total = zeta.total
        err = (h1_error(mesh, u_next, problem.exact_gradient)
               if problem.exact_gradient is not None else None)
        counters["cum_cost"] += dofmap.n_free
        records.append(IterationRecord(
            ell=ell, k=k, abs_index=counters["abs_index"], ndofs=dofmap.n_free,
            zeta=zeta_total, eta=eta.total, z_norm=z_norm, tildeZ=z_norm + zeta_total,
            h1_error=err, cum_cost=counters["cum_cost"],
            wall_time=time.perf_counter() - counters["t0"]))
        counters["abs_index"] += 1
        if z_norm == 0.0 and zeta_total == 0.0:
            return _LevelResult(u_next, z, zeta, eta, k, "lucky_breakdown")
        if z_norm <= params.lam * zeta_total:
            return _LevelResult(u_next, z, zeta, eta, k, "stopped")
        if k >= params.max_inner:
            return _LevelResult(u_next, z, zeta, eta, k, "inner_cap")
        u = u_next


def run(problem: ProblemSpec, params: AdaptiveParams, mesh: Mesh | None = None,
        u0: FeFunction | None = None) -> RunLog:
    """Full adaptive loop starting from the initial mesh of the problem's domain."""
    mesh = build_initial_mesh(problem.domain) if mesh is None else mesh
    u = zero_function(mesh) if u0 is None else u0
    runlog = RunLog(params=params, problem=problem.name)
    counters = {"abs_index": 0, "cum_cost": 0, "t0": time.perf_counter()}
    for ell in range(params.max_levels):
        dofmap = build_dof_map(mesh)
        res = inner_loop(mesh, dofmap, problem, params, u, ell, runlog.records, counters)
        last = runlog.records[-1]
        level = LevelSummary(ell=ell, k_final=res.k, ndofs=dofmap.n_free,
                             n_triangles=mesh.n_triangles, eta_sq=float(res.eta.values.sum()))
        runlog.levels.append(level)
        runlog.final_u = res.u
        log.info("level %d: ndofs=%d k=%d zeta=%.3e |z|=%.3e err=%s", ell, dofmap.n_free,
                 res.k, last.zeta, last.z_norm, last.h1_error)
        if res.status != "stopped":
            runlog.termination = res.status
            return runlog
        if params.error_tol is not None and last.h1_error is not None \
                and last.h1_error <= params.error_tol:
            runlog.termination = "error_tol"
            return runlog
        if dofmap.n_free > params.max_dofs:
            runlog.termination = "max_dofs"
            return runlog
        marked = doerfler_mark(res.zeta, params.theta)
        level.n_marked = len(marked)
        level.eta_marked_sq = float(res.eta.values[marked].sum())
        fine = refine_nvb(mesh, marked)
        u = prolongate(res.u, fine)
        mesh = fine
    runlog.termination = "max_levels"
    return runlog


def reference_discrete_solution(mesh: Mesh, problem: ProblemSpec, params: AdaptiveParams,
                                tol_ref: float = 1e-12, max_iter: int = 100_000,
                                u0: FeFunction | None = None) -> FeFunction:
    """Discrete solution on a fixed mesh: Zarantonello iteration until ``||z||_a <= tol_ref``."""
    if tol_ref > 1e-11:
        raise ValueError("tol_ref must be at most 1e-11")
    dofmap = build_dof_map(mesh)
    spec = params.scalar_product
    u = zero_function(mesh) if u0 is None else u0
    fixed = None if spec is ScalarProductSpec.WEIGHTED_ITERATE else \
        _Operator(mesh, dofmap, spec, problem)
    rtol = min(params.solver_rtol, 1e-13)
    for _ in range(max_iter):
        op = fixed if fixed is not None else _Operator(mesh, dofmap, spec, problem, u)
        z, u = zarantonello_step(mesh, dofmap, op.factor, problem, params.delta, u, rtol)
        if energy_norm(op.M, z.free_values(dofmap)) <= tol_ref:
            return u
    raise ZarantonelloError(f"no convergence to {tol_ref:g} within {max_iter} iterations")


def doerfler_monitor(runlog: RunLog) -> list:
    """Measured ratio ``eta(M, u)^2 / eta(u)^2`` at the final iterate of every
    refined level; None where undefined (no marking or vanishing eta)."""
    out = []
    for lv in runlog.levels:
        if lv.n_marked == 0 or lv.eta_sq == 0.0:
            out.append(None)
        else:
            out.append(lv.eta_marked_sq / lv.eta_sq)
    return out
