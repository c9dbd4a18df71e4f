"""Quadrature, scalar-product matrices, residual vectors and error norms."""
from __future__ import annotations

from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from .mesh import BoundaryLabel, Mesh
from .model import ProblemSpec, ScalarProductSpec, flux
from .space import DofMap, FeFunction, gradients

__all__ = [
    "TRI_BARY",
    "TRI_WEIGHTS",
    "EDGE_POINTS",
    "EDGE_WEIGHTS",
    "ProblemData",
    "problem_data",
    "quadrature_points",
    "integrate",
    "element_weights",
    "assemble_scalar_product",
    "assemble_residual",
    "energy_norm",
    "h1_error",
]

# Symmetric 6-point rule, exact for polynomials of degree 4. Weights are
# relative to the element area (they sum to 1); no point sits on a vertex.
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
TRI_BARY = np.array([
    [1 - 2 * _A1, _A1, _A1], [_A1, 1 - 2 * _A1, _A1], [_A1, _A1, 1 - 2 * _A1],
    [1 - 2 * _A2, _A2, _A2], [_A2, 1 - 2 * _A2, _A2], [_A2, _A2, 1 - 2 * _A2],
])
TRI_WEIGHTS = np.array([_W1] * 3 + [_W2] * 3)
TRI_WEIGHTS = TRI_WEIGHTS / TRI_WEIGHTS.sum()

# 3-point Gauss-Legendre on [0, 1], weights sum to 1.
_gx, _gw = np.polynomial.legendre.leggauss(3)
EDGE_POINTS = 0.5 * (_gx + 1.0)
EDGE_WEIGHTS = 0.5 * _gw


def quadrature_points(mesh: Mesh) -> np.ndarray:
    """Physical element quadrature points, shape (nt, 6, 2)."""
    return np.einsum("qi,tid->tqd", TRI_BARY, mesh.vertices[mesh.triangles])


def integrate(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Elementwise integrals of quadrature-point values (nt, 6) -> (nt,)."""
    return mesh.areas * (values @ TRI_WEIGHTS)


class ProblemData:
    """Mesh-dependent evaluations of problem data that do not change with the
    iterate; built lazily and shared between assembly and estimators."""

    def __init__(self, mesh: Mesh, problem: ProblemSpec):
        self.mesh = mesh
        self.problem = problem

    @cached_property
    def qpoints(self) -> np.ndarray:
        return quadrature_points(self.mesh)

    @cached_property
    def f_q(self):
        if self.problem.f_is_zero:
            return None
        nt = self.mesh.n_triangles
        return np.asarray(self.problem.f(self.qpoints.reshape(-1, 2))).reshape(nt, -1)

    @cached_property
    def f_sq(self) -> np.ndarray:
        """``||f||^2_{L2(T)}`` per element."""
        if self.f_q is None:
            return np.zeros(self.mesh.n_triangles)
        return integrate(self.mesh, self.f_q ** 2)

    @cached_property
    def load(self) -> np.ndarray:
        """``int f phi_i`` over all vertices."""
        mesh = self.mesh
        out = np.zeros(mesh.n_vertices)
        if self.f_q is None:
            return out
        local = mesh.areas[:, None] * ((self.f_q * TRI_WEIGHTS) @ TRI_BARY)
        np.add.at(out, mesh.triangles, local)
        return out

    @cached_property
    def fvec(self) -> np.ndarray:
        return np.asarray(self.problem.fvec(self.mesh.centroids), dtype=float).reshape(-1, 2)

    @cached_property
    def neumann_edges(self) -> np.ndarray:
        mesh = self.mesh
        return np.nonzero(mesh.edge_labels == BoundaryLabel.NEUMANN)[0]

    @cached_property
    def neumann_q(self) -> np.ndarray:
        """Neumann datum at the edge Gauss points, shape (nN, 3)."""
        e = self.neumann_edges
        if e.size == 0:
            return np.zeros((0, len(EDGE_POINTS)))
        if self.problem.neumann is None:
            raise ValueError(f"{self.problem.name}: mesh has Neumann edges but no Neumann datum")
        pts = self.edge_qpoints[e]
        normals = np.repeat(self.mesh.edge_normals[e][:, None, :], len(EDGE_POINTS), axis=1)
        vals = self.problem.neumann(pts.reshape(-1, 2), normals.reshape(-1, 2))
        return np.asarray(vals).reshape(len(e), -1)

    @cached_property
    def neumann_load(self) -> np.ndarray:
        mesh = self.mesh
        out = np.zeros(mesh.n_vertices)
        e = self.neumann_edges
        if e.size == 0:
            return out
        lw = mesh.edge_lengths[e][:, None] * EDGE_WEIGHTS * self.neumann_q
        ends = mesh.edges[e]
        np.add.at(out, ends[:, 0], lw @ (1.0 - EDGE_POINTS))
        np.add.at(out, ends[:, 1], lw @ EDGE_POINTS)
        return out

    @cached_property
    def edge_qpoints(self) -> np.ndarray:
        mesh = self.mesh
        a = mesh.vertices[mesh.edges[:, 0]]
        b = mesh.vertices[mesh.edges[:, 1]]
        return a[:, None, :] + EDGE_POINTS[None, :, None] * (b - a)[:, None, :]

    @cached_property
    def exact_weight_q(self) -> np.ndarray:
        nt = self.mesh.n_triangles
        return self.problem.exact_weight(self.qpoints.reshape(-1, 2)).reshape(nt, -1)

    @cached_property
    def exact_weight_grad_q(self) -> np.ndarray:
        if self.problem.exact_weight_gradient is None:
            raise ValueError(f"{self.problem.name}: no gradient of the exact weight")
        nt = self.mesh.n_triangles
        return np.asarray(self.problem.exact_weight_gradient(
            self.qpoints.reshape(-1, 2))).reshape(nt, -1, 2)

    @cached_property
    def exact_weight_edge_q(self) -> np.ndarray:
        ne = len(self.mesh.edges)
        return self.problem.exact_weight(self.edge_qpoints.reshape(-1, 2)).reshape(ne, -1)

    @cached_property
    def exact_gradient_q(self) -> np.ndarray:
        if self.problem.exact_gradient is None:
            raise ValueError(f"{self.problem.name}: no exact solution")
        nt = self.mesh.n_triangles
        return np.asarray(self.problem.exact_gradient(self.qpoints.reshape(-1, 2))).reshape(nt, -1, 2)


@lru_cache(maxsize=8)
def problem_data(mesh: Mesh, problem: ProblemSpec) -> ProblemData:
    return ProblemData(mesh, problem)


def element_weights(mesh: Mesh, spec, problem=None, w: FeFunction | None = None) -> np.ndarray:
    """Elementwise mean of the diffusion weight ``A`` of the scalar product."""
    spec = ScalarProductSpec(spec)
    if spec is ScalarProductSpec.H1:
        return np.ones(mesh.n_triangles)
    if spec is ScalarProductSpec.WEIGHTED_EXACT:
        if problem is None or problem.exact_gradient is None:
            raise ValueError("the exact-weighted scalar product needs an exact gradient")
        return problem_data(mesh, problem).exact_weight_q @ TRI_WEIGHTS
    if w is None:
        raise ValueError("the iterate-weighted scalar product needs a linearization point")
    if problem is None:
        raise ValueError("the iterate-weighted scalar product needs the problem nonlinearity")
    g = gradients(w)
    return problem.nonlinearity.mu(np.sum(g * g, axis=1))


def _stiffness(mesh: Mesh, dofmap: DofMap, weights: np.ndarray) -> sp.csr_matrix:
    G = mesh.basis_gradients
    local = (mesh.areas * weights)[:, None, None] * np.einsum("tid,tjd->tij", G, G)
    dofs = dofmap.vertex_dof[mesh.triangles]
    rows = np.repeat(dofs, 3, axis=1).ravel()
    cols = np.tile(dofs, (1, 3)).ravel()
    keep = (rows >= 0) & (cols >= 0)
    n = dofmap.n_free
    M = sp.coo_matrix((local.ravel()[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    # exact symmetry regardless of duplicate-summation order
    return ((M + M.T) * 0.5).tocsr()


def assemble_scalar_product(mesh: Mesh, dofmap: DofMap, spec, problem: ProblemSpec | None = None,
                            w: FeFunction | None = None) -> sp.csr_matrix:
    """Matrix of ``a(v, w) = int A grad v . grad w`` on the free dofs.

    ``A`` is 1 (``h1``), ``mu(|grad u*|^2)`` (``mu``) or ``mu(|grad w|^2)``
    (``iterate``). Since P1 gradients are elementwise constant, only the
    element mean of ``A`` enters.
    """
    if dofmap.mesh_tag != mesh.tag:
        raise ValueError("dof map belongs to a different mesh")
    return _stiffness(mesh, dofmap, element_weights(mesh, spec, problem, w))


def assemble_residual(mesh: Mesh, dofmap: DofMap, problem: ProblemSpec, w: FeFunction) -> np.ndarray:
    """``<F - A w, phi_i>`` on the free dofs:
    ``int f phi_i + int (fvec - mu(|grad w|^2) grad w) . grad phi_i + int_{Gamma_N} phi phi_i``."""
    if w.mesh is not mesh:
        raise ValueError("w does not live on this mesh")
    data = problem_data(mesh, problem)
    sigma = data.fvec - flux(problem.nonlinearity, gradients(w))
    local = mesh.areas[:, None] * np.einsum("td,tid->ti", sigma, mesh.basis_gradients)
    b = np.zeros(mesh.n_vertices)
    np.add.at(b, mesh.triangles, local)
    b += data.load + data.neumann_load
    return b[dofmap.free]


def energy_norm(M, x) -> float:
    x = np.asarray(x, dtype=float)
    if M.shape[0] != x.shape[0]:
        raise ValueError("dimension mismatch")
    val = float(x @ (M @ x))
    if val < 0.0:
        if val < -1e-14 * max(1.0, float(np.abs(M).sum()) * float(x @ x)):
            raise ValueError("negative quadratic form; matrix is not positive definite")
        val = 0.0
    return float(np.sqrt(val))


def h1_error(mesh: Mesh, u: FeFunction, exact_gradient) -> float:
    """``||grad(u* - u)||_{L2}`` by element quadrature."""
    if exact_gradient is None:
        raise ValueError("no exact gradient")
    pts = quadrature_points(mesh)
    g = np.asarray(exact_gradient(pts.reshape(-1, 2))).reshape(mesh.n_triangles, -1, 2)
    diff = g - gradients(u)[:, None, :]
    return float(np.sqrt(integrate(mesh, np.sum(diff * diff, axis=-1)).sum()))
