"""P1 Lagrange spaces on :class:`~zarafem.mesh.Mesh` objects."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh

__all__ = [
    "DofMap",
    "FeFunction",
    "SpaceError",
    "build_dof_map",
    "interpolate",
    "zero_function",
    "prolongate",
    "element_gradient",
    "gradients",
    "evaluate",
    "locate",
]


class SpaceError(ValueError):
    pass


@dataclass(frozen=True)
class DofMap:
    """Vertex-to-dof numbering; Dirichlet vertices map to ``-1``."""

    mesh_tag: int
    vertex_dof: np.ndarray
    free: np.ndarray

    @property
    def n_free(self) -> int:
        return len(self.free)

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Full vertex vector from free coefficients (constrained entries 0)."""
        out = np.zeros(len(self.vertex_dof))
        out[self.free] = x
        return out


def build_dof_map(mesh: Mesh) -> DofMap:
    constrained = mesh.dirichlet_vertices
    free = np.nonzero(~constrained)[0]
    if free.size == 0:
        raise SpaceError("empty space")
    vertex_dof = np.full(mesh.n_vertices, -1, dtype=np.int64)
    vertex_dof[free] = np.arange(free.size)
    free.setflags(write=False)
    vertex_dof.setflags(write=False)
    return DofMap(mesh.tag, vertex_dof, free)


class FeFunction:
    """P1 function given by its values at all vertices of ``mesh``."""

    __slots__ = ("mesh", "values")

    def __init__(self, mesh: Mesh, values):
        values = np.array(values, dtype=float)
        if values.shape != (mesh.n_vertices,):
            raise SpaceError(f"expected {mesh.n_vertices} coefficients, got {values.shape}")
        if np.any(values[mesh.dirichlet_vertices] != 0.0):
            raise SpaceError("Dirichlet vertices must carry the value 0")
        values.setflags(write=False)
        self.mesh = mesh
        self.values = values

    def __add__(self, other: "FeFunction") -> "FeFunction":
        _same_mesh(self, other)
        return FeFunction(self.mesh, self.values + other.values)

    def __sub__(self, other: "FeFunction") -> "FeFunction":
        _same_mesh(self, other)
        return FeFunction(self.mesh, self.values - other.values)

    def __mul__(self, scalar: float) -> "FeFunction":
        return FeFunction(self.mesh, scalar * self.values)

    __rmul__ = __mul__

    def free_values(self, dofmap: DofMap) -> np.ndarray:
        return self.values[dofmap.free]

    @classmethod
    def from_free(cls, mesh: Mesh, dofmap: DofMap, x) -> "FeFunction":
        if dofmap.mesh_tag != mesh.tag:
            raise SpaceError("dof map belongs to a different mesh")
        return cls(mesh, dofmap.expand(x))


def _same_mesh(f, g):
    if f.mesh is not g.mesh:
        raise SpaceError("functions live on different meshes")


def zero_function(mesh: Mesh) -> FeFunction:
    return FeFunction(mesh, np.zeros(mesh.n_vertices))


def interpolate(mesh: Mesh, g) -> FeFunction:
    """Nodal interpolant of ``g(points) -> values``; Dirichlet vertices are set to 0."""
    values = np.asarray(g(mesh.vertices), dtype=float).copy()
    values[mesh.dirichlet_vertices] = 0.0
    return FeFunction(mesh, values)


def prolongate(f: FeFunction, fine: Mesh) -> FeFunction:
    """Represent ``f`` on a mesh obtained from ``f.mesh`` by NVB refinements.

    New vertices are edge midpoints, so their value is the mean of the
    endpoint values; coarse vertices keep their coefficients bitwise.
    """
    if fine is f.mesh:
        return f
    tags = [step[0] for step in fine.history]
    try:
        start = tags.index(f.mesh.tag)
    except ValueError:
        raise SpaceError("fine mesh is not a refinement of the function's mesh") from None
    values = f.values
    for _, nv, mid_edges in fine.history[start:]:
        if len(values) != nv:
            raise SpaceError("inconsistent refinement history")
        values = np.concatenate([values, 0.5 * (values[mid_edges[:, 0]] + values[mid_edges[:, 1]])])
    return FeFunction(fine, values)


def gradients(f: FeFunction) -> np.ndarray:
    """Elementwise constant gradients, shape (nt, 2)."""
    mesh = f.mesh
    return np.einsum("ti,tij->tj", f.values[mesh.triangles], mesh.basis_gradients)


def element_gradient(f: FeFunction, t: int) -> np.ndarray:
    mesh = f.mesh
    if not 0 <= t < mesh.n_triangles:
        raise IndexError("triangle index out of range")
    if mesh.areas[t] <= 0:
        raise SpaceError("degenerate triangle")
    return f.values[mesh.triangles[t]] @ mesh.basis_gradients[t]


def _barycentric(mesh: Mesh, points: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of each point w.r.t. each triangle, (np, nt, 3)."""
    p = mesh.vertices[mesh.triangles[tris]]
    g = mesh.basis_gradients[tris]
    rel = points[:, None, :] - p[None, :, 0, :]
    lam12 = np.einsum("pti,tji->ptj", rel, g[:, 1:, :])
    lam0 = 1.0 - lam12.sum(axis=-1)
    return np.concatenate([lam0[..., None], lam12], axis=-1)


def locate(mesh: Mesh, points, tol: float = 1e-12, chunk: int = 256):
    """Containing triangle and barycentric coordinates for each point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tri = np.empty(len(points), dtype=np.int64)
    bary = np.empty((len(points), 3))
    all_tris = np.arange(mesh.n_triangles)
    step = max(1, chunk * 4096 // max(mesh.n_triangles, 1))
    for s in range(0, len(points), step):
        lam = _barycentric(mesh, points[s:s + step], all_tris)
        score = lam.min(axis=-1)
        best = score.argmax(axis=1)
        if np.any(score[np.arange(len(best)), best] < -tol):
            raise SpaceError("point outside the domain")
        tri[s:s + step] = best
        bary[s:s + step] = lam[np.arange(len(best)), best]
    return tri, bary


def evaluate(f: FeFunction, points) -> np.ndarray:
    """Point values by barycentric interpolation on the containing triangle."""
    scalar = np.ndim(points) == 1
    tri, bary = locate(f.mesh, points)
    vals = np.einsum("pi,pi->p", f.values[f.mesh.triangles[tri]], bary)
    return vals[0] if scalar else vals
