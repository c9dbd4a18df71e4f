"""Conforming triangulations with newest-vertex-bisection refinement.

Every triangle is stored as ``(v0, v1, v2)`` in counterclockwise order.
Local vertex 0 is the newest vertex and the refinement edge is the edge
opposite to it, ``(v1, v2)``. Local edge ``i`` is the edge opposite to local
vertex ``i``::

    e0 = (v1, v2)    e1 = (v2, v0)    e2 = (v0, v1)

With this convention a bisection is a pure index rewrite: ``(a, b, c)`` with
midpoint ``m`` of ``(b, c)`` becomes ``(m, a, b)`` and ``(m, c, a)``.
"""
from __future__ import annotations

import itertools
from enum import Enum, IntEnum
from functools import cached_property

import numpy as np

__all__ = [
    "BoundaryLabel",
    "DomainId",
    "Mesh",
    "MeshError",
    "build_initial_mesh",
    "refine_nvb",
    "uniform_refine",
    "mesh_size_function",
    "conformity_check",
    "dump_mesh",
    "load_mesh",
]

_tags = itertools.count()


class MeshError(ValueError):
    pass


class BoundaryLabel(IntEnum):
    INTERIOR = 0
    DIRICHLET = 1
    NEUMANN = 2


class DomainId(str, Enum):
    ZSHAPE = "zshape"
    LSHAPE = "lshape"


class Mesh:
    """Immutable conforming triangulation.

    Parameters
    ----------
    vertices : (nv, 2) array
    triangles : (nt, 3) int array, counterclockwise, newest vertex first
    boundary_edges : (nb, 2) int array
        Every boundary edge exactly once.
    boundary_labels : (nb,) int array of :class:`BoundaryLabel`
    generation, parent : (nt,) int arrays, optional
        ``parent[i]`` is the index of the triangle of the previous mesh that
        triangle ``i`` descends from (``i`` itself for an initial mesh).
    history : tuple
        Chain of ``(coarse_tag, n_coarse_vertices, midpoint_edges)`` records
        from the initial mesh to this one, used for prolongation.
    """

    def __init__(self, vertices, triangles, boundary_edges, boundary_labels,
                 generation=None, parent=None, history=()):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int64).reshape(-1, 2)
        self.boundary_labels = np.ascontiguousarray(boundary_labels, dtype=np.int64)
        nt = len(self.triangles)
        self.generation = (np.zeros(nt, dtype=np.int64) if generation is None
                           else np.asarray(generation, dtype=np.int64))
        self.parent = (np.arange(nt, dtype=np.int64) if parent is None
                       else np.asarray(parent, dtype=np.int64))
        self.history = tuple(history)
        self.tag = next(_tags)
        for arr in (self.vertices, self.triangles, self.boundary_edges,
                    self.boundary_labels, self.generation, self.parent):
            arr.setflags(write=False)
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("vertex coordinates must be finite")
        if np.any(self.signed_areas <= 0):
            raise MeshError("triangles must have positive signed area")

    def __repr__(self):
        return f"Mesh(nv={self.n_vertices}, nt={self.n_triangles}, tag={self.tag})"

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    # -- geometry ---------------------------------------------------------

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return self.signed_areas

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """Constant gradients of the three nodal basis functions, shape (nt, 3, 2)."""
        p = self.vertices[self.triangles]
        # gradient of barycentric i is the inward normal of edge i over its height
        e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
        rot = np.stack([-e[..., 1], e[..., 0]], axis=-1)
        return rot / (2.0 * self.signed_areas)[:, None, None]

    # -- topology ---------------------------------------------------------

    def _edge_keys(self, pairs):
        lo = np.minimum(pairs[..., 0], pairs[..., 1])
        hi = np.maximum(pairs[..., 0], pairs[..., 1])
        return lo * self.n_vertices + hi

    @cached_property
    def _edge_data(self):
        t = self.triangles
        local = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1)
        keys = self._edge_keys(local).ravel()
        ukeys, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        tri_edges = inverse.reshape(-1, 3)
        ne = len(ukeys)
        edges = local.reshape(-1, 2)[first]
        # edge2tri[:, 0] is the triangle whose local orientation defines the edge
        edge_tris = np.full((ne, 2), -1, dtype=np.int64)
        owner = np.arange(3 * len(t)) // 3
        edge_tris[inverse[first], 0] = owner[first]
        others = np.ones(len(keys), dtype=bool)
        others[first] = False
        second = np.nonzero(others)[0]
        if np.any(np.bincount(inverse, minlength=ne) > 2):
            raise MeshError("an edge is shared by more than two triangles")
        edge_tris[inverse[second], 1] = owner[second]

        labels = np.zeros(ne, dtype=np.int64)
        if len(self.boundary_edges):
            bidx = np.searchsorted(ukeys, self._edge_keys(self.boundary_edges))
            bidx = np.minimum(bidx, ne - 1)
            if not np.array_equal(ukeys[bidx], self._edge_keys(self.boundary_edges)):
                raise MeshError("boundary edge list contains a non-edge")
            labels[bidx] = self.boundary_labels
        for arr in (edges, tri_edges, edge_tris, labels, ukeys):
            arr.setflags(write=False)
        return edges, tri_edges, edge_tris, labels, ukeys

    @property
    def edges(self) -> np.ndarray:
        """(ne, 2) vertex indices, oriented as in the first adjacent triangle."""
        return self._edge_data[0]

    @property
    def tri_edges(self) -> np.ndarray:
        """(nt, 3) edge index of local edge i (opposite local vertex i)."""
        return self._edge_data[1]

    @property
    def edge_tris(self) -> np.ndarray:
        """(ne, 2) adjacent triangles; second column is -1 on the boundary."""
        return self._edge_data[2]

    @property
    def edge_labels(self) -> np.ndarray:
        return self._edge_data[3]

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def edge_normals(self) -> np.ndarray:
        """Unit normals pointing out of ``edge_tris[:, 0]``."""
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        # edges inherit the counterclockwise orientation of their first triangle
        n = np.stack([d[:, 1], -d[:, 0]], axis=1)
        return n / self.edge_lengths[:, None]

    @cached_property
    def dirichlet_vertices(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        dir_edges = self.boundary_edges[self.boundary_labels == BoundaryLabel.DIRICHLET]
        mask[dir_edges.ravel()] = True
        mask.setflags(write=False)
        return mask

    def edge_index(self, pairs) -> np.ndarray:
        """Edge indices of vertex pairs; raises if a pair is not an edge."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        ukeys = self._edge_data[4]
        keys = self._edge_keys(pairs)
        idx = np.minimum(np.searchsorted(ukeys, keys), len(ukeys) - 1)
        if not np.array_equal(ukeys[idx], keys):
            raise MeshError("not an edge of the mesh")
        return idx


def conformity_check(mesh: Mesh) -> None:
    """Raise :class:`MeshError` unless the mesh is a conforming triangulation
    whose boundary edges are exactly the labelled ones."""
    et = mesh.edge_tris
    on_boundary = et[:, 1] < 0
    labels = mesh.edge_labels
    if np.any(labels[on_boundary] == BoundaryLabel.INTERIOR):
        raise MeshError("hanging vertex or unlabelled boundary edge")
    if np.any(labels[~on_boundary] != BoundaryLabel.INTERIOR):
        raise MeshError("interior edge carries a boundary label")
    if np.count_nonzero(on_boundary) != len(mesh.boundary_edges):
        raise MeshError("boundary edge list does not match the mesh boundary")
    if np.any(mesh.signed_areas <= 0):
        raise MeshError("non-positive triangle area")
    t = mesh.triangles
    if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
        raise MeshError("repeated vertex index in a triangle")


def _orient_longest_edge(vertices, triangles):
    """Rotate each (counterclockwise) triangle so that local vertex 0 faces the
    longest edge; ties go to the smaller sorted vertex-index pair."""
    out = []
    for tri in triangles:
        best = None
        for i in range(3):
            a, b = tri[(i + 1) % 3], tri[(i + 2) % 3]
            length = np.hypot(*(vertices[a] - vertices[b]))
            key = (-round(length, 12), tuple(sorted((a, b))))
            if best is None or key < best[0]:
                best = (key, i)
        i = best[1]
        out.append([tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]])
    return np.array(out, dtype=np.int64)


def build_initial_mesh(domain) -> Mesh:
    """Coarse mesh of the Z-shaped or L-shaped benchmark domain.

    ZShape: (-1,1)^2 minus conv{(0,0), (-1,0), (-1,-1)}, seven right
    triangles bisected once (14 elements, 3 interior vertices), homogeneous
    Dirichlet everywhere. The triangle conv{(1,0), (1,1), (0,1)} is the
    union of two elements.

    LShape: (-1,1)^2 minus [0,1]x[-1,0], three unit squares cut along the
    diagonal through the origin. The two edges meeting at the re-entrant
    corner are Dirichlet, the rest of the boundary is Neumann.
    """
    domain = DomainId(domain)
    D, N = BoundaryLabel.DIRICHLET, BoundaryLabel.NEUMANN
    if domain is DomainId.ZSHAPE:
        #           A        B        C       D        E        O       P       Q       R
        v = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1], [-1, 0], [0, 0], [1, 0], [0, 1], [0, -1]],
                     dtype=float)
        A, B, C, Dv, E, O, P, Q, R = range(9)
        tris = [[P, C, Q], [O, P, Q], [O, Q, Dv], [O, Dv, E], [O, A, R], [O, R, B], [O, B, P]]
        bnd = [[A, R], [R, B], [B, P], [P, C], [C, Q], [Q, Dv], [Dv, E], [E, O], [O, A]]
        labels = [D] * len(bnd)
    else:
        v = np.array([[-1, -1], [0, -1], [0, 0], [1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0]],
                     dtype=float)
        A, B, O, P, C, Q, Dv, E = range(8)
        tris = [[A, B, O], [A, O, E], [E, O, Dv], [O, Q, Dv], [O, P, C], [O, C, Q]]
        bnd = [[A, B], [B, O], [O, P], [P, C], [C, Q], [Q, Dv], [Dv, E], [E, A]]
        labels = [N, D, D, N, N, N, N, N]
    tris = _orient_longest_edge(v, tris)
    mesh = Mesh(v, tris, bnd, labels)
    if domain is DomainId.ZSHAPE:
        # the seven-triangle layout has no interior vertex; bisect once so
        # that the initial space is nontrivial
        mesh = uniform_refine(mesh)
        mesh = Mesh(mesh.vertices, mesh.triangles, mesh.boundary_edges, mesh.boundary_labels)
    conformity_check(mesh)
    return mesh


def refine_nvb(mesh: Mesh, marked) -> Mesh:
    """Coarsest conforming NVB refinement bisecting every marked triangle.

    Closure propagates marks to refinement edges until every triangle with a
    marked edge also has its refinement edge marked; each triangle is then
    bisected once, and its children once more where their refinement edge
    (an edge of the parent) is marked.
    """
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray) else marked,
                                  dtype=np.int64))
    if marked.size == 0:
        return mesh
    if marked[0] < 0 or marked[-1] >= mesh.n_triangles:
        raise IndexError("marked triangle index out of range")

    te = mesh.tri_edges
    edges = mesh.edges
    edge_marked = np.zeros(len(edges), dtype=bool)
    edge_marked[te[marked, 0]] = True
    while True:
        need = edge_marked[te].any(axis=1) & ~edge_marked[te[:, 0]]
        if not need.any():
            break
        edge_marked[te[need, 0]] = True

    nv = mesh.n_vertices
    marked_edges = np.nonzero(edge_marked)[0]
    midpoint = np.full(len(edges), -1, dtype=np.int64)
    midpoint[marked_edges] = nv + np.arange(len(marked_edges))
    new_vertices = 0.5 * (mesh.vertices[edges[marked_edges, 0]]
                          + mesh.vertices[edges[marked_edges, 1]])
    vertices = np.vstack([mesh.vertices, new_vertices])

    t = mesh.triangles
    split = edge_marked[te[:, 0]]
    keep = np.nonzero(~split)[0]
    s = np.nonzero(split)[0]
    a, b, c = t[s, 0], t[s, 1], t[s, 2]
    m0 = midpoint[te[s, 0]]
    # children (m0, a, b) and (m0, c, a); their refinement edges are the
    # parent's e2 and e1
    child = np.concatenate([np.stack([m0, a, b], axis=1), np.stack([m0, c, a], axis=1)])
    child_mid = np.concatenate([midpoint[te[s, 2]], midpoint[te[s, 1]]])
    child_parent = np.concatenate([s, s])
    child_gen = np.concatenate([mesh.generation[s], mesh.generation[s]]) + 1

    again = child_mid >= 0
    once = ~again
    g = child[again]
    mm = child_mid[again]
    grand = np.concatenate([np.stack([mm, g[:, 0], g[:, 1]], axis=1),
                            np.stack([mm, g[:, 2], g[:, 0]], axis=1)])
    grand_parent = np.concatenate([child_parent[again], child_parent[again]])
    grand_gen = np.concatenate([child_gen[again], child_gen[again]]) + 1

    triangles = np.concatenate([t[keep], child[once], grand])
    parent = np.concatenate([keep, child_parent[once], grand_parent])
    generation = np.concatenate([mesh.generation[keep], child_gen[once], grand_gen])

    be = mesh.boundary_edges
    bmid = midpoint[mesh.edge_index(be)]
    bsplit = bmid >= 0
    bnd = np.concatenate([be[~bsplit],
                          np.stack([be[bsplit, 0], bmid[bsplit]], axis=1),
                          np.stack([bmid[bsplit], be[bsplit, 1]], axis=1)])
    blab = np.concatenate([mesh.boundary_labels[~bsplit],
                           mesh.boundary_labels[bsplit], mesh.boundary_labels[bsplit]])

    step = (mesh.tag, nv, edges[marked_edges].copy())
    return Mesh(vertices, triangles, bnd, blab, generation=generation, parent=parent,
                history=mesh.history + (step,))


def uniform_refine(mesh: Mesh) -> Mesh:
    return refine_nvb(mesh, np.arange(mesh.n_triangles))


def mesh_size_function(mesh: Mesh) -> np.ndarray:
    """Local mesh size ``|T|^(1/2)`` per triangle."""
    return np.sqrt(mesh.areas)


def dump_mesh(mesh: Mesh, path) -> None:
    """Write the plain-text format ``v x y`` / ``t i j k l0 l1 l2``."""
    labels = mesh.edge_labels[mesh.tri_edges]
    with open(path, "w") as fh:
        for x, y in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r}\n")
        for (i, j, k), (l0, l1, l2) in zip(mesh.triangles, labels):
            fh.write(f"t {i} {j} {k} {l0} {l1} {l2}\n")


def load_mesh(path) -> Mesh:
    vertices, triangles, labels = [], [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vertices.append([float(parts[1]), float(parts[2])])
            elif parts[0] == "t":
                triangles.append([int(p) for p in parts[1:4]])
                labels.append([int(p) for p in parts[4:7]])
            else:
                raise MeshError(f"unknown record {parts[0]!r}")
    bnd, blab = [], []
    for (i, j, k), lab in zip(triangles, labels):
        for (a, b), l in zip(((j, k), (k, i), (i, j)), lab):
            if l != BoundaryLabel.INTERIOR:
                bnd.append([a, b])
                blab.append(l)
    return Mesh(np.array(vertices), np.array(triangles), np.array(bnd).reshape(-1, 2), blab)
