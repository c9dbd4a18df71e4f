"""Residual indicators for the nonlinear problem (eta) and for the linearized
update problem (zeta, elliptic reconstruction).

Both follow the same recipe. For P1 functions and elementwise constant
``fvec`` the elementwise divergence of the discrete flux vanishes, so the
volume term is ``|T| ||f||^2`` unless the scalar-product weight varies inside
the element. Every interior edge contributes its full jump integral to both
neighbours, scaled by ``|T|^(1/2)`` of the receiving element. Neumann edges
contribute the misfit between datum and discrete normal flux; Dirichlet
edges contribute nothing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import EDGE_WEIGHTS, integrate, problem_data
from .mesh import BoundaryLabel, Mesh
from .model import ProblemSpec, ScalarProductSpec, flux
from .space import FeFunction, gradients

__all__ = [
    "IndicatorField",
    "eta_indicators",
    "zeta_indicators",
    "restrict_total",
    "residual_indicators",
]


@dataclass(frozen=True)
class IndicatorField:
    """Squared local indicators, one per triangle."""

    values: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sqrt(self.values.sum()))

    def __len__(self):
        return len(self.values)


def restrict_total(ind: IndicatorField, subset) -> float:
    idx = np.asarray(list(subset) if not isinstance(subset, np.ndarray) else subset, dtype=np.int64)
    if idx.size == 0:
        return 0.0
    return float(np.sqrt(ind.values[idx].sum()))


def residual_indicators(mesh: Mesh, problem: ProblemSpec, sigma: np.ndarray,
                        grad_z: np.ndarray | None = None, weight: np.ndarray | str | None = None,
                        volume_scale: float = 1.0, neumann_scale: float = 1.0) -> np.ndarray:
    """Squared indicators for the discrete flux ``A grad z + sigma``.

    Parameters
    ----------
    sigma : (nt, 2)
        Elementwise constant part of the flux.
    grad_z : (nt, 2), optional
        Elementwise gradient multiplied by the weight ``A``.
    weight : (nt,) array, ``"exact"`` or None
        Elementwise constant ``A`` or the exact-solution weight
        ``mu(|grad u*|^2)`` evaluated pointwise. None means ``A = 1``.
    volume_scale, neumann_scale
        Multipliers of ``f`` and of the Neumann datum.
    """
    data = problem_data(mesh, problem)
    nq = len(EDGE_WEIGHTS)
    areas = mesh.areas

    # volume: |T| || -div(A grad z) - f ||^2 with div(sigma) = 0 on each element
    if grad_z is not None and isinstance(weight, str):
        rq = np.einsum("tqd,td->tq", data.exact_weight_grad_q, grad_z)
        if data.f_q is not None:
            rq = rq + volume_scale * data.f_q
        vol = areas * integrate(mesh, rq * rq)
    else:
        vol = areas * (volume_scale ** 2) * data.f_sq

    et = mesh.edge_tris
    t0, t1 = et[:, 0], et[:, 1]
    interior = t1 >= 0

    def side_flux(tri, edges):
        # (len(edges), nq, 2)
        out = np.repeat(sigma[tri][:, None, :], nq, axis=1)
        if grad_z is not None:
            if weight is None:
                a = np.ones((len(edges), nq))
            elif isinstance(weight, str):
                a = data.exact_weight_edge_q[edges]
            else:
                a = np.repeat(np.asarray(weight)[tri][:, None], nq, axis=1)
            out = a[..., None] * grad_z[tri][:, None, :] + out
        return out

    normals = mesh.edge_normals
    lengths = mesh.edge_lengths
    ind = vol.copy()
    sqrt_area = np.sqrt(areas)

    ie = np.nonzero(interior)[0]
    if ie.size:
        jump = np.einsum("eqd,ed->eq", side_flux(t0[ie], ie) - side_flux(t1[ie], ie), normals[ie])
        jint = lengths[ie] * ((jump * jump) @ EDGE_WEIGHTS)
        ind += np.bincount(t0[ie], weights=sqrt_area[t0[ie]] * jint, minlength=len(areas))
        ind += np.bincount(t1[ie], weights=sqrt_area[t1[ie]] * jint, minlength=len(areas))

    ne = data.neumann_edges
    if ne.size:
        assert np.all(mesh.edge_labels[ne] == BoundaryLabel.NEUMANN)
        res = neumann_scale * data.neumann_q - np.einsum(
            "eqd,ed->eq", side_flux(t0[ne], ne), normals[ne])
        rint = lengths[ne] * ((res * res) @ EDGE_WEIGHTS)
        ind += np.bincount(t0[ne], weights=sqrt_area[t0[ne]] * rint, minlength=len(areas))
    return ind


def _sigma(problem: ProblemSpec, v: FeFunction) -> np.ndarray:
    data = problem_data(v.mesh, problem)
    return flux(problem.nonlinearity, gradients(v)) - data.fvec


def eta_indicators(mesh: Mesh, problem: ProblemSpec, v: FeFunction) -> IndicatorField:
    """Standard residual indicators of the nonlinear problem at ``v``."""
    if v.mesh is not mesh:
        raise ValueError("v does not live on this mesh")
    return IndicatorField(residual_indicators(mesh, problem, _sigma(problem, v)))


def zeta_indicators(mesh: Mesh, problem: ProblemSpec, spec, w: FeFunction,
                    z: FeFunction) -> IndicatorField:
    """Reconstruction indicators of the update ``z`` at linearization point ``w``.

    The flux is ``A grad z + mu(|grad w|^2) grad w - fvec`` with ``A`` the
    weight of the scalar product used to compute ``z``.
    """
    if w.mesh is not mesh or z.mesh is not mesh:
        raise ValueError("w and z must live on this mesh")
    spec = ScalarProductSpec(spec)
    gw = gradients(w)
    sigma = flux(problem.nonlinearity, gw) - problem_data(mesh, problem).fvec
    if spec is ScalarProductSpec.H1:
        weight = None
    elif spec is ScalarProductSpec.WEIGHTED_EXACT:
        weight = "exact"
    else:
        weight = problem.nonlinearity.mu(np.sum(gw * gw, axis=1))
    return IndicatorField(residual_indicators(mesh, problem, sigma, gradients(z), weight))
