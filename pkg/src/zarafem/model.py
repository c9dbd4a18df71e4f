"""Nonlinearities, the flux ``F(xi) = mu(|xi|^2) xi`` and the two benchmark problems."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .mesh import DomainId

__all__ = [
    "Nonlinearity",
    "ProblemSpec",
    "ScalarProductSpec",
    "GrowthConditionError",
    "flux",
    "check_growth",
    "cq",
    "exponential_nonlinearity",
    "rational_nonlinearity",
    "linear_nonlinearity",
    "benchmark1",
    "benchmark2",
    "zero_problem",
    "poisson_problem",
]


class GrowthConditionError(ValueError):
    pass


class ScalarProductSpec(str, Enum):
    H1 = "h1"
    WEIGHTED_EXACT = "mu"
    WEIGHTED_ITERATE = "iterate"


@dataclass(frozen=True)
class Nonlinearity:
    """Scalar nonlinearity ``mu`` with growth constants ``alpha`` and ``lipschitz``
    bounding the derivative of ``t -> mu(t^2) t``."""

    mu: Callable[[np.ndarray], np.ndarray]
    dmu: Callable[[np.ndarray], np.ndarray]
    alpha: float
    lipschitz: float
    name: str = ""


def flux(n: Nonlinearity, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    return n.mu(np.sum(xi * xi, axis=-1))[..., None] * xi


def check_growth(n: Nonlinearity, t_samples, tol: float = 1e-6, strict: bool = True):
    """Extreme divided differences of ``g(t) = mu(t^2) t`` over all sample pairs.

    Every divided difference over ``[s, t]`` is a convex combination of the
    ones between consecutive samples, so the extremes over all pairs are
    attained by neighbours.

    Returns
    -------
    (alpha_est, lipschitz_est)
        With ``strict`` a :class:`GrowthConditionError` names the offending
        pair if the estimates leave ``[alpha - tol, lipschitz + tol]``.
    """
    t = np.unique(np.asarray(t_samples, dtype=float))
    if t.size < 2 or t[0] < 0:
        raise ValueError("need at least two nonnegative samples")
    g = n.mu(t * t) * t
    dd = np.diff(g) / np.diff(t)
    lo, hi = int(dd.argmin()), int(dd.argmax())
    if strict:
        if dd[lo] < n.alpha - tol:
            raise GrowthConditionError(
                f"monotonicity fails on ({t[lo]}, {t[lo + 1]}): {dd[lo]} < {n.alpha}")
        if dd[hi] > n.lipschitz + tol:
            raise GrowthConditionError(
                f"Lipschitz bound fails on ({t[hi]}, {t[hi + 1]}): {dd[hi]} > {n.lipschitz}")
    return float(dd[lo]), float(dd[hi])


def cq(q: float) -> float:
    if q <= 0.5:
        raise ValueError("q must exceed 1/2")
    return 2.0 * ((2.0 * q - 1.0) / (2.0 * (q + 1.0))) ** (q + 1.0)


def exponential_nonlinearity() -> Nonlinearity:
    """``mu(t) = 1 + exp(-t)``."""
    return Nonlinearity(
        mu=lambda t: 1.0 + np.exp(-t),
        dmu=lambda t: -np.exp(-t),
        alpha=1.0 - 2.0 * math.exp(-1.5),
        lipschitz=2.0,
        name="1+exp(-t)",
    )


def rational_nonlinearity(tau: float = 0.01, q: float = 11 / 20) -> Nonlinearity:
    """``mu(t) = (c_q + tau)/(1 + c_q) + (1 - tau)/(1 + c_q) (1 + t)^(-q)``."""
    c = cq(q)
    a = (c + tau) / (1.0 + c)
    b = (1.0 - tau) / (1.0 + c)
    return Nonlinearity(
        mu=lambda t: a + b * (1.0 + t) ** (-q),
        dmu=lambda t: -q * b * (1.0 + t) ** (-q - 1.0),
        alpha=tau,
        lipschitz=1.0,
        name=f"rational(tau={tau}, q={q})",
    )


def linear_nonlinearity() -> Nonlinearity:
    return Nonlinearity(mu=lambda t: np.ones_like(np.asarray(t, dtype=float)),
                        dmu=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                        alpha=1.0, lipschitz=1.0, name="linear")


def _zero_scalar(x):
    return np.zeros(len(np.atleast_2d(x)))


def _zero_vector(x):
    return np.zeros((len(np.atleast_2d(x)), 2))


@dataclass(frozen=True)
class ProblemSpec:
    """Data of ``-div(mu(|grad u|^2) grad u) = f - div fvec``.

    Evaluators take points of shape (n, 2). ``fvec`` must be constant on every
    element of the initial mesh; it is sampled at element centroids.
    ``neumann(points, normals)`` gives the prescribed normal flux on Neumann
    edges. ``exact_weight_gradient`` is the gradient of
    ``mu(|grad u*|^2)``, needed by the reconstruction estimator for the
    exact-weighted scalar product.
    """

    name: str
    domain: DomainId
    nonlinearity: Nonlinearity
    f: Callable = _zero_scalar
    fvec: Callable = _zero_vector
    neumann: Optional[Callable] = None
    exact_gradient: Optional[Callable] = None
    exact_value: Optional[Callable] = None
    exact_weight_gradient: Optional[Callable] = None
    f_is_zero: bool = False
    suggested_delta: Optional[float] = None

    def exact_weight(self, x) -> np.ndarray:
        if self.exact_gradient is None:
            raise ValueError("problem has no exact solution")
        g = self.exact_gradient(x)
        return self.nonlinearity.mu(np.sum(g * g, axis=-1))


def _chi_omega(x):
    x = np.atleast_2d(x)
    inside = (x[:, 0] + x[:, 1] > 1.0) & (x[:, 0] <= 1.0) & (x[:, 1] <= 1.0)
    return inside.astype(float)


def benchmark1() -> ProblemSpec:
    """Z-shape, ``mu(t) = 1 + e^{-t}``, ``f = 0``, ``fvec = chi_omega (1, 1)``."""
    nl = exponential_nonlinearity()
    return ProblemSpec(
        name="benchmark1",
        domain=DomainId.ZSHAPE,
        nonlinearity=nl,
        fvec=lambda x: np.repeat(_chi_omega(x)[:, None], 2, axis=1),
        f_is_zero=True,
        suggested_delta=nl.alpha / nl.lipschitz ** 2,
    )


def _polar(x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.hypot(x[:, 0], x[:, 1])
    if np.any(r == 0.0):
        raise ValueError("evaluation at the singular point (0, 0)")
    phi = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2.0 * np.pi)
    return x, r, phi


def benchmark2(tau: float = 0.01, q: float = 11 / 20) -> ProblemSpec:
    """L-shape with mixed boundary conditions and ``u* = r^{2/3} sin(2 phi/3)``."""
    nl = rational_nonlinearity(tau, q)

    def grad_norm_sq(r):
        return (4.0 / 9.0) * r ** (-2.0 / 3.0)

    def m(r):
        return nl.mu(grad_norm_sq(r))

    def dm(r):
        # chain rule through t(r) = (4/9) r^(-2/3)
        return nl.dmu(grad_norm_sq(r)) * (-8.0 / 27.0) * r ** (-5.0 / 3.0)

    def exact_value(x):
        _, r, phi = _polar(x)
        return r ** (2.0 / 3.0) * np.sin(2.0 * phi / 3.0)

    def exact_gradient(x):
        _, r, phi = _polar(x)
        s = (2.0 / 3.0) * r ** (-1.0 / 3.0)
        return np.stack([-s * np.sin(phi / 3.0), s * np.cos(phi / 3.0)], axis=1)

    def f(x):
        _, r, phi = _polar(x)
        return -dm(r) * (2.0 / 3.0) * r ** (-1.0 / 3.0) * np.sin(2.0 * phi / 3.0)

    def neumann(x, normals):
        _, r, _ = _polar(x)
        return m(r) * np.sum(exact_gradient(x) * normals, axis=-1)

    def weight_gradient(x):
        x, r, _ = _polar(x)
        return (dm(r) / r)[:, None] * x

    return ProblemSpec(
        name="benchmark2",
        domain=DomainId.LSHAPE,
        nonlinearity=nl,
        f=f,
        neumann=neumann,
        exact_gradient=exact_gradient,
        exact_value=exact_value,
        exact_weight_gradient=weight_gradient,
        suggested_delta=1.5,
    )


def zero_problem(domain=DomainId.ZSHAPE) -> ProblemSpec:
    """Vanishing data; the exact solution is 0."""
    return ProblemSpec(name="zero", domain=DomainId(domain),
                       nonlinearity=exponential_nonlinearity(), f_is_zero=True)


def poisson_problem(domain=DomainId.ZSHAPE, source: float = 1.0) -> ProblemSpec:
    """Linear Poisson problem ``-Laplace u = source`` (``mu = 1``)."""
    return ProblemSpec(name="poisson", domain=DomainId(domain),
                       nonlinearity=linear_nonlinearity(),
                       f=lambda x: np.full(len(np.atleast_2d(x)), float(source)))
