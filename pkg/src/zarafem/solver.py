"""Linear solves with symmetric positive definite matrices."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = ["SolverError", "SpdFactor", "solve_spd", "pcg"]

DEFAULT_RTOL = 1e-10


class SolverError(RuntimeError):
    pass


def pcg(M, b, rtol: float = DEFAULT_RTOL, x0=None, maxiter: int | None = None):
    """Jacobi-preconditioned conjugate gradients.

    Stops once ``||b - M x|| <= rtol ||b||``. Raises :class:`SolverError` on
    a non-positive curvature direction or when ``maxiter`` (default ``10 n``)
    is exhausted.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    maxiter = 10 * n if maxiter is None else maxiter
    diag = M.diagonal() if sp.issparse(M) else np.diag(M)
    if np.any(diag <= 0):
        raise SolverError("non-positive diagonal entry; matrix is not positive definite")
    inv_diag = 1.0 / diag
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - M @ x
    bnorm = np.linalg.norm(b)
    target = rtol * bnorm
    if bnorm == 0.0:
        return np.zeros(n)
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for it in range(maxiter):
        if np.linalg.norm(r) <= target:
            return x
        Mp = M @ p
        curv = p @ Mp
        if curv <= 0.0:
            raise SolverError(f"non-positive curvature p^T M p = {curv:.3e} at iteration {it}")
        step = rz / curv
        x += step * p
        r -= step * Mp
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(b - M @ x) <= target:
        return x
    raise SolverError(f"CG did not reach rtol={rtol:g} in {maxiter} iterations")


class SpdFactor:
    """Sparse LU factorization reused across right-hand sides.

    Each solve is followed by up to three steps of iterative refinement so the
    relative residual contract ``||M x - b|| <= rtol ||b||`` holds.
    """

    def __init__(self, M):
        self.M = sp.csc_matrix(M)
        if self.M.shape[0] != self.M.shape[1]:
            raise SolverError("matrix must be square")
        if np.any(self.M.diagonal() <= 0):
            raise SolverError("non-positive diagonal entry; matrix is not positive definite")
        try:
            self._lu = spla.splu(self.M, permc_spec="MMD_AT_PLUS_A",
                                 options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}") from exc

    def solve(self, b, rtol: float = DEFAULT_RTOL) -> np.ndarray:
        if not 0.0 < rtol < 1.0:
            raise ValueError("rtol must lie in (0, 1)")
        b = np.asarray(b, dtype=float)
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return np.zeros_like(b)
        x = self._lu.solve(b)
        for _ in range(3):
            r = b - self.M @ x
            if np.linalg.norm(r) <= rtol * bnorm:
                break
            x = x + self._lu.solve(r)
        else:
            if np.linalg.norm(b - self.M @ x) > rtol * bnorm:
                raise SolverError("residual contract violated after iterative refinement")
        if not np.all(np.isfinite(x)) or x @ b <= 0.0:
            raise SolverError("x^T b <= 0 for b != 0; matrix is not positive definite")
        return x


def solve_spd(M, b, rtol: float = DEFAULT_RTOL, method: str = "direct") -> np.ndarray:
    """Solve ``M x = b`` with ``||M x - b||_2 <= rtol ||b||_2``.

    ``method`` is ``"direct"`` (sparse LU with iterative refinement) or
    ``"cg"`` (Jacobi-preconditioned CG); both are deterministic.
    """
    if not 0.0 < rtol < 1.0:
        raise ValueError("rtol must lie in (0, 1)")
    if method == "cg":
        return pcg(M, b, rtol)
    if method == "direct":
        return SpdFactor(M).solve(b, rtol)
    raise ValueError(f"unknown method {method!r}")
