import numpy as np
import pytest
import scipy.sparse as sp

from zarafem import solve_spd
from zarafem.solver import SolverError, SpdFactor, pcg


def random_spd(n, rng, density=0.05):
    A = sp.random(n, n, density=density, random_state=rng)
    return (A @ A.T + sp.identity(n)).tocsr()


def test_identity():
    b = np.arange(1.0, 6.0)
    np.testing.assert_array_equal(solve_spd(sp.identity(5, format="csr"), b), b)


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_random_spd_against_dense(method, rng):
    M = random_spd(200, rng)
    b = rng.standard_normal(200)
    x = solve_spd(M, b, rtol=1e-12, method=method)
    assert np.linalg.norm(M @ x - b) <= 1e-12 * np.linalg.norm(b)
    np.testing.assert_allclose(x, np.linalg.solve(M.toarray(), b), rtol=1e-8, atol=1e-10)


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_zero_rhs(method):
    x = solve_spd(sp.identity(4, format="csr"), np.zeros(4), method=method)
    assert np.all(x == 0)


def test_factor_reuse(rng):
    M = random_spd(50, rng)
    f = SpdFactor(M)
    for _ in range(3):
        b = rng.standard_normal(50)
        assert np.linalg.norm(M @ f.solve(b) - b) <= 1e-10 * np.linalg.norm(b)


def test_indefinite_rejected():
    M = sp.diags([1.0, -2.0]).tocsr()
    with pytest.raises(SolverError):
        solve_spd(M, np.ones(2))
    with pytest.raises(SolverError):
        pcg(M, np.ones(2))
    # positive diagonal but indefinite
    N = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(SolverError):
        solve_spd(N, np.array([1.0, -1.0]))
    with pytest.raises(SolverError):
        pcg(N, np.array([1.0, -1.0]))


def test_bad_arguments():
    M = sp.identity(3, format="csr")
    with pytest.raises(ValueError):
        solve_spd(M, np.ones(3), rtol=0.0)
    with pytest.raises(ValueError):
        solve_spd(M, np.ones(3), method="qr")
    with pytest.raises(SolverError):
        SpdFactor(sp.csr_matrix(np.ones((2, 3))))


def test_tighter_tolerance_changes_solution_little(rng):
    M = random_spd(150, rng)
    b = rng.standard_normal(150)
    loose = solve_spd(M, b, rtol=1e-4, method="cg")
    tight = solve_spd(M, b, rtol=1e-10, method="cg")
    d = loose - tight
    assert np.sqrt(d @ (M @ d)) <= np.sqrt(loose @ (M @ loose))
