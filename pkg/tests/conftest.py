import numpy as np
import pytest

from zarafem import DomainId, FeFunction, build_initial_mesh, refine_nvb


def random_mesh(domain, rng, steps=3, fraction=0.3):
    """Initial mesh refined ``steps`` times at random element subsets."""
    mesh = build_initial_mesh(domain)
    for _ in range(steps):
        n = max(1, int(fraction * mesh.n_triangles))
        mesh = refine_nvb(mesh, rng.choice(mesh.n_triangles, size=n, replace=False))
    return mesh


def random_function(mesh, rng, scale=1.0):
    values = scale * rng.standard_normal(mesh.n_vertices)
    values[mesh.dirichlet_vertices] = 0.0
    return FeFunction(mesh, values)


def sample_points(domain, rng, n):
    """Uniform points in the benchmark domain by rejection."""
    pts = []
    while sum(len(p) for p in pts) < n:
        x = rng.uniform(-1, 1, size=(2 * n, 2))
        if domain is DomainId.ZSHAPE:
            out = (x[:, 0] < 0) & (x[:, 1] < 0) & (x[:, 1] > x[:, 0])
        else:
            out = (x[:, 0] > 0) & (x[:, 1] < 0)
        pts.append(x[~out])
    return np.concatenate(pts)[:n]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[DomainId.ZSHAPE, DomainId.LSHAPE], ids=["zshape", "lshape"])
def domain(request):
    return request.param


def cw_indicators(mesh, problem, w, v, delta, weight=None):
    """Squared reconstruction indicators in the form ``zeta^CW(w; T, v)``.

    Loop-based evaluator for all-Dirichlet meshes and ``f = 0``: volume
    residuals of elementwise constant fluxes vanish, and each interior edge
    contributes ``|T|^(1/2) |e| jump^2`` of the constant normal jump of
    ``A grad(v - w) + delta (mu(|grad w|^2) grad w - fvec)``. ``weight`` is an
    elementwise constant ``A`` (None means 1).
    """
    assert problem.f_is_zero
    nl = problem.nonlinearity
    V = mesh.vertices

    def grad(values, tri):
        p = V[tri]
        A = np.column_stack([np.ones(3), p])
        return np.linalg.solve(A, values[tri])[1:]

    sigma = []
    for t, tri in enumerate(mesh.triangles):
        gw = grad(w.values, tri)
        gd = grad(v.values - w.values, tri)
        a = 1.0 if weight is None else weight[t]
        fv = problem.fvec(V[tri].mean(axis=0)[None, :])[0]
        sigma.append(a * gd + delta * (nl.mu(gw @ gw) * gw - fv))
    owners = {}
    for t, tri in enumerate(mesh.triangles):
        for k in range(3):
            owners.setdefault(tuple(sorted((tri[k], tri[(k + 1) % 3]))), []).append(t)
    out = np.zeros(mesh.n_triangles)
    for (i, j), ts in owners.items():
        if len(ts) != 2:
            continue
        d = V[j] - V[i]
        length = np.hypot(*d)
        n = np.array([d[1], -d[0]]) / length
        jump = (sigma[ts[0]] - sigma[ts[1]]) @ n
        for t in ts:
            p = V[mesh.triangles[t]]
            a, b = p[1] - p[0], p[2] - p[0]
            area = 0.5 * abs(a[0] * b[1] - a[1] * b[0])
            out[t] += np.sqrt(area) * length * jump ** 2
    return out


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
