import numpy as np
import pytest

from zarafem import AdaptiveParams, benchmark1, benchmark2, emit_csv, fit_rate, run, weighted_cost
from zarafem.report import CSV_COLUMNS, cli_main, geometric_fit, read_csv, summarize


def test_fit_rate_exact_power_law():
    x = np.logspace(1, 6, 12)
    fit = fit_rate(x, 3.0 * x ** -0.5, window=8)
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log10(3.0), abs=1e-12)
    assert fit.residual < 1e-12 and fit.window == 8


def test_fit_rate_constant_and_noise(rng):
    x = np.logspace(1, 5, 10)
    assert fit_rate(x, np.full(10, 2.0)).slope == pytest.approx(0.0, abs=1e-12)
    noisy = x ** -0.3 * np.exp(0.01 * rng.standard_normal(10))
    assert fit_rate(x, noisy).slope == pytest.approx(-0.3, abs=0.02)


def test_fit_rate_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_rate([1, 2], [1, 2])
    with pytest.raises(ValueError):
        fit_rate([1, 2, 3], [1, 0, 1])
    with pytest.raises(ValueError):
        fit_rate([1, 2, 3], [1, 2])


def test_geometric_fit():
    n = np.arange(30)
    q, C, resid = geometric_fit(5.0 * 0.9 ** n)
    assert q == pytest.approx(0.9, rel=1e-12) and C == pytest.approx(5.0, rel=1e-12)
    assert resid < 1e-12
    # the envelope hides non-monotone wiggles
    wiggly = 0.8 ** n * np.where(n % 2, 1.5, 1.0)
    q, _, _ = geometric_fit(wiggly)
    assert q == pytest.approx(0.8, rel=0.02)


@pytest.fixture(scope="module")
def small_run():
    return run(benchmark2(), AdaptiveParams(delta=1.5, scalar_product="mu", max_dofs=400))


def test_csv_roundtrip(small_run, tmp_path):
    path = tmp_path / "run.csv"
    emit_csv(small_run, path)
    header = path.read_text().splitlines()[0]
    assert header.split(",") == CSV_COLUMNS
    rows = read_csv(path)
    assert len(rows) == len(small_run.records)
    for row, rec in zip(rows, small_run.records):
        assert row["zeta"] == rec.zeta and row["cum_cost"] == rec.cum_cost
        assert row["h1_error"] == rec.h1_error


def test_csv_without_exact_solution(tmp_path):
    log = run(benchmark1(), AdaptiveParams(delta=0.1, max_dofs=50))
    emit_csv(log, tmp_path / "b1.csv")
    assert all(r["h1_error"] is None for r in read_csv(tmp_path / "b1.csv"))
    with pytest.raises(ValueError):
        weighted_cost(log)


def test_weighted_cost(small_run):
    last = small_run.records[-1]
    assert weighted_cost(small_run) == pytest.approx(last.h1_error * np.sqrt(last.cum_cost))
    s = summarize(small_run)
    assert s["weighted_cost"] == weighted_cost(small_run)
    assert s["k_underline"] == small_run.k_underline


def test_cli_usage_error(capsys):
    assert cli_main([]) == 2
    assert cli_main(["--benchmark", "circle"]) == 2
    assert cli_main(["--benchmark", "zshape", "--sweep"]) == 2


def test_cli_runtime_error(capsys, tmp_path):
    assert cli_main(["--benchmark", "zshape", "--theta", "2",
                     "--output", str(tmp_path / "x.csv")]) == 3


def test_cli_run(tmp_path, capsys):
    out = tmp_path / "l.csv"
    code = cli_main(["--benchmark", "lshape", "--scalar-product", "mu", "--max-dofs", "200",
                     "--output", str(out)])
    assert code == 0
    assert out.exists()
    assert "weighted_cost" in capsys.readouterr().out


def test_cli_sweep(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = cli_main(["--benchmark", "lshape", "--sweep", "--sweep-lambdas", "0.1",
                     "--sweep-deltas", "1.5", "--error-tol", "0.1", "--output", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 3


def test_fit_rate_standard_error_matches_scipy(rng):
    from scipy.stats import linregress
    x = np.logspace(1, 5, 9)
    y = x ** -0.4 * np.exp(0.05 * rng.standard_normal(9))
    ref = linregress(np.log10(x), np.log10(y))
    fit = fit_rate(x, y)
    assert fit.slope == pytest.approx(ref.slope, rel=1e-12)
    assert fit.stderr == pytest.approx(ref.stderr, rel=1e-10)


@pytest.mark.slow
def test_h1_weighted_cost_decreases_with_damping_small_lambda():
    from zarafem.report import table1_sweep
    rows = table1_sweep(lambdas=(0.05,), deltas=(0.1, 0.5, 1.0, 1.5), scalar_products=("h1",))
    costs = [r["weighted_cost"] for r in rows]
    assert all(a > b for a, b in zip(costs, costs[1:]))
