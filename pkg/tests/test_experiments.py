import json

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.signal import argrelmax

from msfuzzy.cli import main
from msfuzzy.dynamics import get_dgp, simulate_ms
from msfuzzy.estimation import EstimationConfig
from msfuzzy.exceptions import UnknownLabel
from msfuzzy.experiments import (MonteCarloConfig, emit_density_grid, replication_seeds,
                                 run_gdp_case_study, run_monte_carlo)
from msfuzzy.indices import INDEX_NAMES
from msfuzzy.types import TimeSeries

SMALL = ["MS2--3", "MS3AR--8"]


@pytest.fixture(scope="module")
def small_report():
    return run_monte_carlo(SMALL, n_reps=4, T=100, seed=11)


def _read_dir(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_report_invariants(small_report):
    reps = small_report.replications
    assert len(reps) == 8
    for r in reps:
        for comp in ("ms_true", "fuzzy_true", "fuzzy_ms"):
            assert np.isnan(r[comp]) or 0.0 <= r[comp] <= 1.0
    for h in small_report.selection_histograms().values():
        assert sum(h.values()) == 4
    for v in small_report.success_rates().values():
        assert 0.0 <= v <= 100.0


def test_well_separated_models_are_recovered(small_report):
    summ = small_report.rand_summaries()
    assert summ[("MS3AR--8", "ms_true")][2] == 1.0
    assert small_report.success_rates()[("MS2--3", "PE")] == 100.0


def test_seeds_depend_only_on_coordinates():
    a = replication_seeds(0, 3, 5)
    b = replication_seeds(0, 3, 5)
    assert a[1:] == b[1:]
    assert a[0].generate_state(2).tolist() == b[0].generate_state(2).tolist()
    assert replication_seeds(0, 3, 6)[1] != a[1]


def test_bit_identical_reruns_and_job_counts(tmp_path, small_report):
    small_report.write(tmp_path / "a")
    run_monte_carlo(SMALL, n_reps=4, T=100, seed=11, jobs=2).write(tmp_path / "b")
    assert _read_dir(tmp_path / "a") == _read_dir(tmp_path / "b")
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 11 and manifest["n_reps"] == 4
    assert "timestamp" not in manifest
    one = run_monte_carlo(["MS2--1"], n_reps=1, T=100, seed=3)
    two = run_monte_carlo(["MS2--1"], n_reps=1, T=100, seed=3)
    assert one.replications == two.replications


def test_written_files(tmp_path, small_report):
    small_report.write(tmp_path)
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == ["manifest.json", "rand_summary.csv", "replications.csv",
                     "selected_k_hist.csv", "success_rates.csv"]
    head = (tmp_path / "replications.csv").read_text().splitlines()[0]
    assert head.split(",")[:4] == ["dgp", "rep", "failed", "converged"]


def test_density_grid(tmp_path):
    x, d = emit_density_grid("MS2--1", path=tmp_path / "d.csv")
    assert abs(trapezoid(d, x) - 1.0) < 1e-4
    x, d = emit_density_grid("MS3--4", grid=np.linspace(-3, 11, 4001))
    assert argrelmax(d)[0].size == 3
    with pytest.raises(UnknownLabel):
        emit_density_grid("MS9--1")


def test_case_study_pipeline_on_simulated_three_regimes(tmp_path):
    spec = get_dgp("MS3--8").spec
    y, _ = simulate_ms(spec, 150, 2)
    ts = TimeSeries(y.values, [f"q{i:03d}" for i in range(150)])
    bundle = run_gdp_case_study(ts, seed=1, n_sim=100, k_max=4,
                                estimation=EstimationConfig(n_restarts=3, std_errors=True),
                                out_dir=tmp_path)
    assert all(bundle["selected_k"][n] == 3 for n in INDEX_NAMES)
    assert bundle["homogeneity_pvalues"]["PC"] == pytest.approx(1 / 101)
    assert bundle["rand_ms3_fuzzy"]["ma1"] > 0.95
    np.testing.assert_allclose(bundle["fits"][3].spec.means, [8, 4, 0], atol=0.3)
    for name in ("index_table.csv", "homogeneity.csv", "smoothed_ms2.csv", "smoothed_ms3.csv",
                 "case_study.json"):
        assert (tmp_path / name).exists()
    saved = json.loads((tmp_path / "case_study.json").read_text())
    assert saved["n_obs"] == 150 and "std_errors" in saved["ms3"]


def test_config_defaults():
    cfg = MonteCarloConfig(("MS2--1",))
    assert cfg.n_reps == 200 and cfg.T == 100 and cfg.k_max == 6 and cfg.m == 2.0


# command-line surface

def test_cli_simulate_estimate_fuzzy(tmp_path, capsys):
    sim = tmp_path / "sim.csv"
    assert main(["simulate", "--dgp", "MS2--4", "--T", "120", "--seed", "3", "--out", str(sim)]) == 0
    lines = sim.read_text().splitlines()
    assert lines[0] == "t,y,state" and len(lines) == 121
    cfg = tmp_path / "est.json"
    cfg.write_text(json.dumps({"n_restarts": 2}))
    capsys.readouterr()
    assert main(["estimate", "--input", str(sim), "--column", "y", "--k", "2", "--ar", "0",
                 "--config", str(cfg)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["means"][0] == pytest.approx(4.0, abs=0.3)
    assert main(["fuzzy", "--input", str(sim), "--column", "y", "--k", "2", "--m", "1.5",
                 "--out", str(tmp_path / "u.csv")]) == 0
    assert (tmp_path / "u.csv").exists()
    assert main(["select-k", "--input", str(sim), "--column", "y", "--kmax", "4"]) == 0
    assert main(["homogeneity", "--input", str(sim), "--column", "y", "--nsim", "100",
                 "--seed", "1", "--kmax", "3"]) == 0


def test_cli_montecarlo_and_density(tmp_path):
    assert main(["montecarlo", "--dgps", "MS2--3", "--reps", "2", "--T", "100", "--seed", "0",
                 "--out", str(tmp_path / "mc")]) == 0
    assert (tmp_path / "mc" / "manifest.json").exists()
    assert main(["density", "--dgp", "MS2AR--2", "--out", str(tmp_path / "d.csv")]) == 0
    assert (tmp_path / "d.csv").read_text().startswith("x,density\n")


def test_cli_exit_codes(tmp_path):
    assert main([]) == 1
    assert main(["simulate", "--dgp", "MS2--1"]) == 1
    assert main(["fuzzy", "--input", "x.csv", "--k", "two"]) == 1
    assert main(["density", "--dgp", "MS7--1", "--out", str(tmp_path / "d.csv")]) == 2
    assert main(["fuzzy", "--input", str(tmp_path / "missing.csv"), "--k", "2"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("date,y\nq1,1\nq2,oops\n")
    assert main(["fuzzy", "--input", str(bad), "--k", "2"]) == 2
    sim = tmp_path / "sim.csv"
    main(["simulate", "--dgp", "MS2--1", "--T", "60", "--seed", "0", "--out", str(sim)])
    strict = tmp_path / "strict.json"
    strict.write_text(json.dumps({"n_restarts": 1, "max_iter": 1, "strict": True}))
    assert main(["estimate", "--input", str(sim), "--column", "y", "--k", "2", "--ar", "0",
                 "--config", str(strict)]) == 3
