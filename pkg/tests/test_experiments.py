import csv
import io
import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from rank1_ldp import cli
from rank1_ldp import experiments as ex
from rank1_ldp.ratefn import RateParams, j_integral, rate_K


def read_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# -- helpers -----------------------------------------------------------------

def test_cell_seeds_are_distinct_and_stable():
    seeds = [ex.cell_seed(0, k) for k in range(100)]
    assert len(set(seeds)) == 100
    assert ex.cell_seed(0, 3) == seeds[3]
    assert all(0 <= s < 2 ** 64 for s in seeds)


def test_undeformed_labels():
    assert ex.limit_for(2, 0.0) == 2.0
    assert ex.rate_for(2, 0.0, 3.0) == j_integral(2, 3.0)
    assert ex.rate_for(2, 0.0, 1.0) == math.inf
    # continuity in theta towards the undeformed rate
    assert rate_K(RateParams(2, 1e-5), 3.0) == pytest.approx(j_integral(2, 3.0), abs=1e-9)


def test_threshold_for_rate():
    x = ex.threshold_for_rate(2, 2.0, 0.02)
    assert x > 2.5
    assert rate_K(RateParams(2, 2.0), x) == pytest.approx(0.02, abs=1e-12)
    with pytest.raises(ValueError):
        ex.threshold_for_rate(2, 2.0, 0.0)


def test_wilson_interval():
    lo, hi = ex.wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    lo, hi = ex.wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert 0.5 - lo == pytest.approx(hi - 0.5, abs=1e-12)
    with pytest.raises(ValueError):
        ex.wilson_interval(0, 0)


# -- runs --------------------------------------------------------------------

def test_as_limit_small_run():
    rep = ex.run_as_limit(2, [0.5, 1.0, 2.0], [60], 20, seed=1)
    assert [r["theory"] for r in rep.rows] == [2.0, 2.0, 2.5]
    for r in rep.rows:
        assert set(ex.COLUMNS["aslimit"]) <= set(r)
        assert r["passed"] == (r["abs_error"] <= r["tolerance"])
    with pytest.raises(ValueError):
        ex.run_as_limit(2, [], [60], 20, seed=1)


def test_ldp_slope_small_run():
    x = ex.threshold_for_rate(2, 2.0, 0.05)
    est = ex.run_ldp_slope(2, 2.0, x, [10, 20, 30], 2000, seed=3)
    assert est.rate_label == "deformed"
    assert len(est.p_hat) == 3
    assert math.isfinite(est.slope) and est.slope_se > 0
    for (lo, hi), p in zip(est.wilson, est.p_hat):
        assert lo <= p <= hi
    rep = ex.slope_report(est, seed=3)
    kinds = [r["row"] for r in rep.rows]
    assert kinds.count("tail") == 3 and kinds.count("at_limit") == 3 and kinds[-1] == "slope"
    assert all(r["theory"] is not None for r in rep.rows)
    assert rep.pass_count + rep.fail_count == 1


def test_ldp_slope_feasibility_guard():
    x = ex.threshold_for_rate(2, 2.0, 0.05)
    # K * N_max = 10 > log(1000 / 10)
    with pytest.raises(ex.InfeasibleExperiment, match="replicas are required"):
        ex.run_ldp_slope(2, 2.0, x, [50, 200], 1000, seed=0)
    with pytest.raises(ex.InfeasibleExperiment):
        ex.run_ldp_slope(2, 2.0, 2.5, [50], 1000, seed=0)


def test_ldp_slope_undeformed_label():
    x = ex.threshold_for_rate(2, 0.0, 0.05)
    assert rate_K(RateParams(2, 1e-6), x) == pytest.approx(0.05, abs=1e-6)
    est = ex.run_ldp_slope(2, 0.0, x, [10, 20], 500, seed=1)
    assert est.rate_label == "undeformed"
    assert est.rate_theory == pytest.approx(0.05, abs=1e-12)


def test_spherical_consistency_small_run():
    rep = ex.run_spherical_consistency(1, 0.5, [10, 20], 20_000, seed=2)
    assert rep.all_passed
    assert "gap_trend_slope" in rep.extras
    for r in rep.rows:
        assert r["gap"] == pytest.approx(abs(r["empirical"] - r["theory"]), abs=0)


def test_spherical_consistency_constant_spectrum():
    finite, mean, se = ex.spherical_gap([0.3] * 12, ex.SphericalParams(theta=0.5, beta=2),
                                        5000, seed=0)
    assert finite == pytest.approx(0.15, abs=1e-15)
    assert mean == pytest.approx(0.15, abs=1e-13)


def test_continuity_run():
    rep = ex.run_continuity(1, 1.0, 200, [0.2, 0.1, 0.05, 0.025], seed=0)
    assert rep.all_passed
    deltas = [r["empirical"] for r in rep.rows]
    assert deltas == sorted(deltas, reverse=True)
    budget = 200 ** -0.25
    assert all(r["dudley"] <= budget for r in rep.rows)


def test_continuity_zero_perturbation():
    rep = ex.run_continuity(1, 1.0, 50, [0.0], seed=0, jitter=0.0)
    assert rep.rows[0]["empirical"] == 0.0
    assert rep.rows[0]["dudley"] == 0.0
    with pytest.raises(ValueError):
        ex.run_continuity(1, 1.0, 50, [0.1], seed=0, kappa=0.6)


# -- reports -----------------------------------------------------------------

def test_report_round_trip_and_formatting():
    rep = ex.run_as_limit(1, [0.3], [20], 5, seed=0)
    rep.extras["note"] = np.float64(0.1)
    back = ex.ExperimentReport.from_json(rep.to_json())
    assert back.to_csv() == ex.ExperimentReport.from_json(back.to_json()).to_csv()
    assert back.rows == json_rows(rep)
    text = rep.to_csv()
    assert "np.float64" not in text
    assert text.splitlines()[0] == ",".join(ex.COLUMNS["aslimit"])
    summary = rep.summary()
    keys = [line.split("=", 1)[0] for line in summary.splitlines()]
    assert keys[0] == "experiment"
    assert {"pass_count", "fail_count", "elapsed_ms"} <= set(keys)
    assert "elapsed_ms" not in rep.summary(include_timing=False)


def json_rows(rep):
    return json.loads(json.dumps(rep.rows))


# -- command line ------------------------------------------------------------

def test_cli_rate(capsys):
    assert cli.main(["rate", "--beta", "2", "--theta", "2", "--x-grid", "1.5:3:0.5"]) == 0
    rows = read_rows(capsys.readouterr().out)
    assert [float(r["x"]) for r in rows] == [1.5, 2.0, 2.5, 3.0]
    assert rows[0]["F"] == "inf" and rows[0]["branch"] == "0"
    assert float(rows[2]["K"]) == pytest.approx(0.0, abs=1e-12)


def test_cli_rate_to_file(tmp_path):
    out = tmp_path / "r.csv"
    assert cli.main(["rate", "--beta", "1", "--theta", "0.5", "--x", "1.45", "--out", str(out)]) == 0
    rows = read_rows(out.read_text())
    assert float(rows[0]["K"]) == pytest.approx(j_integral(1, 1.45), abs=1e-10)


def test_cli_spherical_modes(tmp_path, capsys):
    spectrum_file = tmp_path / "eigs.txt"
    spectrum_file.write_text("1.0\n-1.0\n")
    assert cli.main(["spherical", "--beta", "1", "--theta", "0.5", "--spectrum", str(spectrum_file)]) == 0
    out = dict(line.split("=", 1) for line in capsys.readouterr().out.split())
    assert out["mode"] == "finite"
    assert float(out["v"]) == pytest.approx(0.6180339887498985, abs=1e-12)

    args = ["spherical", "--beta", "1", "--theta", "0.5", "--spectrum", str(spectrum_file),
            "--mode", "oracle", "--samples", "20000", "--seed", "4"]
    assert cli.main(args) == 0
    out = dict(line.split("=", 1) for line in capsys.readouterr().out.split())
    assert float(out["std_err"]) > 0

    assert cli.main(["spherical", "--beta", "2", "--theta", "2", "--mode", "limit", "--x", "3"]) == 0
    out = dict(line.split("=", 1) for line in capsys.readouterr().out.split())
    assert out["branch"] == "2"
    assert float(out["value"]) == pytest.approx(3.2714801524456893, abs=1e-9)

    assert cli.main(["spherical", "--beta", "1", "--theta", "0.5"]) == 2


def test_cli_sample(capsys):
    assert cli.main(["sample", "--beta", "2", "--theta", "2", "--n", "50", "--replicas", "3",
                     "--seed", "7"]) == 0
    rows = read_rows(capsys.readouterr().out)
    assert len(rows) == 3
    for r in rows:
        assert float(r["top_eigenvalue"]) >= float(r["second_eigenvalue"])
        assert 1.5 < float(r["bulk_edge_estimate"]) < 2.5


def test_cli_experiment_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli.main(["experiment", "--kind", "continuity", "--beta", "1", "--theta", "1",
                     "--n", "100", "--out-dir", str(out)])
    assert code == 0
    text = (out / "summary").read_text()
    assert text == capsys.readouterr().out
    assert "experiment=continuity" in text and "fail_count=0" in text
    header = (out / "cells.csv").read_text().splitlines()[0]
    assert header == ",".join(ex.COLUMNS["continuity"])


def test_cli_experiment_refusal(tmp_path, capsys):
    code = cli.main(["experiment", "--kind", "ldpslope", "--theta", "2", "--replicas", "100",
                     "--ns", "50,100,200", "--out-dir", str(tmp_path)])
    assert code == 2
    assert "replicas are required" in capsys.readouterr().err


@pytest.mark.skipif(shutil.which("rank1-ldp") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["rank1-ldp", "rate", "--beta", "2", "--theta", "0.5", "--x", "2.5"],
                         capture_output=True, text=True, check=True)
    rows = read_rows(res.stdout)
    assert float(rows[0]["K"]) == pytest.approx(0.48870563888, abs=1e-10)
