"""End-to-end checks of the ineq command-line tool."""

import csv
import filecmp
import io
import math
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

CLI = os.environ.get("INEQ_CLI", "ineq")
DATA = Path(__file__).resolve().parent.parent / "data"


def run(*args, check_code=0):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check_code is not None:
        assert proc.returncode == check_code, proc.stderr
    return proc


def read_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def survey_arrays():
    rows = list(csv.DictReader(open(DATA / "survey.csv")))
    y = np.array([float(r["income"]) for r in rows])
    w = np.array([float(r["weight"]) for r in rows])
    return y, w


def test_estimate_golden(tmp_path):
    out = tmp_path / "est.csv"
    run("estimate", "-i", DATA / "survey.csv", "--correct", "--strata", DATA / "strata.csv",
        "-m", "gini", "-m", "cv", "-m", "ge:0", "-m", "ge:2", "-m", "atkinson:1", "-o", out)
    assert out.read_bytes() == (DATA / "golden" / "estimate_survey.csv").read_bytes()


def test_estimate_matches_direct_formulas():
    y, w = survey_arrays()
    p = w / w.sum()
    mu = p @ y
    expected = {
        "gini": (p[:, None] * p[None, :] * np.abs(y[:, None] - y[None, :])).sum() / (2 * mu),
        "ge:0": -(p @ np.log(y / mu)),
        "ge:1": p @ (y / mu * np.log(y / mu)),
        "atkinson:0.5": 1 - (p @ np.sqrt(y)) ** 2 / mu,
        "atkinson:1": 1 - math.exp(p @ np.log(y)) / mu,
    }
    rows = read_rows(run("estimate", "-i", DATA / "survey.csv").stdout)
    assert [r["measure"] for r in rows] == list(expected)
    for r in rows:
        assert float(r["theta_hat"]) == pytest.approx(expected[r["measure"]], abs=1e-11)
        assert r["bias_hat"] == "NA" and r["theta_corrected"] == "NA"
        assert int(r["n_prime"]) == len(y)
    # V(mu_hat) does not depend on the measure
    assert len({r["v_mu"] for r in rows}) == 1


def test_estimate_correction_columns():
    rows = read_rows(run("estimate", "-i", DATA / "survey.csv", "--correct", "-m", "ge:0",
                         "-m", "ge:1", "-m", "atkinson:0.5").stdout)
    for r in rows:
        theta, bias, corrected = (float(r[k]) for k in ("theta_hat", "bias_hat", "theta_corrected"))
        assert corrected == pytest.approx(theta - bias, abs=2e-12)
    ge0 = rows[0]
    assert float(ge0["theta_corrected"]) >= float(ge0["theta_hat"])


def test_equal_incomes_give_zero():
    rows = read_rows(run("estimate", "-i", DATA / "equal_incomes.csv", "--correct",
                         "-m", "gini", "-m", "cv", "-m", "ge:0", "-m", "ge:2",
                         "-m", "atkinson:0.5").stdout)
    for r in rows:
        for key in ("theta_hat", "bias_hat", "theta_corrected"):
            assert r[key] == "0.000000000000"


@pytest.mark.parametrize(
    "args, code",
    [
        (("estimate", "-i", DATA / "bad_weight.csv"), 2),
        (("estimate", "-i", DATA / "missing_column.csv"), 2),
        (("estimate", "-i", DATA / "does_not_exist.csv"), 2),
        (("estimate", "-i", DATA / "survey.csv", "-m", "theil"), 2),
        (("estimate", "-i", DATA / "survey.csv", "--unknown-flag"), 2),
        (("estimate", "-i", DATA / "singleton_psu.csv", "--no-collapse"), 3),
        (("simulate", "-c", DATA / "bad_key.ini", "-o", "unused"), 2),
        (("simulate", "-c", DATA / "failing.ini", "-o", "unused"), 4),
        (("bootstrap", "-i", DATA / "survey.csv", "--B", "20"), 2),
        (("bootstrap", "-i", DATA / "survey.csv", "--B", "50",
          "--calibrate", DATA / "margins_inconsistent.csv"), 4),
    ],
)
def test_exit_codes(args, code, tmp_path):
    args = tuple(tmp_path / "x" if a == "unused" else a for a in args)
    proc = run(*args, check_code=None)
    assert proc.returncode == code, proc.stderr
    assert proc.stderr


def test_estimation_error_names_the_measure():
    proc = run("estimate", "-i", DATA / "singleton_psu.csv", "--no-collapse", "-m", "ge:1",
               check_code=3)
    assert "ge:1" in proc.stderr


def test_bootstrap_summary_matches_replicates(tmp_path):
    reps, summary = tmp_path / "reps.csv", tmp_path / "summary.csv"
    run("bootstrap", "-i", DATA / "survey.csv", "--B", "100", "--seed", "7", "--macro-strata",
        "region", "--calibrate", DATA / "margins.csv", "--strata", DATA / "strata.csv",
        "-o", reps, "--summary", summary)
    rep_rows = list(csv.DictReader(open(reps)))
    assert len(rep_rows) == 100
    for s in csv.DictReader(open(summary)):
        values = np.array([float(r[s["measure"]]) for r in rep_rows if r[s["measure"]] != "NA"])
        assert len(values) == int(s["replicates"])
        assert float(s["variance"]) == pytest.approx(values.var(ddof=1), rel=1e-10)
        assert float(s["sd"]) == pytest.approx(math.sqrt(float(s["variance"])), rel=1e-10)


def test_simulate_census_has_zero_arb(tmp_path):
    run("simulate", "-c", DATA / "census.ini", "-o", tmp_path)
    rows = list(csv.DictReader(open(tmp_path / "metrics.csv")))
    assert rows
    for r in rows:
        assert float(r["arb"]) == 0.0
        assert float(r["aare"]) == 0.0
    assert {p.name for p in tmp_path.iterdir()} == {
        "estimates.csv", "metrics.csv", "moments.csv", "manifest.json"}


def test_simulate_writes_fits_and_manifest(tmp_path):
    import json

    run("simulate", "-c", DATA / "srs_small.ini", "-o", tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 11
    assert len(manifest["config_sha256"]) == 64
    import hashlib

    assert manifest["config_sha256"] == hashlib.sha256((DATA / "srs_small.ini").read_bytes()).hexdigest()
    fits = list(csv.DictReader(open(tmp_path / "fits.csv")))
    assert {f["family"] for f in fits} == {"beta", "simplex", "l-logistic"}
    estimates = list(csv.DictReader(open(tmp_path / "estimates.csv")))
    assert len(estimates) == 200 * 5


def test_treat_roundtrip(tmp_path):
    out, fits = tmp_path / "treated.csv", tmp_path / "fits.csv"
    run("treat", "-i", DATA / "survey.csv", "-o", out, "--fits", fits)
    original = list(csv.DictReader(open(DATA / "survey.csv")))
    treated = list(csv.DictReader(open(out)))
    assert len(original) == len(treated)
    for a, b in zip(original, treated):
        assert a["person_id"] == b["person_id"] and a["gender"] == b["gender"]
        assert float(a["weight"]) == float(b["weight"])
    # the treated file is itself valid input
    run("estimate", "-i", out)


COMMANDS = {
    "estimate": lambda d: ("estimate", "-i", DATA / "survey.csv", "--correct", "--treat",
                           "-o", d / "out.csv"),
    "bootstrap": lambda d: ("bootstrap", "-i", DATA / "survey.csv", "--B", "60", "--seed", "3",
                            "--macro-strata", "region", "-o", d / "reps.csv",
                            "--summary", d / "summary.csv"),
    "simulate": lambda d: ("simulate", "-c", DATA / "srs_small.ini", "-o", d / "sim"),
    "treat": lambda d: ("treat", "-i", DATA / "survey.csv", "-o", d / "treated.csv",
                        "--fits", d / "fits.csv"),
}


@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_byte_identical_reruns(name, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for d in (first, second):
        d.mkdir()
        run(*COMMANDS[name](d))
    cmp = filecmp.dircmp(first, second)
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for sub in cmp.subdirs.values():
        assert not sub.diff_files and not sub.left_only and not sub.right_only
    for path in first.rglob("*"):
        if path.is_file():
            assert path.read_bytes() == (second / path.relative_to(first)).read_bytes()
