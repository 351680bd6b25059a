import csv
import json

import numpy as np
import pytest
import yaml

from cookieless_ab import DesignConfig, SyntheticSpec, expose_population, generate_population
from cookieless_ab.cli import main
from cookieless_ab.logs import write_site1_csv


CONFIG = {
    "design": {"alpha": 0.75, "cluster_salt": 77},
    "synthetic": {
        "mu": {"1,0": 1.0, "2,0": 0.0, "1,3": 1.5, "2,3": 0.2},
        "delta1": 0.5,
        "delta2": -0.5,
        "p_overlap": 0.5,
        "n_users": 500,
        "n_reps": 3,
        "seed": 4,
    },
    "sweep": {"axis": "delta1", "values": [-0.5, 0.5]},
    "methods": ["uncorrected", "corrected"],
}


def write_config(tmp_path, doc=None, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc if doc is not None else CONFIG))
    return path


def fixture_log(tmp_path, d=1, n=600, binary=False):
    spec = SyntheticSpec.from_deltas(
        mu10=0.6 if binary else 1.0,
        mu20=0.4 if binary else 0.0,
        mu13=0.7 if binary else 1.5,
        mu23=0.3 if binary else 0.2,
        delta1=0.1 if binary else 0.5,
        delta2=-0.1 if binary else -0.5,
        p_overlap=0.5, n_users=n, n_reps=1, seed=6,
        covariate_dim=0 if binary else d,
        covariate_coeffs=() if binary else (1.0,) * d,
        outcome_kind="binary" if binary else "gaussian",
    )
    pop = generate_population(spec)
    log = expose_population(pop, DesignConfig(alpha=0.75, cluster_salt=2), seed=9)
    path = tmp_path / "log.csv"
    write_site1_csv(log, path)
    return path


def test_simulate_writes_report_bundle(tmp_path, capsys):
    config = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(config), "--out", str(out)]) == 0
    assert (out / "results.csv").is_file()
    assert (out / "run.json").is_file()
    assert (out / "bias_vs_delta1.png").is_file()
    with open(out / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 2  # grid points x methods
    assert {r["method"] for r in rows} == {"uncorrected", "corrected"}
    manifest = json.loads((out / "run.json").read_text())
    assert manifest["schema_version"] == 1
    assert manifest["config"]["design"]["alpha"] == 0.75
    stdout = capsys.readouterr().out
    assert manifest["run_id"] in stdout
    assert "corrected" in stdout


def test_simulate_is_deterministic_and_content_addressed(tmp_path):
    config = write_config(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(config), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(config), "--out", str(out2)]) == 0
    assert (out1 / "results.csv").read_text() == (out2 / "results.csv").read_text()
    id1 = json.loads((out1 / "run.json").read_text())["run_id"]
    id2 = json.loads((out2 / "run.json").read_text())["run_id"]
    assert id1 == id2
    # a different seed is a different run
    out3 = tmp_path / "c"
    assert main(["simulate", "--config", str(config), "--out", str(out3), "--seed", "99"]) == 0
    assert json.loads((out3 / "run.json").read_text())["run_id"] != id1


def test_simulate_rejects_bad_config(tmp_path, capsys):
    doc = {k: dict(v) if isinstance(v, dict) else v for k, v in CONFIG.items()}
    doc["design"] = dict(doc["design"], alpha=0.5)
    config = write_config(tmp_path, doc)
    code = main(["simulate", "--config", str(config), "--out", str(tmp_path / "out")])
    assert code == 2
    err = capsys.readouterr().err
    assert "design" in err and "eps_alpha" in err


def test_simulate_reports_field_paths(tmp_path, capsys):
    doc = {
        "design": {"alpha": "high"},
        "synthetic": {"mu": {"1,0": 1.0}, "p_overlap": 2.0},
        "sweep": {"axis": "gamma"},
    }
    config = write_config(tmp_path, doc)
    assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "design.alpha" in err
    assert "sweep.axis" in err


def test_estimate_prints_all_methods(tmp_path, capsys):
    log = fixture_log(tmp_path)
    assert main(["estimate", "--log", str(log), "--alpha", "0.75"]) == 0
    out = capsys.readouterr().out
    for label in ("uncorrected", "uncorrected+adj", "corrected", "corrected+adj"):
        assert label in out
    payload = json.loads(out[out.index("{"):])
    labels = [row["method"] for row in payload["estimates"]]
    assert labels == ["uncorrected", "uncorrected+adj", "corrected", "corrected+adj"]
    assert payload["variance_bound"]["multiplier"] == 5.0
    assert len(payload["cells"]) == 4


def test_estimate_report_bundle_and_bins(tmp_path):
    log = fixture_log(tmp_path, n=2000)
    out = tmp_path / "report"
    code = main([
        "estimate", "--log", str(log), "--alpha", "0.75",
        "--bins", "2", "--bounds=-10,10", "--out", str(out),
    ])
    assert code == 0
    assert (out / "estimates.csv").is_file()
    assert (out / "estimates.png").is_file()
    payload = json.loads((out / "estimates.json").read_text())
    assert len(payload["cate"]) == 2
    assert payload["hoeffding_ci"]["lo"] < payload["hoeffding_ci"]["hi"]


def test_estimate_binary_log_gets_default_bounds(tmp_path, capsys):
    log = fixture_log(tmp_path, binary=True)
    assert main(["estimate", "--log", str(log), "--alpha", "0.75"]) == 0
    out = capsys.readouterr().out
    payload = json.loads(out[out.index("{"):])
    assert "hoeffding_ci" in payload


def test_estimate_alpha_dead_zone_exits_2(tmp_path, capsys):
    log = fixture_log(tmp_path)
    assert main(["estimate", "--log", str(log), "--alpha", "0.5"]) == 2
    assert "eps_alpha" in capsys.readouterr().err


def test_estimate_missing_file_exits_3(tmp_path, capsys):
    assert main(["estimate", "--log", str(tmp_path / "nope.csv"), "--alpha", "0.75"]) == 3


def test_estimate_bad_bounds_exit_2(tmp_path, capsys):
    log = fixture_log(tmp_path)
    assert main(["estimate", "--log", str(log), "--alpha", "0.75", "--bounds", "5"]) == 2
    assert main(["estimate", "--log", str(log), "--alpha", "0.75", "--bounds", "3,1"]) == 2
