from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np
import pytest

from scenario_io import cli, losses
from scenario_io.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, JsonFormatter, example_one_checks, main
from scenario_io.core import theta_vector
from scenario_io.csvio import read_csv
from scenario_io.registry import load_manifest, verify_manifest_hashes


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.chdir(tmp_path)
    for var in ("SCENARIO_IO_OUT", "SCENARIO_IO_WORKERS", "SCENARIO_IO_LOG_JSON"):
        monkeypatch.delenv(var, raising=False)


def test_verify_example1_passes(capsys: pytest.CaptureFixture) -> None:
    assert main(["verify-example1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("PASS") == 4
    assert "FAIL" not in out
    assert all(example_one_checks().values())


def test_curve_writes_csvs_and_manifest(tmp_path: Path) -> None:
    out = tmp_path / "curve"
    code = main(
        ["--out", str(out), "curve", "--d-list", "2", "--t-grid", "2,10", "--runs", "2", "--n-test", "50", "--per-run"]
    )
    assert code == EXIT_OK
    gen = read_csv(out / "gen_sub_d2.csv")
    assert [row["T"] for row in gen] == ["2", "10"]
    for row in gen:
        assert float(row["ci90_lower"]) <= float(row["avg_gen_prob"]) <= float(row["ci90_upper"])
    assert (out / "gen_incenter_d2.csv").exists() and (out / "gen_polyak_d2.csv").exists()
    theory = read_csv(out / "theory_d2.csv")
    # T=2 is below 2(d + ln(1/beta)) and is left out
    assert [row["T"] for row in theory] == ["10"]
    assert float(theory[0]["epsilon"]) == pytest.approx(2 * (2 + 2.302585093) / 10)
    runs = read_csv(out / "runs_d2.csv")
    assert len(runs) == 2 * 2 * 3
    manifest = load_manifest(out)
    assert "gen_sub_d2.csv" in manifest.files
    assert manifest.parameters["command"] == "curve"
    assert manifest.decisions
    ok, errors = verify_manifest_hashes(manifest, out)
    assert ok, errors


def test_tightness_command(tmp_path: Path) -> None:
    out = tmp_path / "tight"
    code = main(["--out", str(out), "tightness", "--d", "1", "--T", "5", "--trials", "20", "--eps-grid", "0.1,0.2"])
    assert code == EXIT_OK
    rows = read_csv(out / "tightness_d1_T5.csv")
    assert list(rows[0]) == ["eps", "empirical", "theoretical", "discarded"]
    assert [float(r["eps"]) for r in rows] == [0.1, 0.2]


def test_online_command_leaves_lower_bound_blank_early(tmp_path: Path) -> None:
    out = tmp_path / "online"
    code = main(["--out", str(out), "online", "--d", "2", "--T", "12", "--runs", "2", "--estimator", "sub"])
    assert code == EXIT_OK
    rows = read_csv(out / "online_synthetic_d2.csv")
    assert len(rows) == 12
    assert rows[1]["lower_bound"] == ""
    assert float(rows[2]["lower_bound"]) == pytest.approx(2 * math.log(4 / 3))
    assert float(rows[-1]["mean_cum_regret"]) >= 0.0


@pytest.mark.parametrize(
    "argv",
    [
        ["curve", "--estimators", "sub,ellipsoid"],
        ["online", "--instance", "tightness", "--estimator", "incenter"],
        ["--config", "missing.conf", "verify-example1"],
        ["teleport"],
        [],
    ],
)
def test_usage_errors(argv: list[str]) -> None:
    assert main(argv) == EXIT_USAGE


def test_config_file_supplies_defaults(tmp_path: Path) -> None:
    conf = tmp_path / "run.conf"
    conf.write_text("runs=1\nn_test=30\nestimators=sub\n", encoding="utf-8")
    out = tmp_path / "cfg"
    assert main(["--config", str(conf), "--out", str(out), "curve", "--d-list", "2", "--t-grid", "3"]) == EXIT_OK
    manifest = load_manifest(out)
    assert manifest.parameters["runs"] == 1
    assert manifest.parameters["n_test"] == 30
    assert sorted(manifest.files) == ["gen_sub_d2.csv", "theory_d2.csv"]


def test_computation_failure_exit_code(tmp_path: Path) -> None:
    out = tmp_path / "bad"
    code = main(["--out", str(out), "tightness", "--d", "3", "--T", "2", "--trials", "2"])
    assert code == EXIT_FAILURE


def test_json_formatter_keeps_extra_fields() -> None:
    record = logging.makeLogRecord({"msg": "fit %s", "args": ("sub",), "levelname": "INFO", "name": "scenario_io", "d": 5})
    payload = json.loads(JsonFormatter().format(record))
    assert payload["event"] == "fit sub"
    assert payload["d"] == 5


def _flipped_incenter_loss(instance, theta, s, a_star):
    candidates, F, f_star = losses._candidate_features(instance, s, a_star)
    deltas = F - f_star
    values = deltas @ theta_vector(theta) - np.linalg.norm(deltas, axis=1)
    k = int(np.argmax(values))
    return losses.LossEvaluation(max(0.0, float(values[k])), candidates[k])


def test_verify_example1_fails_on_flipped_incenter_rows(monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture) -> None:
    monkeypatch.setattr(losses, "incenter_loss", _flipped_incenter_loss)
    assert main(["verify-example1"]) == EXIT_FAILURE
    out = capsys.readouterr().out
    assert "FAIL incenter-violation-of-(1,0,0)" in out
    assert "PASS consistency-of-(1,0,0)" in out


def test_verify_example1_reads_grid_and_tie_tolerance_from_config(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    seen = {}

    def spy(grid_points: int, tie_tol_rel: float) -> dict:
        seen.update(grid_points=grid_points, tie_tol_rel=tie_tol_rel)
        return example_one_checks(grid_points, tie_tol_rel)

    monkeypatch.setattr(cli, "example_one_checks", spy)
    conf = tmp_path / "ex1.conf"
    conf.write_text("grid_points=21\ntie_tol_rel=1e-7\n", encoding="utf-8")
    assert main(["--config", str(conf), "verify-example1"]) == EXIT_OK
    assert seen == {"grid_points": 21, "tie_tol_rel": 1e-7}
