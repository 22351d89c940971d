from __future__ import annotations

from pathlib import Path

from scenario_io.csvio import write_csv
from scenario_io.registry import (
    build_manifest,
    create_run_id,
    hash_file,
    hash_files,
    load_manifest,
    verify_manifest_hashes,
    write_manifest,
)


def _run_dir(tmp_path: Path) -> Path:
    run_dir = tmp_path / "run"
    write_csv(run_dir / "theory_d2.csv", ["T", "epsilon"], [(10, 0.86)])
    write_csv(run_dir / "gen_sub_d2.csv", ["T", "avg_gen_prob", "ci90_lower", "ci90_upper"], [(10, 0.1, 0.05, 0.15)])
    return run_dir


def test_create_run_id_has_timestamp_and_sha() -> None:
    run_id = create_run_id()
    # Example: 2025-01-01T00-00-00Z_deadbeef
    assert "T" in run_id
    assert "_" in run_id


def test_hash_file_is_prefixed_sha256(tmp_path: Path) -> None:
    p = tmp_path / "a.txt"
    p.write_bytes(b"abc")
    assert hash_file(p) == "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


def test_manifest_round_trip_and_verification(tmp_path: Path) -> None:
    run_dir = _run_dir(tmp_path)
    files = hash_files(run_dir, ["theory_d2.csv", "gen_sub_d2.csv"])
    manifest = build_manifest(
        run_id="test_run",
        command=["scenario_io", "curve"],
        parameters={"d_list": "2"},
        seeds={"master": 0},
        files=files,
        wall_clock_seconds=0.5,
        decisions={"theory_rows": "omitted below the low-data threshold"},
    )
    path = write_manifest(manifest, run_dir)
    assert path.name == "manifest.json"
    loaded = load_manifest(run_dir)
    assert loaded.files == files
    assert loaded.version.startswith("0.1.0+")
    assert set(loaded.environment) >= {"python", "numpy", "scipy", "pydantic"}
    ok, errors = verify_manifest_hashes(loaded, run_dir)
    assert ok and errors == []


def test_verify_detects_tampering_and_missing_files(tmp_path: Path) -> None:
    run_dir = _run_dir(tmp_path)
    manifest = build_manifest("r", ["x"], {}, {}, hash_files(run_dir, ["theory_d2.csv", "gen_sub_d2.csv"]), 0.0)
    (run_dir / "theory_d2.csv").write_text("T,epsilon\n10,0.5\n", encoding="utf-8")
    (run_dir / "gen_sub_d2.csv").unlink()
    ok, errors = verify_manifest_hashes(manifest, run_dir)
    assert ok is False
    assert any("Hash mismatch for theory_d2.csv" in e for e in errors)
    assert any("Missing file: gen_sub_d2.csv" in e for e in errors)
