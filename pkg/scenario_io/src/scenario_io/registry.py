"""Run registry helpers for experiment outputs.

Provides functions to create run_ids, hash emitted files, write manifest files
and verify that an output directory still matches its manifest.
"""
from __future__ import annotations

import hashlib
import json
import platform
import subprocess
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import __version__
from .ir.models import RunManifest

MANIFEST_NAME = "manifest.json"


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H-%M-%SZ")


def _git_sha_short() -> Tuple[str, bool]:
    try:
        sha = subprocess.check_output(
            ["git", "rev-parse", "--short=8", "HEAD"], stderr=subprocess.DEVNULL
        ).decode().strip()
        dirty = bool(
            subprocess.check_output(["git", "status", "--porcelain"], stderr=subprocess.DEVNULL).decode().strip()
        )
        return sha, dirty
    except Exception:
        return "nogit", False


def create_run_id() -> str:
    ts = _utc_now_iso()
    sha, _ = _git_sha_short()
    return f"{ts}_{sha}"


def hash_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as f:
        for chunk in iter(lambda: f.read(8192), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def hash_files(out_dir: Path, names: List[str]) -> Dict[str, str]:
    """Returns a dict mapping file name -> sha256 hash for the listed files under out_dir."""
    return {name: hash_file(out_dir / name) for name in sorted(names)}


def _environment() -> Dict[str, Optional[str]]:
    env: Dict[str, Optional[str]] = {
        "python": platform.python_version(),
        "platform": platform.platform(),
    }
    for mod in ("numpy", "scipy", "pydantic"):
        try:
            env[mod] = __import__(mod).__version__
        except Exception:
            env[mod] = None
    return env


def build_manifest(
    run_id: str,
    command: List[str],
    parameters: dict,
    seeds: dict,
    files: Dict[str, str],
    wall_clock_seconds: float,
    decisions: Optional[Dict[str, str]] = None,
) -> RunManifest:
    sha, dirty = _git_sha_short()
    return RunManifest(
        run_id=run_id,
        created_utc=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        command=list(command),
        parameters=parameters,
        seeds=seeds,
        version=f"{__version__}+{sha}",
        git={"sha": sha, "dirty": dirty},
        environment=_environment(),
        wall_clock_seconds=wall_clock_seconds,
        files=files,
        decisions=decisions or {},
    )


def write_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    out_dir = out_dir.resolve()
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / MANIFEST_NAME
    with path.open("w", encoding="utf-8", newline="\n") as f:
        json.dump(json.loads(manifest.json()), f, indent=2, ensure_ascii=False)
        f.write("\n")
    return path


def load_manifest(run_dir: Path) -> RunManifest:
    mpath = run_dir / MANIFEST_NAME
    with mpath.open("r", encoding="utf-8") as f:
        return RunManifest.parse_obj(json.load(f))


def verify_manifest_hashes(manifest: RunManifest, run_dir: Path) -> Tuple[bool, list]:
    """Verify that all listed hashes in manifest are correct. Returns (ok, errors list)."""
    errors = []
    for name, expected in manifest.files.items():
        p = run_dir / name
        if not p.exists():
            errors.append(f"Missing file: {name}")
            continue
        actual = hash_file(p)
        if actual != expected:
            errors.append(f"Hash mismatch for {name}: {actual} != {expected}")
    return (len(errors) == 0, errors)
