"""Harness settings: defaults < environment < key=value config file < CLI flags."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseSettings, validator

from .instances import parse_kv

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_NAME = "scenario_io.conf"


class HarnessSettings(BaseSettings):
    out_root: Path = Path("results")
    workers: int = 1
    log_json: bool = False
    beta: float = 0.1
    n_test: int = 1000
    tie_tol_rel: float = 1e-9
    grid_points: int = 201

    class Config:
        env_prefix = "SCENARIO_IO_"
        fields = {"out_root": {"env": "SCENARIO_IO_OUT"}}

    @validator("workers")
    def _positive_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("workers must be >= 1")
        return v

    @validator("beta")
    def _beta_range(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        return v


def _candidate_paths(config_path: Optional[str]) -> list[Path]:
    paths = []
    if config_path:
        paths.append(Path(config_path))
    paths.append(Path.cwd() / DEFAULT_CONFIG_NAME)
    return paths


def read_config_file(config_path: Optional[str] = None) -> Dict[str, str]:
    """First readable candidate file as a dict; an explicit path that is missing is an error."""
    if config_path and not Path(config_path).exists():
        raise FileNotFoundError(f"config file not found: {config_path}")
    for p in _candidate_paths(config_path):
        if p.exists():
            logger.info("Loaded config from %s", p)
            return parse_kv(p.read_text(encoding="utf-8"))
    return {}


def load_settings(config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> HarnessSettings:
    values: Dict[str, Any] = {}
    file_values = read_config_file(config_path)
    known = set(HarnessSettings.__fields__)
    values.update({k: v for k, v in file_values.items() if k in known})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return HarnessSettings(**values)
