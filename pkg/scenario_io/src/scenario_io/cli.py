"""Batch experiment harness.

    python -m scenario_io curve --d-list 5,10 --runs 10 --out results/curve
    python -m scenario_io tightness --d 2 --T 20 --trials 2000
    python -m scenario_io online --instance synthetic --d 5 --T 1000
    python -m scenario_io verify-example1

Every command writes CSV files plus a manifest.json with their checksums.
Exit codes: 0 success, 2 usage error, 3 computation failure.
"""
from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
import json
import logging
from pathlib import Path
import sys
import time
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import evaluation, journal, losses
from .bounds import epsilon_explicit, regret_lower_bound
from .config import HarnessSettings, load_settings, read_config_file
from .core import (
    TIE_TOL_REL,
    Action,
    Context,
    ContextKind,
    Dataset,
    Demonstration,
    Parameter,
    Slice,
    delta_features,
    derive_seed,
    greedy_action_set,
)
from .csvio import write_csv
from .errors import LowDataRegimeError, ScenarioIOError
from .estimators import EstimatorConfig
from .instances import InstanceSpec
from .ir.models import CurveCell
from .registry import build_manifest, create_run_id, hash_files, write_manifest

logger = logging.getLogger("scenario_io")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FAILURE = 3

DEFAULT_T_GRID = "2,3,5,10,20,30,50,100,200,300"
CURVE_ESTIMATORS = ("sub", "incenter", "polyak")
JOURNAL_NAME = "events.jsonl"

DECISIONS = {
    "theta_star": "synthetic: iid Unif[0,1] coordinates normalized to sum one, seeded per d",
    "instance_per_d": "actions and theta* are drawn once per d; runs redraw data and test contexts",
    "theory_rows": "rows with T < 2(d + ln(1/beta)) are omitted, not clamped to 1",
    "curve_band": "mean +/- z_0.95 * sd(ddof=1) / sqrt(runs) across runs, clipped to [0, 1]",
    "avg_gen_prob": "action-level mismatch on n_test fresh contexts",
    "violation_probability": "exact arcs for d <= 2, seeded inner Monte Carlo (1e4) otherwise",
}


class JsonFormatter(logging.Formatter):
    _skip = set(vars(logging.makeLogRecord({})))

    def format(self, record: logging.LogRecord) -> str:
        event = {"event": record.getMessage(), "level": record.levelname, "logger": record.name}
        event.update({k: v for k, v in vars(record).items() if k not in self._skip and k != "message"})
        if record.exc_info:
            event["exception"] = self.formatException(record.exc_info)
        return json.dumps(event, default=str)


def configure_logging(level: str = "INFO", log_json: bool = False) -> None:
    handler = logging.StreamHandler(sys.stderr)
    if log_json:
        handler.setFormatter(JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level.upper())


def _int_list(text: str) -> List[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _float_list(text: str) -> List[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _name_list(text: str) -> List[str]:
    return [x.strip() for x in str(text).split(",") if x.strip()]


# ---------------------------------------------------------------- curve


def _curve_cell_job(spec: dict, d: int, run: int, t_grid: List[int], estimators: List[str], n_test: int, seed: int) -> CurveCell:
    instance = InstanceSpec(**spec).build()
    return evaluation.run_curve_cell(instance, d, run, t_grid, estimators, n_test, seed)


def _map_jobs(fn: Callable, jobs: Sequence[tuple], workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *job) for job in jobs]
        return [f.result() for f in futures]


def cmd_curve(args: argparse.Namespace, settings: HarnessSettings, out_dir: Path) -> List[str]:
    d_list = _int_list(args.d_list)
    t_grid = sorted(set(_int_list(args.t_grid)))
    estimators = _name_list(args.estimators)
    jobs = []
    specs: Dict[int, dict] = {}
    for d in d_list:
        specs[d] = InstanceSpec(
            kind="synthetic-linear", d=d, K=args.K, seed=derive_seed(args.seed, d), tie_tol_rel=settings.tie_tol_rel
        ).dict()
        for run in range(args.runs):
            jobs.append((specs[d], d, run, t_grid, estimators, settings.n_test, args.seed))
    logger.info("curve: %d cells over d=%s with %d workers", len(jobs), d_list, settings.workers)
    cells: List[CurveCell] = _map_jobs(_curve_cell_job, jobs, settings.workers)
    cells.sort(key=lambda c: (c.d, c.run))

    written = []
    journal_path = out_dir / JOURNAL_NAME
    for d in d_list:
        d_cells = [c for c in cells if c.d == d]
        for cell in d_cells:
            for p in cell.points:
                if p.failed:
                    journal.append_record("fit-failure", {"d": d, "run": cell.run, "T": p.T, "estimator": p.estimator}, journal_path)
        for name in estimators:
            rows = []
            for T in t_grid:
                rates = [p.action_rate for c in d_cells for p in c.points if p.estimator == name and p.T == T and not p.failed]
                mean, lo, hi = evaluation.across_run_band(rates)
                rows.append((T, mean, lo, hi))
            fname = f"gen_{name}_d{d}.csv"
            write_csv(out_dir / fname, ["T", "avg_gen_prob", "ci90_lower", "ci90_upper"], rows)
            written.append(fname)
        theory = []
        for T in t_grid:
            try:
                theory.append((T, epsilon_explicit(T, d, settings.beta)))
            except LowDataRegimeError:
                continue
        fname = f"theory_d{d}.csv"
        write_csv(out_dir / fname, ["T", "epsilon"], theory)
        written.append(fname)
        if args.per_run:
            fname = f"runs_d{d}.csv"
            rows = [
                (c.run, p.estimator, p.T, p.set_rate, p.action_rate)
                for c in d_cells
                for p in c.points
            ]
            write_csv(out_dir / fname, ["run", "estimator", "T", "set_rate", "action_rate"], rows)
            written.append(fname)
    return written


# ------------------------------------------------------------ tightness


def cmd_tightness(args: argparse.Namespace, settings: HarnessSettings, out_dir: Path) -> List[str]:
    instance = InstanceSpec(kind="tightness", d=args.d, seed=args.seed, tie_tol_rel=settings.tie_tol_rel).build()
    config = EstimatorConfig(kind="sub", objective="linear", seed=args.seed)
    table = evaluation.tail_experiment(
        instance,
        config,
        args.T,
        args.trials,
        _float_list(args.eps_grid),
        args.seed,
        method=args.method,
        journal_path=out_dir / JOURNAL_NAME,
    )
    logger.info("tightness: mean violation %.4f (d/(T+1) = %.4f)", table.mean_violation, args.d / (args.T + 1))
    fname = f"tightness_d{args.d}_T{args.T}.csv"
    write_csv(
        out_dir / fname,
        ["eps", "empirical", "theoretical", "discarded"],
        [(r.eps, r.empirical, r.theoretical, r.discarded) for r in table.rows],
    )
    return [fname]


# --------------------------------------------------------------- online


def _online_job(spec: dict, config: EstimatorConfig, T: int, refit: str, seed: int) -> List[float]:
    instance = InstanceSpec(**spec).build()
    trace = evaluation.run_online(instance, config, T, refit, seed)
    if trace.refit_failures:
        logger.debug("online run seed=%s: %d refit failures", seed, trace.refit_failures)
    return trace.per_round


def cmd_online(args: argparse.Namespace, settings: HarnessSettings, out_dir: Path) -> List[str]:
    kind = "tightness" if args.instance == "tightness" else "synthetic-linear"
    spec = InstanceSpec(
        kind=kind, d=args.d, K=args.K, seed=derive_seed(args.seed, args.d), tie_tol_rel=settings.tie_tol_rel
    ).dict()
    objective = args.objective or ("linear" if kind == "tightness" else "min-norm")
    config = EstimatorConfig(kind=args.estimator, objective=objective, seed=args.seed)
    jobs = [(spec, config, args.T, args.refit, derive_seed(args.seed, run)) for run in range(args.runs)]
    regrets = np.asarray(_map_jobs(_online_job, jobs, settings.workers))
    mean_regret = regrets.mean(axis=0)
    mean_cum = np.cumsum(regrets, axis=1).mean(axis=0)
    rows = []
    for t in range(1, args.T + 1):
        lower = regret_lower_bound(t, args.d) if t >= args.d + 1 else None
        rows.append((t, float(mean_regret[t - 1]), float(mean_cum[t - 1]), lower))
    fname = f"online_{args.instance}_d{args.d}.csv"
    write_csv(out_dir / fname, ["t", "mean_regret", "mean_cum_regret", "lower_bound"], rows)
    return [fname]


# ------------------------------------------------------ verify-example1


def example_one_checks(grid_points: int = 201, tie_tol_rel: float = TIE_TOL_REL) -> Dict[str, bool]:
    """The four deterministic checks of the two-state example."""
    instance = InstanceSpec(kind="example-one", grid_points=grid_points, tie_tol_rel=tie_tol_rel).build()
    s0, s1 = Context(ContextKind.LABEL, 0), Context(ContextKind.LABEL, 1)
    a_lo, a_hi = Action((1.0, -1.0)), Action((1.0, 1.0))
    dataset = Dataset((Demonstration(s0, instance.expert_action(s0)), Demonstration(s1, instance.expert_action(s1))))
    flat = Parameter((1.0, 0.0, 0.0), Slice.FIRST_FIXED)
    wide = Parameter((2.0, -2.0, 6.0))
    checks: Dict[str, bool] = {}

    checks["consistency-of-(1,0,0)"] = losses.consistency_residual(instance, flat, dataset).value <= 1e-9

    report = evaluation.evaluate_mismatch(instance, flat, n_test=200, seed=0)
    checks["set-level-mismatch-zero"] = report.set_rate == 0.0

    value = losses.incenter_loss(instance, flat, s0, a_lo).value
    delta = delta_features(instance, s0, a_hi, a_lo)
    checks["incenter-violation-of-(1,0,0)"] = abs(value - 2.0) <= 1e-12 and np.allclose(delta, [0.0, 2.0, 0.0])

    ok = True
    for s, expert in ((s0, a_lo), (s1, a_hi)):
        ok &= losses.incenter_loss(instance, wide, s, expert).value <= 1e-9
        greedy = greedy_action_set(instance, wide, s)
        ok &= greedy.is_singleton and greedy.actions[0] == expert
    checks["incenter-feasibility-of-(2,-2,6)"] = bool(ok)
    return checks


def cmd_verify_example1(args: argparse.Namespace, settings: HarnessSettings, out_dir: Optional[Path]) -> int:
    checks = example_one_checks(settings.grid_points, settings.tie_tol_rel)
    for name, passed in checks.items():
        print(f"{'PASS' if passed else 'FAIL'} {name}")
    failed = [name for name, passed in checks.items() if not passed]
    if failed:
        logger.error("example-one checks failed: %s", ", ".join(failed))
        return EXIT_FAILURE
    return EXIT_OK


# ----------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scenario_io", description="Inverse optimization scenario-program harness")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--log-level", default="INFO", help="Logging level")
    p.add_argument("--log-json", action="store_true", default=None, help="Emit one JSON object per log record")
    p.add_argument("--workers", type=int, default=None, help="Worker processes for Monte Carlo cells")
    p.add_argument("--out", default=None, help="Output directory (default: <out_root>/<run_id>)")
    p.add_argument("--seed", type=int, default=0, help="Master seed")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("curve", help="Mismatch curves vs T with the explicit epsilon bound")
    c.add_argument("--d-list", default="5,10")
    c.add_argument("--t-grid", default=DEFAULT_T_GRID)
    c.add_argument("--runs", type=int, default=10)
    c.add_argument("--estimators", default=",".join(CURVE_ESTIMATORS))
    c.add_argument("--K", type=int, default=15)
    c.add_argument("--beta", type=float, default=None)
    c.add_argument("--n-test", type=int, default=None)
    c.add_argument("--per-run", action="store_true", help="Also write per-run rates")

    t = sub.add_parser("tightness", help="Exact tail identity on the tightness instance")
    t.add_argument("--d", type=int, default=2)
    t.add_argument("--T", type=int, default=20)
    t.add_argument("--trials", type=int, default=2000)
    t.add_argument("--eps-grid", default="0.05,0.1,0.2,0.3")
    t.add_argument("--method", default="auto", choices=["auto", "exact", "cap", "monte-carlo"])

    o = sub.add_parser("online", help="Online regret protocol")
    o.add_argument("--instance", default="synthetic", choices=["synthetic", "tightness"])
    o.add_argument("--d", type=int, default=5)
    o.add_argument("--K", type=int, default=15)
    o.add_argument("--T", type=int, default=1000)
    o.add_argument("--runs", type=int, default=10)
    o.add_argument("--estimator", default="incenter")
    o.add_argument("--objective", default=None, choices=["min-norm", "linear"])
    o.add_argument("--refit", default="every-round", choices=list(evaluation.SCHEDULES))

    sub.add_parser("verify-example1", help="Deterministic checks of the two-state example")
    return p


COMMANDS = {
    "curve": cmd_curve,
    "tightness": cmd_tightness,
    "online": cmd_online,
}


def _validate(p: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    if args.command == "curve":
        bad = [e for e in _name_list(args.estimators) if e not in CURVE_ESTIMATORS]
        if bad:
            p.error(f"invalid estimator(s) {bad}; choose from {list(CURVE_ESTIMATORS)}")
        if args.runs < 1 or not _int_list(args.t_grid) or min(_int_list(args.t_grid)) < 1:
            p.error("runs and every T in --t-grid must be >= 1")
    if args.command == "online":
        if args.estimator not in ("sub", "incenter", "polyak", "slack", "suboptimality"):
            p.error(f"invalid estimator {args.estimator!r}")
        if args.instance == "tightness" and args.estimator == "incenter":
            p.error("the incenter estimator is not available on the tightness instance")


def _apply_config_defaults(p: argparse.ArgumentParser, argv: Optional[Sequence[str]]) -> None:
    """Config file values become parser defaults so explicit flags still win."""
    pre, _ = p.parse_known_args(argv)
    values = read_config_file(pre.config)
    if not values:
        return
    defaults = {k.replace("-", "_"): v for k, v in values.items()}
    p.set_defaults(**defaults)
    for action in p._actions:
        if isinstance(action, argparse._SubParsersAction):
            for subparser in action.choices.values():
                subparser.set_defaults(**defaults)


def main(argv: Optional[Sequence[str]] = None) -> int:
    p = build_parser()
    try:
        _apply_config_defaults(p, argv)
        args = p.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (FileNotFoundError, ScenarioIOError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _validate(p, args)
    except SystemExit as exc:
        return int(exc.code or 0)

    overrides = {
        "workers": args.workers,
        "log_json": args.log_json,
        "beta": getattr(args, "beta", None),
        "n_test": getattr(args, "n_test", None),
    }
    try:
        settings = load_settings(args.config, overrides)
    except Exception as exc:
        print(f"error: invalid settings: {exc}", file=sys.stderr)
        return EXIT_USAGE
    configure_logging(args.log_level, settings.log_json)

    if args.command == "verify-example1":
        return cmd_verify_example1(args, settings, None)

    run_id = create_run_id()
    out_dir = Path(args.out) if args.out else settings.out_root / run_id
    start = time.perf_counter()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = COMMANDS[args.command](args, settings, out_dir)
        parameters = {k: v for k, v in vars(args).items() if k != "config"}
        parameters.update(settings.dict())
        manifest = build_manifest(
            run_id=run_id,
            command=list(sys.argv if argv is None else ["scenario_io", *argv]),
            parameters=json.loads(json.dumps(parameters, default=str)),
            seeds={"master": args.seed},
            files=hash_files(out_dir, written),
            wall_clock_seconds=time.perf_counter() - start,
            decisions=DECISIONS,
        )
        write_manifest(manifest, out_dir)
    except (ScenarioIOError, OSError, ValueError) as exc:
        logger.exception("%s failed: %s", args.command, exc)
        return EXIT_FAILURE
    logger.info("%s wrote %s to %s", args.command, ", ".join(written), out_dir)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
