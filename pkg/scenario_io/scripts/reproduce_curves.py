#!/usr/bin/env python
"""Full-size runs of the generalization curves and the online regret sweep."""
import argparse
import sys

from scenario_io.cli import EXIT_OK, main


def run(out_root: str, seed: int, workers: int) -> int:
    common = ["--seed", str(seed), "--workers", str(workers)]
    steps = [
        ["--out", f"{out_root}/curve", *common, "curve", "--d-list", "5,10", "--runs", "10", "--per-run"],
        ["--out", f"{out_root}/tightness", *common, "tightness", "--d", "2", "--T", "20"],
        ["--out", f"{out_root}/online_synthetic", *common, "online", "--instance", "synthetic", "--d", "5"],
        ["--out", f"{out_root}/online_tightness", *common, "online", "--instance", "tightness", "--d", "2",
         "--estimator", "sub"],
    ]
    for argv in steps:
        print("running:", " ".join(argv))
        code = main(argv)
        if code != EXIT_OK:
            return code
    return EXIT_OK


if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--out-root", default="results/reproduce", help="Parent folder for every command's output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()
    sys.exit(run(args.out_root, args.seed, args.workers))
