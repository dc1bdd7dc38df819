#!/usr/bin/env python3
"""Leave-one-out benchmark: train on all-but-one learner, assess the held-out one.

Reports the average number of questions asked before the stop rule fires, the
reconstruction error on the skills that were never asked, and pooled
precision/recall, then writes the per-question error and uncertainty curves
as CSVs.

Usage: python3 scripts/run_benchmark.py --config demo/config.json
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from skillassess.cli import RunConfig
from skillassess.evaluation import (
    loo_evaluate,
    rolled_error_curves,
    rolled_uncertainty_curves,
    write_curve,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True)
    parser.add_argument("--seed", type=int, default=None, help="override master seed")
    args = parser.parse_args()

    config = RunConfig.load(args.config)
    if args.seed is not None:
        config.doc["master_seed"] = args.seed
    ontology = config.ontology()
    cohort = config.cohort(ontology)
    arch = config.architecture(len(ontology))

    print(f"cohort: {len(cohort)} learners over {len(ontology)} skills")
    print(f"architecture: {list(arch.layer_sizes)}")
    started = time.monotonic()
    report = loo_evaluate(
        cohort,
        ontology,
        arch,
        config.training_config(),
        config.strategy(),
        config.stop_rule(),
        config.simulation_config(),
        tau=config.tau,
        master_seed=config.master_seed,
        completeness_floor=config.completeness_floor,
    )
    elapsed = time.monotonic() - started

    row = report.as_table_row()
    print(f"\nfinished {len(report.folds)} folds in {elapsed:.1f}s")
    for key, value in row.items():
        print(f"  {key:>24}: {value}")

    out = config.out_dir
    write_curve(out / "benchmark_error_curve.csv", "error", rolled_error_curves(report.folds))
    write_curve(
        out / "benchmark_uncertainty_curve.csv",
        "uncertain_count",
        rolled_uncertainty_curves(report.folds),
    )
    with open(out / "benchmark_report.json", "w") as fh:
        json.dump(row, fh, indent=2)
        fh.write("\n")
    print(f"\nwrote curves and report under {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
