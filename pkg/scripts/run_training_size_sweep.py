#!/usr/bin/env python3
"""How much training data does the predictor need?

Samples k learners from the cohort, trains on simulated assessments of those
k, then assesses every learner in the cohort (with an exclusion retrain when
a learner would appear in their own training data).  Repeats over several
seeds per k and reports the seed-averaged error plus the rank correlation
between k and error — a negative value means more learners help.

Usage: python3 scripts/run_training_size_sweep.py --config demo/config.json
"""

from __future__ import annotations

import argparse
import csv
import time

from skillassess.cli import RunConfig
from skillassess.evaluation import (
    seed_averaged_sweep,
    spearman_rho,
    training_size_sweep,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True)
    parser.add_argument("--k-values", type=int, nargs="*", default=None)
    parser.add_argument("--seeds", type=int, nargs="*", default=None)
    args = parser.parse_args()

    config = RunConfig.load(args.config)
    ontology = config.ontology()
    cohort = config.cohort(ontology)
    block = config.doc.get("sweep", {})
    k_values = args.k_values or block.get("k_values", [5, 10, 15, 20])
    seeds = args.seeds or block.get("seeds", [0, 1, 2])

    print(f"sweeping k over {k_values} with seeds {seeds} "
          f"({len(cohort)} learners, {len(ontology)} skills)")
    started = time.monotonic()
    rows = training_size_sweep(
        cohort,
        ontology,
        k_values,
        seeds,
        config.architecture(len(ontology)),
        config.training_config(),
        config.strategy(),
        config.stop_rule(),
        config.simulation_config(),
        tau=config.tau,
        master_seed=config.master_seed,
    )
    averaged = seed_averaged_sweep(rows)
    elapsed = time.monotonic() - started

    print(f"\nfinished in {elapsed:.1f}s")
    print(f"{'k':>6}  {'mean error':>12}")
    for row in averaged:
        print(f"{row['k']:>6}  {row['mean_error']:>12.4f}")
    rho = spearman_rho(
        [r["k"] for r in averaged], [r["mean_error"] for r in averaged]
    )
    print(f"\nrank correlation (k vs error): {rho:+.3f}")

    out = config.out_dir / "training_size_sweep.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["k", "seed", "mean_error"])
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote per-cell results to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
