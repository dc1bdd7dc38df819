#!/usr/bin/env python3
"""Compare candidate network shapes on a held-out validation split.

Trains each candidate on simulated assessments of 75% of the cohort and
ranks them by squared loss on assessments of the remaining 25%.  The default
grid varies hidden depth (1-3 layers) and width (1x-3x the skill count).

Usage: python3 scripts/run_architecture_search.py --config demo/config.json
"""

from __future__ import annotations

import argparse
import time

from skillassess.cli import RunConfig
from skillassess.evaluation import architecture_search
from skillassess.network import NetworkArchitecture


def default_grid(n: int) -> list[NetworkArchitecture]:
    grid = []
    for depth in (1, 2, 3):
        for width_factor in (1, 2, 3):
            hidden = tuple([n * width_factor] * depth)
            grid.append(NetworkArchitecture((n, *hidden, n)))
    return grid


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True)
    parser.add_argument(
        "--validation-fraction", type=float, default=0.25,
        help="fraction of learners held out for scoring",
    )
    args = parser.parse_args()

    config = RunConfig.load(args.config)
    ontology = config.ontology()
    cohort = config.cohort(ontology)
    candidates = default_grid(len(ontology))

    print(f"scoring {len(candidates)} candidate shapes "
          f"on {len(cohort)} learners / {len(ontology)} skills")
    started = time.monotonic()
    results = architecture_search(
        cohort,
        ontology,
        candidates,
        config.training_config(),
        config.simulation_config(),
        validation_fraction=args.validation_fraction,
        master_seed=config.master_seed,
    )
    elapsed = time.monotonic() - started

    print(f"\nfinished in {elapsed:.1f}s (best first)")
    print(f"{'layer sizes':>28}  {'validation loss':>16}")
    for row in results:
        print(f"{str(row['layer_sizes']):>28}  {row['validation_loss']:>16.5f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
