#!/usr/bin/env python3
"""Generate a self-contained demo workspace: ontology, cohort, run config.

Writes into --out (default: demo/) the three files every CLI command needs:

  ontology.json   12-skill curriculum with a prerequisite chain and branches
  cohort.csv      synthetic learners drawn from three correlated persona types
  config.json     run configuration wiring the above together

After running this, the full pipeline is e.g.:

  python3 scripts/make_demo_assets.py
  python3 -m skillassess simulate --config demo/config.json
  python3 -m skillassess train    --config demo/config.json
  python3 -m skillassess eval     --config demo/config.json
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from skillassess.ontology import SkillOntology, save_ontology
from skillassess.simulate import (
    Cohort,
    FrontLoadedLaw,
    SpreadLaw,
    ThresholdLaw,
    save_cohort,
    synth_personas,
)

SKILLS = [
    ("variables", "Variables and assignment"),
    ("arithmetic", "Arithmetic expressions"),
    ("strings", "String manipulation"),
    ("conditionals", "Conditional statements"),
    ("loops", "Loops and iteration"),
    ("lists", "Lists and indexing"),
    ("dicts", "Dictionaries and lookup"),
    ("functions", "Defining functions"),
    ("recursion", "Recursive functions"),
    ("classes", "Classes and objects"),
    ("modules", "Modules and imports"),
    ("testing", "Writing unit tests"),
]

PREREQUISITES = [
    ("variables", "arithmetic"),
    ("variables", "strings"),
    ("arithmetic", "conditionals"),
    ("conditionals", "loops"),
    ("loops", "lists"),
    ("lists", "dicts"),
    ("conditionals", "functions"),
    ("functions", "recursion"),
    ("functions", "classes"),
    ("classes", "modules"),
    ("functions", "testing"),
]


def build_cohort(ontology: SkillOntology, per_type: int, seed: int) -> Cohort:
    laws = [
        ("front", FrontLoadedLaw()),
        ("spread", SpreadLaw()),
        ("threshold", ThresholdLaw()),
    ]
    records = []
    for prefix, law in laws:
        part = synth_personas(ontology, per_type, law, rng_seed=seed, id_prefix=prefix)
        records.extend(part.records)
    return Cohort(tuple(records))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="demo", help="output directory")
    parser.add_argument("--per-type", type=int, default=12, help="learners per persona type")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ontology = SkillOntology.from_lists(SKILLS, PREREQUISITES)
    save_ontology(ontology, out / "ontology.json")

    cohort = build_cohort(ontology, args.per_type, args.seed)
    save_cohort(cohort, ontology, out / "cohort.csv")

    config = {
        "master_seed": args.seed,
        "ontology": "ontology.json",
        "cohort": "cohort.csv",
        "out_dir": "out",
        "simulation": {"samples_per_learner": 80},
        "training": {"learning_rate": 0.8, "epochs": 60, "batch_size": 32},
        "strategy": {"kind": "hybrid", "top_k": 3},
        "stop": {"epsilon": 0.1},
        "session": {"session_length": 3, "exploration_probability": 0.3},
        "sweep": {"k_values": [6, 12, 18, 24, 30], "seeds": [0, 1, 2]},
    }
    with open(out / "config.json", "w") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")

    print(f"wrote {out}/ontology.json  ({len(ontology)} skills)")
    print(f"wrote {out}/cohort.csv     ({len(cohort)} learners)")
    print(f"wrote {out}/config.json")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
