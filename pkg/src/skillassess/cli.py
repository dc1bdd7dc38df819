"""Command-line front end: simulate, train, assess, eval, sweep, serve.

Every command takes ``--config <path>`` pointing at a JSON run configuration
plus a few targeted overrides.  One master seed fans out into per-component
substreams (see seeding module), so rerunning any command with the same
inputs reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from skillassess.engine import (
    Correction,
    RecordedOracle,
    apply_correction,
    run_full_assessment,
    run_session_assessment,
    save_transcript,
)
from skillassess.evaluation import (
    loo_evaluate,
    seed_averaged_sweep,
    spearman_rho,
    training_size_sweep,
    write_apriori_pairs,
    write_curve,
    write_heatmap,
)
from skillassess.network import (
    ModelFormatError,
    NetworkArchitecture,
    NumericFaultError,
    TrainedModel,
    TrainingConfig,
    TrainingFault,
    load_model,
    save_model,
    train,
)
from skillassess.ontology import OntologyError, SkillOntology, load_ontology
from skillassess.seeding import child_seed
from skillassess.simulate import (
    Cohort,
    CohortFormatError,
    NoTrainableLearnersError,
    SimulationConfig,
    TrainingExample,
    build_dataset,
    load_cohort,
    save_cohort,
)
from skillassess.strategies import SessionConfig, StopRule, strategy_from_dict

DATASET_FORMAT = "training-dataset/1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_RUNTIME = 5


class ConfigError(ValueError):
    pass


class RunConfig:
    """Validated view over the JSON run-configuration document."""

    def __init__(self, doc: dict, base_dir: Path):
        self.doc = doc
        self.base_dir = base_dir

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}")
        return cls(doc, path.parent)

    def path(self, key: str, default=None) -> Path:
        value = self.doc.get(key, default)
        if value is None:
            raise ConfigError(f"config is missing the {key!r} path")
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def master_seed(self) -> int:
        return int(self.doc.get("master_seed", 0))

    @property
    def out_dir(self) -> Path:
        out = self.path("out_dir", "out")
        out.mkdir(parents=True, exist_ok=True)
        return out

    def ontology(self) -> SkillOntology:
        return load_ontology(self.path("ontology"))

    def cohort(self, ontology: SkillOntology) -> Cohort:
        return load_cohort(self.path("cohort"), ontology)

    def simulation_config(self, seed_label: str = "simulate") -> SimulationConfig:
        block = self.doc.get("simulation", {})
        return SimulationConfig(
            samples_per_learner=block.get("samples_per_learner", 80),
            rng_seed=child_seed(self.master_seed, seed_label),
        )

    @property
    def completeness_floor(self) -> float:
        return self.doc.get("simulation", {}).get("completeness_floor", 0.8)

    def training_config(self, seed_label: str = "train") -> TrainingConfig:
        block = self.doc.get("training", {})
        return TrainingConfig(
            loss_kind=block.get("loss_kind", "squared"),
            learning_rate=block.get("learning_rate", 0.8),
            epochs=block.get("epochs", 60),
            batch_size=block.get("batch_size", 32),
            rng_seed=child_seed(self.master_seed, seed_label),
            init_scale=block.get("init_scale", 1.0),
        )

    def architecture(self, n_skills: int) -> NetworkArchitecture:
        hidden = self.doc.get("training", {}).get("hidden_layers")
        if hidden:
            return NetworkArchitecture((n_skills, *hidden, n_skills))
        return NetworkArchitecture.default_for(n_skills)

    def strategy(self):
        return strategy_from_dict(self.doc.get("strategy", {"kind": "hybrid"}))

    def stop_rule(self) -> StopRule:
        block = self.doc.get("stop", {})
        return StopRule(epsilon=block.get("epsilon", 0.1))

    def session_config(self, seed_label: str = "session") -> SessionConfig:
        block = self.doc.get("session", {})
        return SessionConfig(
            session_length=block.get("session_length", 3),
            exploration_probability=block.get("exploration_probability", 0.3),
            epsilon=block.get("epsilon", self.doc.get("stop", {}).get("epsilon", 0.1)),
            rng_seed=child_seed(self.master_seed, seed_label),
        )

    @property
    def tau(self) -> float:
        return self.doc.get("threshold", 0.5)


# ---------------------------------------------------------------------------
# Dataset file format


def save_dataset(path, examples, seed: int, learner_counts: dict[str, int]) -> None:
    with open(path, "w") as fh:
        header = {
            "format": DATASET_FORMAT,
            "seed": seed,
            "learner_counts": learner_counts,
        }
        fh.write(json.dumps(header) + "\n")
        for ex in examples:
            fh.write(
                json.dumps(
                    {"input": [int(v) for v in ex.input], "target": list(ex.target)}
                )
                + "\n"
            )


def load_dataset(path) -> list[TrainingExample]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CohortFormatError(f"dataset file {path} is empty")
    header = json.loads(lines[0])
    if header.get("format") != DATASET_FORMAT:
        raise CohortFormatError(f"unsupported dataset format {header.get('format')!r}")
    examples = []
    for line in lines[1:]:
        doc = json.loads(line)
        examples.append(
            TrainingExample(
                input=np.asarray(doc["input"], dtype=np.int8),
                target=np.asarray(doc["target"], dtype=np.float64),
            )
        )
    return examples


# ---------------------------------------------------------------------------
# Commands


def cmd_simulate(config: RunConfig, args) -> int:
    ontology = config.ontology()
    cohort = config.cohort(ontology)
    sim = config.simulation_config()
    examples = build_dataset(cohort, sim, config.completeness_floor)
    retained = [
        r.learner_id
        for r in cohort
        if r.known_fraction() >= config.completeness_floor
    ]
    counts = {lid: sim.samples_per_learner for lid in retained}
    out = Path(args.out) if args.out else config.out_dir / "dataset.jsonl"
    save_dataset(out, examples, sim.rng_seed, counts)
    for lid, count in counts.items():
        print(f"{lid}: {count} examples")
    print(f"wrote {len(examples)} examples to {out}")
    return EXIT_OK


def cmd_train(config: RunConfig, args) -> int:
    ontology = config.ontology()
    dataset_path = config.path("dataset", str(config.out_dir / "dataset.jsonl"))
    dataset = load_dataset(dataset_path)
    arch = config.architecture(len(ontology))
    tc = config.training_config()
    try:
        model = train(dataset, arch, tc)
    except TrainingFault as exc:
        print(f"training diverged in epoch {exc.epoch}", file=sys.stderr)
        return EXIT_NUMERIC
    out = Path(args.out) if args.out else config.out_dir / "model.json"
    save_model(model, out)
    print(f"final training loss: {model.provenance['final_loss']:.6f}")
    print(f"wrote model to {out}")
    return EXIT_OK


def _interactive_respondent(ontology: SkillOntology):
    def answer(skill_index: int) -> bool:
        skill = ontology.skills[skill_index]
        while True:
            reply = input(f"Do you master '{skill.title}'? [y/n] ").strip().lower()
            if reply in ("y", "yes"):
                return True
            if reply in ("n", "no"):
                return False
            print("please answer y or n")

    return answer


def cmd_assess(config: RunConfig, args) -> int:
    ontology = config.ontology()
    model = load_model(config.path("model", str(config.out_dir / "model.json")))
    strategy = config.strategy()
    tau = config.tau
    if args.learner:
        cohort = config.cohort(ontology)
        try:
            record = cohort.get(args.learner)
        except KeyError:
            print(f"unknown learner id {args.learner!r}", file=sys.stderr)
            return EXIT_DATA
        respondent = RecordedOracle(record.knowledge)
        truth = record.knowledge
    else:
        respondent = _interactive_respondent(ontology)
        truth = None
    if args.mode == "session":
        session = config.session_config()
        plan, transcript = run_session_assessment(
            model, ontology, respondent, session, strategy, tau=tau, truth=truth
        )
        print("next session plan:", [ontology.skills[i].id for i in plan])
    else:
        transcript = run_full_assessment(
            model,
            ontology,
            respondent,
            strategy,
            stop_rule=config.stop_rule(),
            tau=tau,
            rng_seed=child_seed(config.master_seed, "assess", args.learner or "interactive"),
            truth=truth,
        )
    out = Path(args.out) if args.out else config.out_dir / "transcript.jsonl"
    save_transcript(transcript, out)
    print(f"questions asked: {transcript.question_count}")
    print(f"stop reason: {transcript.stop_reason}")
    mastered = [
        ontology.skills[i].id for i, v in enumerate(transcript.predicted) if v
    ]
    print(f"predicted mastered skills: {mastered}")
    if not args.learner:
        _correction_prompt(config, ontology, transcript)
    print(f"wrote transcript to {out}")
    return EXIT_OK


def _correction_prompt(config: RunConfig, ontology: SkillOntology, transcript) -> None:
    reply = input("correct any predicted skill? enter ids separated by spaces "
                  "(empty to accept): ").strip()
    if not reply:
        return
    corrections = []
    for skill_id in reply.split():
        idx = ontology.index_of(skill_id)
        corrections.append(
            Correction(skill_id=skill_id, mastered=not bool(transcript.predicted[idx]))
        )
    state, record = apply_correction(transcript, corrections, ontology)
    pool = config.out_dir / "correction_pool.csv"
    from skillassess.simulate import LearnerRecord

    existing = (
        load_cohort(pool, ontology) if pool.exists() else Cohort()
    )
    merged = Cohort(
        (*existing.records, LearnerRecord(record.learner_id, record.knowledge))
    )
    save_cohort(merged, ontology, pool)
    print(f"stored corrected state in {pool}")


def cmd_eval(config: RunConfig, args) -> int:
    ontology = config.ontology()
    cohort = config.cohort(ontology)
    sim = config.simulation_config("eval-sim")
    report = loo_evaluate(
        cohort,
        ontology,
        config.architecture(len(ontology)),
        config.training_config("eval-train"),
        config.strategy(),
        config.stop_rule(),
        sim,
        tau=config.tau,
        master_seed=config.master_seed,
        completeness_floor=config.completeness_floor,
    )
    out_dir = config.out_dir
    report_doc = {
        "statistics": report.as_table_row(),
        "precision_recall": report.precision_recall,
        "failed_folds": list(report.failed_folds),
        "folds": [
            {
                "learner_id": f.learner_id,
                "iterations": f.iterations,
                "error_at_stop": f.error_at_stop,
                "confusion": f.confusion,
            }
            for f in report.folds
        ],
    }
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report_doc, fh, indent=2)
        fh.write("\n")
    write_curve(out_dir / "rolled_error_curve.csv", "mean_error", report.rolled_error_curve)
    write_curve(
        out_dir / "uncertainty_curve.csv",
        "mean_uncertain_count",
        report.rolled_uncertainty_curve,
    )
    # prior comparison uses a model trained on the full cohort
    full_model = train(
        build_dataset(cohort, sim, config.completeness_floor),
        config.architecture(len(ontology)),
        config.training_config("eval-apriori-train"),
    )
    from skillassess.evaluation import apriori_comparison

    write_apriori_pairs(
        out_dir / "apriori_pairs.csv", ontology, apriori_comparison(full_model, cohort)
    )
    write_heatmap(out_dir / "mastery_heatmap.csv", ontology, cohort)
    stats = report.as_table_row()
    print(
        f"learners={stats['learners']} skills={stats['skills']} "
        f"avg_iterations={stats['average_iterations']:.2f} "
        f"avg_error={stats['average_error']:.4f} max_error={stats['maximum_error']:.4f}"
    )
    print(f"wrote report and plot data to {out_dir}")
    return EXIT_OK


def cmd_sweep(config: RunConfig, args) -> int:
    ontology = config.ontology()
    cohort = config.cohort(ontology)
    block = config.doc.get("sweep", {})
    k_values = args.k_values or block.get("k_values", [10, 20, 30, 40, 50])
    seeds = block.get("seeds", [0, 1, 2, 3, 4])
    rows = training_size_sweep(
        cohort,
        ontology,
        k_values,
        seeds,
        config.architecture(len(ontology)),
        config.training_config("sweep-train"),
        config.strategy(),
        config.stop_rule(),
        config.simulation_config("sweep-sim"),
        tau=config.tau,
        master_seed=config.master_seed,
    )
    averaged = seed_averaged_sweep(rows)
    rho = spearman_rho(
        [r["k"] for r in averaged], [r["mean_error"] for r in averaged]
    )
    out = Path(args.out) if args.out else config.out_dir / "sweep.csv"
    with open(out, "w") as fh:
        fh.write("k,seed,mean_error\n")
        for row in rows:
            fh.write(f"{row['k']},{row['seed']},{row['mean_error']}\n")
    for row in averaged:
        print(f"k={row['k']}: mean error {row['mean_error']:.4f}")
    print(f"rank correlation (k vs error): {rho:.3f}")
    print(f"wrote sweep table to {out}")
    return EXIT_OK


def cmd_serve(config: RunConfig, args) -> int:
    import uvicorn

    from skillassess.service import create_app

    model_path = config.path("model", str(config.out_dir / "model.json"))
    if not model_path.exists():
        print(f"model file {model_path} does not exist", file=sys.stderr)
        return EXIT_DATA
    model = load_model(model_path)
    ontology = config.ontology()
    app = create_app(
        model,
        ontology,
        sessions_dir=config.out_dir / "sessions",
        correction_pool=config.out_dir / "correction_pool.csv",
    )
    host, _, port = args.bind.partition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    except OSError as exc:
        print(f"failed to bind {args.bind}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skillassess",
        description="Adaptive skill assessment: data generation, training, "
        "simulated assessments, evaluation and serving.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **extra_args):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--out", default=None, help="override output file")
        p.set_defaults(fn=fn)
        return p

    add("simulate", cmd_simulate)
    add("train", cmd_train)
    p_assess = add("assess", cmd_assess)
    p_assess.add_argument("--mode", choices=["full", "session"], default="full")
    p_assess.add_argument(
        "--learner", default=None, help="recorded learner id; omit for interactive"
    )
    add("eval", cmd_eval)
    p_sweep = add("sweep", cmd_sweep)
    p_sweep.add_argument("--k-values", type=int, nargs="*", default=None)
    p_serve = add("serve", cmd_serve)
    p_serve.add_argument("--bind", default="127.0.0.1:8000")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig.load(args.config)
        if args.seed is not None:
            config.doc["master_seed"] = args.seed
        return args.fn(config, args)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, (CohortFormatError, NoTrainableLearnersError, OntologyError, ModelFormatError)):
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingFault, NumericFaultError) as exc:
        print(f"numeric fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RuntimeError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
