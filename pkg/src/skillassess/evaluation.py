"""Leave-one-out evaluation, sweeps and plot-data emission.

A fold trains on every learner but one and re-simulates the held-out
learner's assessment against the trained model.  Aggregates mirror the
summary statistics of the experiment tables: iteration counts plus the
binary state error on the skills that were never asked.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from skillassess.engine import RecordedOracle, Transcript, run_full_assessment
from skillassess.metrics import precision_recall, rkse
from skillassess.network import (
    NetworkArchitecture,
    TrainedModel,
    TrainingConfig,
    TrainingFault,
    apriori,
    dataset_matrices,
    loss,
    train,
    _forward_batch,
)
from skillassess.ontology import UNASSESSED, UNKNOWN, SkillOntology
from skillassess.seeding import child_seed, rng_for
from skillassess.simulate import Cohort, SimulationConfig, build_dataset
from skillassess.strategies import StopRule, Strategy


@dataclass(frozen=True)
class FoldResult:
    learner_id: str
    transcript: Transcript
    iterations: int
    error_at_stop: float
    confusion: dict

    def step_errors(self) -> list[float]:
        """Per-iteration error on still-unassessed skills, gaps carried over."""
        errors: list[float] = []
        last = 0.0
        for step in self.transcript.steps:
            if step.error_on_unassessed is not None:
                last = step.error_on_unassessed
            else:
                last = 0.0  # nothing left unassessed: no prediction error
            errors.append(last)
        return errors

    def step_uncertainty(self) -> list[int]:
        return [step.uncertain_count for step in self.transcript.steps]


@dataclass(frozen=True)
class EvalReport:
    learner_count: int
    skill_count: int
    average_iterations: float
    maximum_iterations: int
    average_error: float
    error_std: float
    maximum_error: float
    precision_recall: dict
    folds: tuple[FoldResult, ...]
    failed_folds: tuple[str, ...] = ()
    rolled_error_curve: tuple[float, ...] = ()
    rolled_uncertainty_curve: tuple[float, ...] = ()
    apriori_pairs: tuple[tuple[Optional[float], float], ...] = ()

    def as_table_row(self) -> dict:
        return {
            "learners": self.learner_count,
            "skills": self.skill_count,
            "average_iterations": self.average_iterations,
            "maximum_iterations": self.maximum_iterations,
            "average_error": self.average_error,
            "error_std": self.error_std,
            "maximum_error": self.maximum_error,
        }


def _fold_error(transcript: Transcript, truth: np.ndarray, tau: float) -> float:
    assessment = np.asarray(transcript.assessment, dtype=np.int8)
    pool = np.flatnonzero(assessment == UNASSESSED)
    pool = pool[truth[pool] != UNKNOWN]
    if pool.size == 0:
        return 0.0  # every remaining skill was asked; nothing was predicted
    probs = np.asarray(transcript.steps[-1].probabilities) if transcript.steps else None
    predicted = np.asarray(transcript.predicted, dtype=np.int8)
    return float(np.mean(np.abs(predicted[pool] - truth[pool])))


def evaluate_fold(
    model: TrainedModel,
    ontology: SkillOntology,
    truth: np.ndarray,
    learner_id: str,
    strategy: Strategy,
    stop_rule: StopRule,
    tau: float,
    rng_seed: int,
) -> FoldResult:
    transcript = run_full_assessment(
        model,
        ontology,
        RecordedOracle(truth),
        strategy,
        stop_rule=stop_rule,
        tau=tau,
        rng_seed=rng_seed,
    )
    predicted = np.asarray(transcript.predicted, dtype=np.int8)
    known = np.flatnonzero(truth != UNKNOWN)
    return FoldResult(
        learner_id=learner_id,
        transcript=transcript,
        iterations=transcript.question_count,
        error_at_stop=_fold_error(transcript, truth, tau),
        confusion=precision_recall(predicted[known], truth[known]),
    )


def _aggregate(
    folds: Sequence[FoldResult],
    cohort: Cohort,
    skill_count: int,
    failed: Sequence[str],
    model_for_apriori: TrainedModel | None = None,
) -> EvalReport:
    iterations = np.array([f.iterations for f in folds])
    errors = np.array([f.error_at_stop for f in folds])
    pooled = _pooled_confusion(folds, cohort)
    pairs: tuple = ()
    if model_for_apriori is not None:
        pairs = tuple(apriori_comparison(model_for_apriori, cohort))
    return EvalReport(
        learner_count=len(folds),
        skill_count=skill_count,
        average_iterations=float(iterations.mean()),
        maximum_iterations=int(iterations.max()),
        average_error=float(errors.mean()),
        error_std=float(errors.std()),
        maximum_error=float(errors.max()),
        precision_recall=pooled,
        folds=tuple(folds),
        failed_folds=tuple(failed),
        rolled_error_curve=tuple(rolled_error_curves(folds)),
        rolled_uncertainty_curve=tuple(rolled_uncertainty_curves(folds)),
        apriori_pairs=pairs,
    )


def _pooled_confusion(folds: Sequence[FoldResult], cohort: Cohort) -> dict:
    predicted_all: list[np.ndarray] = []
    truth_all: list[np.ndarray] = []
    for fold in folds:
        truth = cohort.get(fold.learner_id).knowledge
        known = np.flatnonzero(truth != UNKNOWN)
        predicted_all.append(np.asarray(fold.transcript.predicted, dtype=np.int8)[known])
        truth_all.append(truth[known])
    if not predicted_all:
        return {}
    return precision_recall(np.concatenate(predicted_all), np.concatenate(truth_all))


def loo_evaluate(
    cohort: Cohort,
    ontology: SkillOntology,
    arch: NetworkArchitecture,
    training_config: TrainingConfig,
    strategy: Strategy,
    stop_rule: StopRule,
    sim_config: SimulationConfig,
    tau: float = 0.5,
    master_seed: int = 0,
    completeness_floor: float = 0.8,
) -> EvalReport:
    """Train holding out one learner at a time; assess the held-out learner."""
    if len(cohort) < 2:
        raise ValueError("leave-one-out needs at least 2 learners")
    folds: list[FoldResult] = []
    failed: list[str] = []
    for record in cohort:
        rest = cohort.without(record.learner_id)
        fold_sim = SimulationConfig(
            samples_per_learner=sim_config.samples_per_learner,
            subset_size_law=sim_config.subset_size_law,
            rng_seed=child_seed(master_seed, "fold-sim", record.learner_id),
        )
        dataset = build_dataset(rest, fold_sim, completeness_floor)
        fold_training = TrainingConfig(
            loss_kind=training_config.loss_kind,
            learning_rate=training_config.learning_rate,
            epochs=training_config.epochs,
            batch_size=training_config.batch_size,
            rng_seed=child_seed(master_seed, "fold-train", record.learner_id),
            init_scale=training_config.init_scale,
        )
        try:
            model = train(
                dataset,
                arch,
                fold_training,
                provenance_extra={"training_learner_ids": rest.ids()},
            )
        except TrainingFault:
            failed.append(record.learner_id)
            continue
        folds.append(
            evaluate_fold(
                model,
                ontology,
                record.knowledge,
                record.learner_id,
                strategy,
                stop_rule,
                tau,
                rng_seed=child_seed(master_seed, "fold-assess", record.learner_id),
            )
        )
    if not folds:
        raise RuntimeError("every fold failed to train")
    return _aggregate(folds, cohort, len(ontology), failed)


def rolled_error_curves(folds: Sequence[FoldResult]) -> list[float]:
    """Mean per-iteration error, each learner frozen at their stop value."""
    if not folds:
        raise ValueError("no folds to aggregate")
    per_fold = [f.step_errors() for f in folds]
    length = max((len(e) for e in per_fold), default=0)
    curve = []
    for t in range(length):
        values = [e[min(t, len(e) - 1)] if e else 0.0 for e in per_fold]
        curve.append(float(np.mean(values)))
    return curve


def rolled_uncertainty_curves(folds: Sequence[FoldResult]) -> list[float]:
    per_fold = [f.step_uncertainty() for f in folds]
    length = max((len(u) for u in per_fold), default=0)
    curve = []
    for t in range(length):
        values = [u[min(t, len(u) - 1)] if u else 0 for u in per_fold]
        curve.append(float(np.mean(values)))
    return curve


def training_size_sweep(
    cohort: Cohort,
    ontology: SkillOntology,
    k_values: Sequence[int],
    seeds: Sequence[int],
    arch: NetworkArchitecture,
    training_config: TrainingConfig,
    strategy: Strategy,
    stop_rule: StopRule,
    sim_config: SimulationConfig,
    tau: float = 0.5,
    master_seed: int = 0,
) -> list[dict]:
    """Error vs training-cohort size: sample k learners, assess the cohort.

    When an evaluated learner is among the sampled k, a variant model trained
    on the other k-1 is used so the learner never sees themselves in training.
    """
    for k in k_values:
        if k > len(cohort):
            raise ValueError(f"k={k} exceeds cohort size {len(cohort)}")
        if k < 2:
            raise ValueError("k must be >= 2")
    rows: list[dict] = []
    all_ids = cohort.ids()
    for k in k_values:
        for seed in seeds:
            cell_rng = rng_for(master_seed, "sweep-sample", k, seed)
            sampled = sorted(cell_rng.choice(all_ids, size=k, replace=False).tolist())
            sampled_set = set(sampled)

            def cell_model(excluded: str | None) -> TrainedModel:
                ids = [i for i in sampled if i != excluded]
                sim = SimulationConfig(
                    samples_per_learner=sim_config.samples_per_learner,
                    subset_size_law=sim_config.subset_size_law,
                    rng_seed=child_seed(master_seed, "sweep-sim", k, seed, excluded),
                )
                tc = TrainingConfig(
                    loss_kind=training_config.loss_kind,
                    learning_rate=training_config.learning_rate,
                    epochs=training_config.epochs,
                    batch_size=training_config.batch_size,
                    rng_seed=child_seed(master_seed, "sweep-train", k, seed, excluded),
                    init_scale=training_config.init_scale,
                )
                dataset = build_dataset(cohort.subset(ids), sim)
                return train(dataset, arch, tc, {"training_learner_ids": ids})

            base = cell_model(None)
            errors = []
            for record in cohort:
                model = (
                    cell_model(record.learner_id)
                    if record.learner_id in sampled_set
                    else base
                )
                fold = evaluate_fold(
                    model,
                    ontology,
                    record.knowledge,
                    record.learner_id,
                    strategy,
                    stop_rule,
                    tau,
                    rng_seed=child_seed(
                        master_seed, "sweep-assess", k, seed, record.learner_id
                    ),
                )
                errors.append(fold.error_at_stop)
            rows.append(
                {"k": int(k), "seed": int(seed), "mean_error": float(np.mean(errors))}
            )
    return rows


def seed_averaged_sweep(rows: Sequence[dict]) -> list[dict]:
    by_k: dict[int, list[float]] = {}
    for row in rows:
        by_k.setdefault(row["k"], []).append(row["mean_error"])
    return [
        {"k": k, "mean_error": float(np.mean(v))} for k, v in sorted(by_k.items())
    ]


def spearman_rho(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Rank correlation; average ranks on ties."""
    def ranks(values: Sequence[float]) -> np.ndarray:
        arr = np.asarray(values, dtype=np.float64)
        order = np.argsort(arr, kind="stable")
        r = np.empty(len(arr))
        r[order] = np.arange(1, len(arr) + 1)
        for value in np.unique(arr):
            mask = arr == value
            r[mask] = r[mask].mean()
        return r

    rx, ry = ranks(xs), ranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt((rx**2).sum() * (ry**2).sum())
    if denom == 0:
        return 0.0
    return float((rx * ry).sum() / denom)


def apriori_comparison(
    model: TrainedModel, cohort: Cohort
) -> list[tuple[Optional[float], float]]:
    """Per skill: (empirical mastery fraction, model prior probability)."""
    prior = apriori(model)
    n = model.n_skills
    pairs: list[tuple[Optional[float], float]] = []
    states = (
        np.stack([r.knowledge for r in cohort]) if len(cohort) else np.empty((0, n))
    )
    for s in range(n):
        column = states[:, s] if len(cohort) else np.empty(0)
        known = column[column != UNKNOWN]
        empirical = float(np.mean(known == 1)) if known.size else None
        pairs.append((empirical, float(prior[s])))
    return pairs


class SearchFailure(RuntimeError):
    pass


def architecture_search(
    cohort: Cohort,
    ontology: SkillOntology,
    candidates: Sequence[NetworkArchitecture],
    training_config: TrainingConfig,
    sim_config: SimulationConfig,
    validation_fraction: float = 0.25,
    master_seed: int = 0,
) -> list[dict]:
    """Rank candidate architectures by squared loss on held-out learners."""
    if not candidates:
        raise ValueError("candidate grid is empty")
    ids = cohort.ids()
    rng = rng_for(master_seed, "arch-split")
    shuffled = list(rng.permutation(ids))
    val_count = max(1, int(round(validation_fraction * len(ids))))
    val_ids, train_ids = shuffled[:val_count], shuffled[val_count:]
    if not train_ids:
        raise ValueError("no learners left for training after the split")
    train_set = build_dataset(
        cohort.subset(train_ids),
        SimulationConfig(
            samples_per_learner=sim_config.samples_per_learner,
            subset_size_law=sim_config.subset_size_law,
            rng_seed=child_seed(master_seed, "arch-train-sim"),
        ),
    )
    val_set = build_dataset(
        cohort.subset(val_ids),
        SimulationConfig(
            samples_per_learner=sim_config.samples_per_learner,
            subset_size_law=sim_config.subset_size_law,
            rng_seed=child_seed(master_seed, "arch-val-sim"),
        ),
    )
    val_inputs, val_targets = dataset_matrices(val_set)
    results = []
    for rank_seed, arch in enumerate(candidates):
        tc = TrainingConfig(
            loss_kind=training_config.loss_kind,
            learning_rate=training_config.learning_rate,
            epochs=training_config.epochs,
            batch_size=training_config.batch_size,
            rng_seed=child_seed(master_seed, "arch-train", rank_seed),
            init_scale=training_config.init_scale,
        )
        try:
            model = train(train_set, arch, tc, {"training_learner_ids": train_ids})
        except TrainingFault:
            continue
        _, acts = _forward_batch(model.weights, model.biases, val_inputs)
        score = loss(acts[-1].ravel(), val_targets.ravel(), "squared")
        results.append(
            {
                "layer_sizes": list(arch.layer_sizes),
                "validation_loss": float(score),
                "provenance": model.provenance,
            }
        )
    if not results:
        raise SearchFailure("every candidate diverged during training")
    return sorted(results, key=lambda r: r["validation_loss"])


def mastery_heatmap(cohort: Cohort) -> np.ndarray:
    """Skills x learners matrix of 1/0 mastery, -1 where unknown."""
    if not len(cohort):
        return np.empty((0, 0), dtype=np.int8)
    return np.stack([r.knowledge for r in cohort], axis=1).astype(np.int8)


# ---------------------------------------------------------------------------
# Plot-data emission (delimited text, one series per file)


def write_curve(path, header: str, values: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", header])
        for i, v in enumerate(values, start=1):
            writer.writerow([i, v])


def write_apriori_pairs(path, ontology: SkillOntology, pairs) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["skill_id", "empirical_mastery", "model_prior"])
        for skill, (empirical, prior) in zip(ontology.skills, pairs):
            writer.writerow(
                [skill.id, "" if empirical is None else empirical, prior]
            )


def write_heatmap(path, ontology: SkillOntology, cohort: Cohort) -> None:
    matrix = mastery_heatmap(cohort)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["skill_id", *cohort.ids()])
        for skill, row in zip(ontology.skills, matrix):
            writer.writerow(
                [skill.id, *("" if v == UNKNOWN else int(v) for v in row)]
            )


def read_heatmap(path) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        learner_ids = header[1:]
        skill_ids = []
        rows = []
        for row in reader:
            skill_ids.append(row[0])
            rows.append([UNKNOWN if c == "" else int(c) for c in row[1:]])
    return skill_ids, learner_ids, np.asarray(rows, dtype=np.int8)
