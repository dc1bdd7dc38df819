import numpy as np
import pytest

from skillassess.evaluation import (
    SearchFailure,
    apriori_comparison,
    architecture_search,
    loo_evaluate,
    mastery_heatmap,
    read_heatmap,
    rolled_error_curves,
    rolled_uncertainty_curves,
    seed_averaged_sweep,
    spearman_rho,
    training_size_sweep,
    write_apriori_pairs,
    write_curve,
    write_heatmap,
)
from skillassess.network import (
    NetworkArchitecture,
    TrainingConfig,
    train,
    zero_model,
)
from skillassess.ontology import UNKNOWN, SkillOntology, knowledge_state
from skillassess.simulate import (
    Cohort,
    LearnerRecord,
    SimulationConfig,
    build_dataset,
)
from skillassess.strategies import HybridStrategy, MaxUncertaintyStrategy, StopRule


def expert_cohort(n, count, prefix="expert"):
    return Cohort(
        tuple(
            LearnerRecord(f"{prefix}-{i}", knowledge_state([1] * n))
            for i in range(count)
        )
    )


class TestSpearman:
    def test_perfect_positive(self):
        assert spearman_rho([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)

    def test_perfect_negative(self):
        assert spearman_rho([1, 2, 3], [5, 4, 3]) == pytest.approx(-1.0)

    def test_constant_series_zero(self):
        assert spearman_rho([1, 2, 3], [7, 7, 7]) == 0.0

    def test_ties_average_ranks(self):
        # ys ranks: 1.5, 1.5, 3 -> positive but below 1
        rho = spearman_rho([1, 2, 3], [4, 4, 9])
        assert 0 < rho < 1


class TestLooEvaluate:
    def test_identical_experts_stop_early_with_zero_error(self):
        onto = SkillOntology.from_lists([f"s{i}" for i in range(8)])
        cohort = expert_cohort(8, 2)
        report = loo_evaluate(
            cohort,
            onto,
            NetworkArchitecture.default_for(8),
            TrainingConfig(epochs=80, rng_seed=0),
            MaxUncertaintyStrategy(),
            StopRule(epsilon=0.1),
            SimulationConfig(samples_per_learner=60),
            master_seed=1,
        )
        assert report.learner_count == 2
        assert report.average_error == 0.0
        assert report.average_iterations < 8

    def test_report_shape(self, small_cohort):
        onto, cohort = small_cohort
        sub = cohort.subset(cohort.ids()[:4])
        report = loo_evaluate(
            sub,
            onto,
            NetworkArchitecture.default_for(len(onto)),
            TrainingConfig(epochs=15, rng_seed=0),
            HybridStrategy(),
            StopRule(epsilon=0.1),
            SimulationConfig(samples_per_learner=30),
            master_seed=2,
        )
        row = report.as_table_row()
        assert row["learners"] == 4
        assert row["skills"] == len(onto)
        assert 0.0 <= row["average_error"] <= row["maximum_error"] <= 1.0
        assert row["average_iterations"] <= row["maximum_iterations"] <= len(onto)
        assert set(report.precision_recall) == {
            "precision",
            "recall",
            "negative_precision",
            "negative_recall",
        }
        assert len(report.rolled_error_curve) == row["maximum_iterations"]

    def test_deterministic(self, small_cohort):
        onto, cohort = small_cohort
        sub = cohort.subset(cohort.ids()[:3])

        def run():
            return loo_evaluate(
                sub,
                onto,
                NetworkArchitecture.default_for(len(onto)),
                TrainingConfig(epochs=8, rng_seed=0),
                HybridStrategy(),
                StopRule(epsilon=0.1),
                SimulationConfig(samples_per_learner=20),
                master_seed=5,
            )

        a, b = run(), run()
        assert a.average_error == b.average_error
        assert [f.transcript for f in a.folds] == [f.transcript for f in b.folds]

    def test_too_small_cohort(self):
        onto = SkillOntology.from_lists(["s1"])
        with pytest.raises(ValueError):
            loo_evaluate(
                expert_cohort(1, 1),
                onto,
                NetworkArchitecture.default_for(1),
                TrainingConfig(),
                MaxUncertaintyStrategy(),
                StopRule(),
                SimulationConfig(),
            )


class TestRolledCurves:
    def _folds(self, small_cohort):
        onto, cohort = small_cohort
        sub = cohort.subset(cohort.ids()[:3])
        report = loo_evaluate(
            sub,
            onto,
            NetworkArchitecture.default_for(len(onto)),
            TrainingConfig(epochs=10, rng_seed=0),
            HybridStrategy(),
            StopRule(epsilon=0.1),
            SimulationConfig(samples_per_learner=20),
            master_seed=3,
        )
        return report.folds

    def test_curves_span_longest_fold(self, small_cohort):
        folds = self._folds(small_cohort)
        longest = max(f.iterations for f in folds)
        assert len(rolled_error_curves(folds)) == longest
        assert len(rolled_uncertainty_curves(folds)) == longest

    def test_short_folds_freeze_at_stop(self, small_cohort):
        folds = self._folds(small_cohort)
        curve = rolled_error_curves(folds)
        # the last value is the mean of all stop values, with short folds
        # contributing their final (frozen) error
        expected = np.mean([f.step_errors()[-1] for f in folds])
        assert curve[-1] == pytest.approx(expected)

    def test_empty_folds_rejected(self):
        with pytest.raises(ValueError):
            rolled_error_curves([])


class TestTrainingSizeSweep:
    def test_rows_and_determinism(self, small_cohort):
        onto, cohort = small_cohort
        sub = cohort.subset(cohort.ids()[:6])
        kwargs = dict(
            cohort=sub,
            ontology=onto,
            k_values=[2, 4],
            seeds=[0],
            arch=NetworkArchitecture.default_for(len(onto)),
            training_config=TrainingConfig(epochs=6, rng_seed=0),
            strategy=HybridStrategy(),
            stop_rule=StopRule(epsilon=0.1),
            sim_config=SimulationConfig(samples_per_learner=15),
            master_seed=4,
        )
        rows = training_size_sweep(**kwargs)
        assert [(r["k"], r["seed"]) for r in rows] == [(2, 0), (4, 0)]
        assert rows == training_size_sweep(**kwargs)

    def test_seed_averaging(self):
        rows = [
            {"k": 2, "seed": 0, "mean_error": 0.4},
            {"k": 2, "seed": 1, "mean_error": 0.2},
            {"k": 4, "seed": 0, "mean_error": 0.1},
        ]
        assert seed_averaged_sweep(rows) == [
            {"k": 2, "mean_error": pytest.approx(0.3)},
            {"k": 4, "mean_error": 0.1},
        ]

    def test_k_bounds(self, small_cohort):
        onto, cohort = small_cohort
        base = dict(
            cohort=cohort.subset(cohort.ids()[:3]),
            ontology=onto,
            seeds=[0],
            arch=NetworkArchitecture.default_for(len(onto)),
            training_config=TrainingConfig(),
            strategy=HybridStrategy(),
            stop_rule=StopRule(),
            sim_config=SimulationConfig(),
        )
        with pytest.raises(ValueError):
            training_size_sweep(k_values=[5], **base)
        with pytest.raises(ValueError):
            training_size_sweep(k_values=[1], **base)


class TestApriori:
    def test_all_expert_prior_high(self):
        n = 6
        cohort = expert_cohort(n, 4)
        dataset = build_dataset(cohort, SimulationConfig(samples_per_learner=80))
        model = train(
            dataset,
            NetworkArchitecture.default_for(n),
            TrainingConfig(epochs=120, rng_seed=0),
        )
        pairs = apriori_comparison(model, cohort)
        for empirical, prior in pairs:
            assert empirical == 1.0
            assert prior >= 0.9

    def test_unknown_skill_has_none_empirical(self):
        cohort = Cohort(
            (LearnerRecord("a", knowledge_state([1, UNKNOWN])),)
        )
        pairs = apriori_comparison(zero_model(2), cohort)
        assert pairs[0][0] == 1.0
        assert pairs[1][0] is None
        assert pairs[0][1] == 0.5

    def test_empty_cohort(self):
        pairs = apriori_comparison(zero_model(2), Cohort())
        assert [p[0] for p in pairs] == [None, None]


class TestArchitectureSearch:
    def test_ranks_candidates(self, small_cohort):
        onto, cohort = small_cohort
        n = len(onto)
        candidates = [
            NetworkArchitecture((n, n, n)),
            NetworkArchitecture.default_for(n),
        ]
        results = architecture_search(
            cohort.subset(cohort.ids()[:6]),
            onto,
            candidates,
            TrainingConfig(epochs=8, rng_seed=0),
            SimulationConfig(samples_per_learner=20),
            master_seed=6,
        )
        assert len(results) == 2
        losses = [r["validation_loss"] for r in results]
        assert losses == sorted(losses)
        assert all("provenance" in r for r in results)

    def test_empty_grid_rejected(self, small_cohort):
        onto, cohort = small_cohort
        with pytest.raises(ValueError):
            architecture_search(
                cohort, onto, [], TrainingConfig(), SimulationConfig()
            )


class TestHeatmap:
    def test_matrix_shape_and_values(self):
        cohort = Cohort(
            (
                LearnerRecord("a", knowledge_state([1, 0, UNKNOWN])),
                LearnerRecord("b", knowledge_state([0, 1, 1])),
            )
        )
        matrix = mastery_heatmap(cohort)
        assert matrix.shape == (3, 2)  # skills x learners
        assert matrix[:, 0].tolist() == [1, 0, -1]
        assert matrix[:, 1].tolist() == [0, 1, 1]

    def test_file_round_trip(self, tmp_path):
        onto = SkillOntology.from_lists(["s1", "s2", "s3"])
        cohort = Cohort(
            (
                LearnerRecord("a", knowledge_state([1, 0, UNKNOWN])),
                LearnerRecord("b", knowledge_state([0, 1, 1])),
            )
        )
        path = tmp_path / "heatmap.csv"
        write_heatmap(path, onto, cohort)
        skill_ids, learner_ids, matrix = read_heatmap(path)
        assert skill_ids == ["s1", "s2", "s3"]
        assert learner_ids == ["a", "b"]
        assert matrix.tolist() == mastery_heatmap(cohort).tolist()


class TestPlotFiles:
    def test_curve_file(self, tmp_path):
        path = tmp_path / "curve.csv"
        write_curve(path, "error", [0.5, 0.25])
        lines = path.read_text().splitlines()
        assert lines[0] == "iteration,error"
        assert lines[1] == "1,0.5"
        assert lines[2] == "2,0.25"

    def test_apriori_file_blank_for_none(self, tmp_path):
        onto = SkillOntology.from_lists(["s1", "s2"])
        path = tmp_path / "pairs.csv"
        write_apriori_pairs(path, onto, [(0.75, 0.8), (None, 0.5)])
        lines = path.read_text().splitlines()
        assert lines[0] == "skill_id,empirical_mastery,model_prior"
        assert lines[1] == "s1,0.75,0.8"
        assert lines[2] == "s2,,0.5"
