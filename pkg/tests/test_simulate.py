import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skillassess.ontology import UNKNOWN, is_consistent, knowledge_state
from skillassess.simulate import (
    ClosureContradictionError,
    Cohort,
    CohortFormatError,
    FrontLoadedLaw,
    LearnerRecord,
    NoTrainableLearnersError,
    SimulationConfig,
    SpreadLaw,
    ThresholdLaw,
    build_dataset,
    load_cohort,
    prerequisite_closure,
    save_cohort,
    simulate_states,
    synth_personas,
)


class TestSimulateStates:
    def test_consistent_with_source(self):
        sigma = knowledge_state([1, 1, 1, 0, 1, 0])
        config = SimulationConfig(samples_per_learner=200, rng_seed=5)
        for state in simulate_states(sigma, config):
            assert is_consistent(state, sigma)

    def test_count_is_exact(self):
        sigma = knowledge_state([1, 0, 1])
        states = simulate_states(sigma, SimulationConfig(samples_per_learner=17))
        assert len(states) == 17

    def test_m_zero_gives_empty_state(self):
        sigma = knowledge_state([1, 0])
        config = SimulationConfig(
            samples_per_learner=3,
            subset_size_law=lambda rng, n, k: np.zeros(k, dtype=int),
        )
        for state in simulate_states(sigma, config):
            assert state.tolist() == [0, 0]

    def test_full_reveal_determines_state(self):
        sigma = knowledge_state([1, 0, 1, 1])
        config = SimulationConfig(
            samples_per_learner=5,
            subset_size_law=lambda rng, n, k: np.full(k, n, dtype=int),
        )
        for state in simulate_states(sigma, config):
            assert state.tolist() == (2 * sigma - 1).tolist()

    def test_unknown_truth_stays_unassessed(self):
        sigma = knowledge_state([1, UNKNOWN, 0])
        config = SimulationConfig(
            samples_per_learner=20,
            subset_size_law=lambda rng, n, k: np.full(k, n, dtype=int),
        )
        for state in simulate_states(sigma, config):
            assert state[1] == 0

    def test_deterministic_for_seed(self):
        sigma = knowledge_state([1, 0, 1, 0, 1])
        a = simulate_states(sigma, SimulationConfig(samples_per_learner=50, rng_seed=9))
        b = simulate_states(sigma, SimulationConfig(samples_per_learner=50, rng_seed=9))
        assert all(x.tobytes() == y.tobytes() for x, y in zip(a, b))

    @settings(max_examples=50)
    @given(
        st.lists(st.integers(0, 1), min_size=1, max_size=20),
        st.integers(0, 2**32 - 1),
    )
    def test_fuzz_never_contradicts(self, bits, seed):
        sigma = knowledge_state(bits)
        config = SimulationConfig(samples_per_learner=20, rng_seed=seed)
        for state in simulate_states(sigma, config):
            assert is_consistent(state, sigma)


class TestBuildDataset:
    def _cohort(self, rows):
        return Cohort(
            tuple(
                LearnerRecord(f"l{i}", knowledge_state(r)) for i, r in enumerate(rows)
            )
        )

    def test_below_floor_excluded(self):
        rows = [[1, 1, 1, 1, 1, 1, 1, UNKNOWN, UNKNOWN, UNKNOWN]]  # 7/10 known
        with pytest.raises(NoTrainableLearnersError):
            build_dataset(self._cohort(rows), SimulationConfig(samples_per_learner=2))

    def test_fully_known_learner(self):
        cohort = self._cohort([[1, 0, 1]])
        examples = build_dataset(cohort, SimulationConfig(samples_per_learner=3))
        assert len(examples) == 3
        for ex in examples:
            assert not np.any(ex.target == 0.5)

    def test_nine_of_ten_known(self):
        rows = [[1] * 9 + [UNKNOWN]]
        examples = build_dataset(
            self._cohort(rows), SimulationConfig(samples_per_learner=4)
        )
        assert len(examples) == 4
        for ex in examples:
            assert int(np.sum(ex.target == 0.5)) == 1

    def test_count_is_retained_times_k(self):
        rows = [[1, 0, 1, 0], [0, 0, 1, 1], [1, UNKNOWN, UNKNOWN, UNKNOWN]]
        examples = build_dataset(
            self._cohort(rows), SimulationConfig(samples_per_learner=5)
        )
        assert len(examples) == 2 * 5

    def test_input_consistent_with_binary_targets(self):
        rows = [[1, 0, 1, 0, UNKNOWN] + [1] * 15]
        examples = build_dataset(
            self._cohort(rows), SimulationConfig(samples_per_learner=30)
        )
        for ex in examples:
            assert np.all(ex.target[ex.input == 1] == 1.0)
            assert np.all(ex.target[ex.input == -1] == 0.0)

    def test_deterministic(self):
        rows = [[1, 0, 1, 0], [0, 1, 1, 1]]
        a = build_dataset(self._cohort(rows), SimulationConfig(5, rng_seed=3))
        b = build_dataset(self._cohort(rows), SimulationConfig(5, rng_seed=3))
        assert all(
            x.input.tobytes() == y.input.tobytes()
            and x.target.tobytes() == y.target.tobytes()
            for x, y in zip(a, b)
        )


class TestPrerequisiteClosure:
    def test_mastered_propagates_to_prerequisites(self, figure_ontology):
        alpha = np.zeros(7, dtype=np.int8)
        alpha[figure_ontology.index_of("s5")] = 1
        closed = prerequisite_closure(figure_ontology, alpha)
        assert closed[figure_ontology.index_of("s2")] == 1
        assert closed[figure_ontology.index_of("s1")] == 1

    def test_unmastered_propagates_to_dependents(self, figure_ontology):
        alpha = np.zeros(7, dtype=np.int8)
        alpha[figure_ontology.index_of("s5")] = -1
        closed = prerequisite_closure(figure_ontology, alpha)
        assert closed[figure_ontology.index_of("s6")] == -1

    def test_no_edges_is_identity(self, ontology6):
        alpha = np.array([1, -1, 0, 0, 1, 0], dtype=np.int8)
        assert prerequisite_closure(ontology6, alpha).tolist() == alpha.tolist()

    def test_contradiction_names_skill(self, figure_ontology):
        alpha = np.zeros(7, dtype=np.int8)
        alpha[figure_ontology.index_of("s5")] = 1  # forces s2 mastered
        alpha[figure_ontology.index_of("s1")] = -1  # forces s2 unmastered
        with pytest.raises(ClosureContradictionError):
            prerequisite_closure(figure_ontology, alpha)

    def test_idempotent(self, figure_ontology):
        alpha = np.zeros(7, dtype=np.int8)
        alpha[4] = 1
        once = prerequisite_closure(figure_ontology, alpha)
        twice = prerequisite_closure(figure_ontology, once)
        assert once.tolist() == twice.tolist()

    def test_never_zeroes_nonzero(self, figure_ontology):
        alpha = np.zeros(7, dtype=np.int8)
        alpha[0] = 1
        alpha[6] = -1
        closed = prerequisite_closure(figure_ontology, alpha)
        nonzero = np.flatnonzero(alpha)
        assert np.all(closed[nonzero] == alpha[nonzero])


class TestPersonas:
    def test_threshold_zero_all_unmastered(self, ontology6):
        cohort = synth_personas(ontology6, 3, ThresholdLaw(0.0))
        for record in cohort:
            assert record.knowledge.tolist() == [0] * 6

    def test_threshold_one_all_mastered(self, ontology6):
        cohort = synth_personas(ontology6, 3, ThresholdLaw(1.0))
        for record in cohort:
            assert record.knowledge.tolist() == [1] * 6

    def test_front_loaded_mastery_decays_with_index(self):
        from skillassess.evaluation import spearman_rho
        from skillassess.ontology import SkillOntology

        onto = SkillOntology.from_lists([f"s{i}" for i in range(50)])
        cohort = synth_personas(onto, 1000, FrontLoadedLaw(0.8, 0.05), rng_seed=7)
        mastery = np.mean([r.knowledge for r in cohort], axis=0)
        rho = spearman_rho(list(range(50)), mastery.tolist())
        assert rho < 0

    def test_personas_respect_prerequisites(self, figure_ontology):
        cohort = synth_personas(figure_ontology, 50, SpreadLaw(0.5), rng_seed=3)
        prereq_pairs = [
            (figure_ontology.index_of(a), figure_ontology.index_of(b))
            for a, b in figure_ontology.prerequisites
        ]
        for record in cohort:
            for frm, to in prereq_pairs:
                if record.knowledge[to] == 1:
                    assert record.knowledge[frm] == 1


class TestCohortFile:
    def test_round_trip(self, tmp_path, ontology6):
        cohort = Cohort(
            (
                LearnerRecord("a", knowledge_state([1, 0, 1, UNKNOWN, 0, 1])),
                LearnerRecord("b", knowledge_state([0, 0, 0, 0, 0, 0])),
            )
        )
        path = tmp_path / "cohort.csv"
        save_cohort(cohort, ontology6, path)
        loaded = load_cohort(path, ontology6)
        assert loaded.ids() == ["a", "b"]
        for orig, back in zip(cohort, loaded):
            assert orig.knowledge.tolist() == back.knowledge.tolist()

    def test_duplicate_row_rejected(self, tmp_path, ontology6):
        path = tmp_path / "cohort.csv"
        path.write_text(
            "learner_id,skill_id,mastered\na,s1,1\na,s1,0\n"
        )
        with pytest.raises(CohortFormatError, match="row 3"):
            load_cohort(path, ontology6)

    def test_bad_value_rejected(self, tmp_path, ontology6):
        path = tmp_path / "cohort.csv"
        path.write_text("learner_id,skill_id,mastered\na,s1,2\n")
        with pytest.raises(CohortFormatError):
            load_cohort(path, ontology6)
