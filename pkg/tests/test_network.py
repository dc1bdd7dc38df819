import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skillassess.network import (
    ModelFormatError,
    NetworkArchitecture,
    NumericFaultError,
    TrainedModel,
    TrainingConfig,
    TrainingFault,
    apriori,
    dataset_fingerprint,
    forward,
    grad_check,
    init_parameters,
    load_model,
    loss,
    save_model,
    train,
    zero_model,
)
from skillassess.ontology import assessment_state
from skillassess.simulate import SimulationConfig, TrainingExample, build_dataset, Cohort, LearnerRecord
from skillassess.ontology import knowledge_state


def _toy_dataset(n=4, count=40, seed=0):
    rng = np.random.default_rng(seed)
    rows = [rng.integers(0, 2, size=n).tolist() for _ in range(3)]
    cohort = Cohort(
        tuple(LearnerRecord(f"l{i}", knowledge_state(r)) for i, r in enumerate(rows))
    )
    return build_dataset(cohort, SimulationConfig(samples_per_learner=count // 3 + 1, rng_seed=seed))


class TestArchitecture:
    def test_default_shape(self):
        arch = NetworkArchitecture.default_for(7)
        assert arch.layer_sizes == (7, 14, 14, 7)

    def test_width_mismatch_rejected(self):
        with pytest.raises(ValueError):
            NetworkArchitecture((4, 8, 5))

    def test_needs_hidden_layer(self):
        with pytest.raises(ValueError):
            NetworkArchitecture((4, 4))


class TestForward:
    def test_zero_model_outputs_half(self):
        model = zero_model(5)
        out = forward(model, assessment_state([1, -1, 0, 0, 1]))
        assert out.tolist() == [0.5] * 5

    def test_outputs_in_unit_interval(self):
        arch = NetworkArchitecture.default_for(6)
        rng = np.random.default_rng(1)
        w, b = init_parameters(arch, rng, init_scale=3.0)
        model = TrainedModel(arch, tuple(w), tuple(b), provenance={"kind": "test"})
        out = forward(model, assessment_state([1, 1, -1, 0, 0, -1]))
        assert np.all(out >= 0.0) and np.all(out <= 1.0)

    def test_non_finite_raises(self):
        model = zero_model(2)
        bad = TrainedModel(
            model.architecture,
            model.weights,
            (model.biases[0], np.full(2, np.nan)),
            provenance={"kind": "test"},
        )
        with pytest.raises(NumericFaultError):
            forward(bad, assessment_state([1, 0]))

    def test_apriori_is_forward_on_zeros(self):
        arch = NetworkArchitecture.default_for(4)
        w, b = init_parameters(arch, np.random.default_rng(2))
        model = TrainedModel(arch, tuple(w), tuple(b), provenance={"kind": "test"})
        expected = forward(model, assessment_state([0, 0, 0, 0]))
        assert apriori(model).tolist() == expected.tolist()


class TestLoss:
    def test_squared_hand_value(self):
        # mean((0.2, -0.4)**2) = (0.04 + 0.16) / 2 = 0.1
        assert loss(np.array([0.7, 0.1]), np.array([0.5, 0.5])) == pytest.approx(0.1)

    def test_absolute_hand_value(self):
        assert loss(
            np.array([0.7, 0.1]), np.array([0.5, 0.5]), loss_kind="absolute"
        ) == pytest.approx(0.3)

    def test_perfect_prediction_zero(self):
        t = np.array([0.0, 0.5, 1.0])
        assert loss(t, t) == 0.0


class TestGradCheck:
    @pytest.mark.parametrize("loss_kind", ["squared", "absolute"])
    def test_random_fixture_close(self, loss_kind):
        arch = NetworkArchitecture((3, 6, 3))
        ex = TrainingExample(
            input=assessment_state([1, -1, 0]),
            target=np.array([1.0, 0.0, 0.5]),
        )
        assert grad_check(arch, ex, loss_kind=loss_kind, rng_seed=4) < 1e-4

    def test_deeper_network(self):
        arch = NetworkArchitecture((4, 8, 8, 4))
        ex = TrainingExample(
            input=assessment_state([0, 1, 1, -1]),
            target=np.array([0.5, 1.0, 1.0, 0.0]),
        )
        assert grad_check(arch, ex, rng_seed=7) < 1e-4


class TestTrain:
    def test_loss_decreases(self):
        dataset = _toy_dataset()
        arch = NetworkArchitecture.default_for(4)
        model = train(dataset, arch, TrainingConfig(epochs=30, rng_seed=1))
        assert model.provenance["final_loss"] < model.provenance["initial_loss"]

    def test_deterministic_for_seed(self):
        dataset = _toy_dataset()
        arch = NetworkArchitecture.default_for(4)
        config = TrainingConfig(epochs=5, rng_seed=9)
        a = train(dataset, arch, config)
        b = train(dataset, arch, config)
        assert all(x.tobytes() == y.tobytes() for x, y in zip(a.weights, b.weights))
        assert all(x.tobytes() == y.tobytes() for x, y in zip(a.biases, b.biases))

    def test_seed_changes_model(self):
        dataset = _toy_dataset()
        arch = NetworkArchitecture.default_for(4)
        a = train(dataset, arch, TrainingConfig(epochs=2, rng_seed=1))
        b = train(dataset, arch, TrainingConfig(epochs=2, rng_seed=2))
        assert any(x.tobytes() != y.tobytes() for x, y in zip(a.weights, b.weights))

    def test_non_finite_loss_reports_epoch(self):
        dataset = _toy_dataset()
        poisoned = dataset + [
            TrainingExample(
                input=dataset[0].input, target=np.full(4, np.nan)
            )
        ]
        arch = NetworkArchitecture.default_for(4)
        with pytest.raises(TrainingFault) as exc:
            train(poisoned, arch, TrainingConfig(epochs=3))
        assert exc.value.epoch == 0

    def test_provenance_recorded(self):
        dataset = _toy_dataset()
        arch = NetworkArchitecture.default_for(4)
        model = train(
            dataset, arch, TrainingConfig(epochs=2), provenance_extra={"note": "x"}
        )
        prov = model.provenance
        assert prov["dataset_fingerprint"] == dataset_fingerprint(dataset)
        assert prov["example_count"] == len(dataset)
        assert prov["config"]["epochs"] == 2
        assert prov["note"] == "x"

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            train([], NetworkArchitecture.default_for(4), TrainingConfig())

    def test_width_mismatch_rejected(self):
        dataset = _toy_dataset(n=4)
        with pytest.raises(ValueError):
            train(dataset, NetworkArchitecture.default_for(5), TrainingConfig())


class TestModelFile:
    def _model(self, n=5, seed=3):
        arch = NetworkArchitecture.default_for(n)
        w, b = init_parameters(arch, np.random.default_rng(seed))
        return TrainedModel(arch, tuple(w), tuple(b), provenance={"kind": "test"})

    def test_exact_round_trip(self, tmp_path):
        model = self._model()
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.architecture == model.architecture
        assert all(x.tobytes() == y.tobytes() for x, y in zip(loaded.weights, model.weights))
        assert all(x.tobytes() == y.tobytes() for x, y in zip(loaded.biases, model.biases))
        assert loaded.provenance == model.provenance

    def test_missing_provenance_rejected_on_save(self, tmp_path):
        model = self._model()
        stripped = TrainedModel(model.architecture, model.weights, model.biases, {})
        with pytest.raises(ModelFormatError):
            save_model(stripped, tmp_path / "model.json")

    def test_missing_provenance_rejected_on_load(self, tmp_path):
        import json

        model = self._model()
        path = tmp_path / "model.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        del doc["provenance"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_shape_mismatch_rejected(self, tmp_path):
        import json

        model = self._model()
        path = tmp_path / "model.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["weights"][0][0].append(0.0)
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_wrong_format_string_rejected(self, tmp_path):
        import json

        path = tmp_path / "model.json"
        path.write_text(json.dumps({"format": "something-else/9"}))
        with pytest.raises(ModelFormatError):
            load_model(path)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_round_trip_any_seed(self, tmp_path_factory, seed):
        model = self._model(seed=seed)
        path = tmp_path_factory.getbasetemp() / f"model-{seed}.json"
        save_model(model, path)
        loaded = load_model(path)
        assert all(x.tobytes() == y.tobytes() for x, y in zip(loaded.weights, model.weights))
