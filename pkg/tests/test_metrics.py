import numpy as np
import pytest
from hypothesis import given, strategies as st

from skillassess.metrics import (
    ALL_SKILLS,
    UNASSESSED_ONLY,
    UndefinedMetricError,
    ksue,
    mspe,
    precision_recall,
    residual_uncertainty,
    rkse,
    scope_indices,
)
from skillassess.ontology import assessment_state, knowledge_state


# Per-element arithmetic is re-derived in plain Python; only the final mean
# reduction is shared with the library (so float summation order matches and
# equality can be exact, as the reference is meant to differ in logic, not in
# rounding).


def _mean(values):
    return float(np.mean(np.array(values, dtype=np.float64)))


def oracle_mspe(probs, truth):
    # explicit multiply, not **2: libm pow can be one ulp off the exactly
    # rounded product, which would break bit-for-bit equality
    return _mean([(p - t) * (p - t) for p, t in zip(probs, truth)])


def oracle_rkse(probs, truth, tau):
    bits = [0.0 if p <= tau else 1.0 for p in probs]
    return _mean([abs(b - t) for b, t in zip(bits, truth)])


def oracle_ksue(probs, eps):
    return sum(1 for p in probs if eps <= p <= 1 - eps)


def oracle_residual(probs):
    return _mean([p if p <= 1 - p else 1 - p for p in probs])


class TestHandValues:
    def test_mspe(self):
        assert mspe(np.array([0.8, 0.3]), knowledge_state([1, 0])) == pytest.approx(
            (0.04 + 0.09) / 2
        )

    def test_rkse_boundary_counts_as_zero(self):
        # 0.5 thresholds to 0 at tau = 0.5, so a mastered truth is an error.
        assert rkse(np.array([0.5]), knowledge_state([1]), tau=0.5) == 1.0
        assert rkse(np.array([0.5]), knowledge_state([0]), tau=0.5) == 0.0

    def test_ksue_inclusive_bounds(self):
        probs = np.array([0.1, 0.9, 0.0999, 0.9001, 0.5])
        assert ksue(probs, 0.1) == 3

    def test_residual(self):
        assert residual_uncertainty(np.array([0.2, 0.9])) == pytest.approx(0.15)

    def test_ksue_epsilon_range(self):
        for eps in (0.0, 0.5, -0.1, 0.7):
            with pytest.raises(ValueError):
                ksue(np.array([0.5]), eps)


class TestScopes:
    def test_all_scope(self):
        assert scope_indices(4, ALL_SKILLS).tolist() == [0, 1, 2, 3]

    def test_unassessed_scope(self):
        alpha = assessment_state([1, 0, -1, 0])
        assert scope_indices(4, UNASSESSED_ONLY, alpha).tolist() == [1, 3]

    def test_unassessed_needs_assessment(self):
        with pytest.raises(ValueError):
            scope_indices(3, UNASSESSED_ONLY)

    def test_empty_scope_undefined(self):
        alpha = assessment_state([1, -1])
        idx = scope_indices(2, UNASSESSED_ONLY, alpha)
        with pytest.raises(UndefinedMetricError):
            rkse(np.array([0.9, 0.1]), knowledge_state([1, 0]), indices=idx)
        with pytest.raises(UndefinedMetricError):
            residual_uncertainty(np.array([0.9, 0.1]), indices=idx)
        assert ksue(np.array([0.9, 0.1]), 0.1, indices=idx) == 0

    def test_scoped_rkse(self):
        probs = np.array([0.9, 0.2, 0.6])
        truth = knowledge_state([0, 0, 1])
        assert rkse(probs, truth, indices=np.array([1, 2])) == 0.0
        assert rkse(probs, truth) == pytest.approx(1 / 3)


class TestPrecisionRecall:
    def test_hand_confusion(self):
        predicted = knowledge_state([1, 1, 0, 0, 1])
        truth = knowledge_state([1, 0, 0, 1, 1])
        out = precision_recall(predicted, truth)
        assert out["precision"] == pytest.approx(2 / 3)
        assert out["recall"] == pytest.approx(2 / 3)
        assert out["negative_precision"] == pytest.approx(1 / 2)
        assert out["negative_recall"] == pytest.approx(1 / 2)

    def test_none_on_zero_denominator(self):
        out = precision_recall(knowledge_state([0, 0]), knowledge_state([0, 0]))
        assert out["precision"] is None
        assert out["recall"] is None
        assert out["negative_precision"] == 1.0
        assert out["negative_recall"] == 1.0

    def test_perfect(self):
        bits = knowledge_state([1, 0, 1])
        out = precision_recall(bits, bits)
        assert out == {
            "precision": 1.0,
            "recall": 1.0,
            "negative_precision": 1.0,
            "negative_recall": 1.0,
        }


@given(
    st.lists(st.floats(0, 1), min_size=1, max_size=50),
    st.data(),
)
def test_metrics_match_pure_python_oracles(probs, data):
    truth = data.draw(
        st.lists(st.integers(0, 1), min_size=len(probs), max_size=len(probs))
    )
    tau = data.draw(st.floats(0.01, 0.99))
    eps = data.draw(st.floats(0.01, 0.49))
    p = np.array(probs)
    t = knowledge_state(truth)
    assert mspe(p, t) == oracle_mspe(probs, truth)
    assert rkse(p, t, tau) == oracle_rkse(probs, truth, tau)
    assert ksue(p, eps) == oracle_ksue(probs, eps)
    assert residual_uncertainty(p) == oracle_residual(probs)
