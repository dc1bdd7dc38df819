"""Error and uncertainty measures over mastery probability vectors.

Every measure can be evaluated on all skills or restricted to the skills
that were not directly assessed; the restricted reading shows whether the
network's predictions improve rather than the error decaying merely because
more questions were answered.
"""

from __future__ import annotations

import numpy as np

from skillassess.ontology import UNASSESSED, threshold

ALL_SKILLS = "all"
UNASSESSED_ONLY = "unassessed"


class UndefinedMetricError(ValueError):
    """The scoped skill set is empty, so the mean is undefined."""


def scope_indices(
    n: int, scope: str = ALL_SKILLS, assessment: np.ndarray | None = None
) -> np.ndarray:
    if scope == ALL_SKILLS:
        return np.arange(n)
    if scope == UNASSESSED_ONLY:
        if assessment is None:
            raise ValueError("unassessed scope needs the assessment state")
        return np.flatnonzero(np.asarray(assessment) == UNASSESSED)
    raise ValueError(f"unknown scope {scope!r}")


def _scoped(values: np.ndarray, indices: np.ndarray | None) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return values if indices is None else values[np.asarray(indices, dtype=np.intp)]


def mspe(
    probs: np.ndarray, knowledge: np.ndarray, indices: np.ndarray | None = None
) -> float:
    """Mean squared distance between probabilities and binary truth."""
    p = _scoped(probs, indices)
    k = _scoped(knowledge, indices)
    if p.size == 0:
        raise UndefinedMetricError("mean squared probability error over no skills")
    diff = p - k
    return float(np.mean(diff * diff))


def rkse(
    probs: np.ndarray,
    knowledge: np.ndarray,
    tau: float = 0.5,
    indices: np.ndarray | None = None,
) -> float:
    """Mean absolute error of the thresholded prediction against truth."""
    p = _scoped(probs, indices)
    k = _scoped(knowledge, indices)
    if p.size == 0:
        raise UndefinedMetricError("binary state error over no skills")
    return float(np.mean(np.abs(threshold(p, tau) - k)))


def ksue(
    probs: np.ndarray, epsilon: float, indices: np.ndarray | None = None
) -> int:
    """Number of scoped skills whose probability is still uncertain.

    Bounds are inclusive: a probability of exactly epsilon counts as
    uncertain.  Zero means the model is certain everywhere in scope.
    """
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 0.5)")
    p = _scoped(probs, indices)
    return int(np.count_nonzero((p >= epsilon) & (p <= 1.0 - epsilon)))


def residual_uncertainty(probs: np.ndarray, indices: np.ndarray | None = None) -> float:
    """Mean of min(p, 1-p): the continuous analogue of the uncertain count."""
    p = _scoped(probs, indices)
    if p.size == 0:
        raise UndefinedMetricError("residual uncertainty over no skills")
    return float(np.mean(np.minimum(p, 1.0 - p)))


def precision_recall(predicted: np.ndarray, truth: np.ndarray) -> dict[str, float | None]:
    """Confusion ratios for both classes; undefined ratios are None.

    ``precision``/``recall`` treat mastered as the positive class;
    ``negative_precision``/``negative_recall`` do the same for unmastered.
    """
    predicted = np.asarray(predicted).astype(np.int8)
    truth = np.asarray(truth).astype(np.int8)
    if predicted.shape != truth.shape:
        raise ValueError("predicted and truth lengths differ")
    tp = int(np.count_nonzero((predicted == 1) & (truth == 1)))
    fp = int(np.count_nonzero((predicted == 1) & (truth == 0)))
    fn = int(np.count_nonzero((predicted == 0) & (truth == 1)))
    tn = int(np.count_nonzero((predicted == 0) & (truth == 0)))

    def ratio(num: int, den: int) -> float | None:
        return num / den if den else None

    return {
        "precision": ratio(tp, tp + fp),
        "recall": ratio(tp, tp + fn),
        "negative_precision": ratio(tn, tn + fn),
        "negative_recall": ratio(tn, tn + fp),
    }
