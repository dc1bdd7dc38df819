"""Question pickers, learnable-skill computation and stopping rules.

All pickers only ever return a not-yet-assessed skill and break ties by the
lowest skill index so that runs are fully reproducible.  The expected-descent
picker weighs the two possible answers for a candidate skill by the model's
current probability and scores the residual uncertainty of each outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from skillassess.metrics import ksue, residual_uncertainty
from skillassess.network import TrainedModel, forward
from skillassess.ontology import (
    ASSESSED_MASTERED,
    ASSESSED_UNMASTERED,
    UNASSESSED,
    clamp_assessed,
    unassessed_indices,
)

MEASURE_UNCERTAIN_COUNT = "uncertain_count"
MEASURE_RESIDUAL = "residual"
MEASURES = (MEASURE_UNCERTAIN_COUNT, MEASURE_RESIDUAL)


class NoQuestionError(RuntimeError):
    """There is no unassessed skill left to ask about."""


@dataclass(frozen=True)
class StopRule:
    epsilon: float = 0.1
    scope: str = "all"  # "all" or "next_session"
    session_length: int = 1

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if self.scope not in ("all", "next_session"):
            raise ValueError("scope must be 'all' or 'next_session'")
        if self.session_length < 1:
            raise ValueError("session_length must be >= 1")


@dataclass(frozen=True)
class SessionConfig:
    session_length: int = 3
    exploration_probability: float = 0.3
    epsilon: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.session_length < 1:
            raise ValueError("session_length must be >= 1")
        if not 0.0 <= self.exploration_probability <= 1.0:
            raise ValueError("exploration_probability must lie in [0, 1]")
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")


def clamped_probabilities(model: TrainedModel, assessment: np.ndarray) -> np.ndarray:
    return clamp_assessed(forward(model, assessment), assessment)


def _candidate_pool(
    assessment: np.ndarray, candidates: Optional[np.ndarray]
) -> np.ndarray:
    pool = unassessed_indices(assessment)
    if candidates is not None:
        wanted = np.asarray(candidates, dtype=np.intp)
        pool = pool[np.isin(pool, wanted)]
    if pool.size == 0:
        raise NoQuestionError("no unassessed skill to pick from")
    return pool


def pick_random(
    assessment: np.ndarray,
    rng: np.random.Generator,
    candidates: Optional[np.ndarray] = None,
) -> int:
    pool = _candidate_pool(assessment, candidates)
    return int(pool[rng.integers(len(pool))])


def pick_max_uncertainty(
    probs: np.ndarray,
    assessment: np.ndarray,
    candidates: Optional[np.ndarray] = None,
) -> int:
    pool = _candidate_pool(assessment, candidates)
    distances = np.abs(np.asarray(probs, dtype=np.float64)[pool] - 0.5)
    return int(pool[int(np.argmin(distances))])  # argmin ties to lowest index


def _measure_value(
    probs: np.ndarray, epsilon: float, measure: str, indices: Optional[np.ndarray]
) -> float:
    if indices is not None and len(indices) == 0:
        return 0.0
    if measure == MEASURE_UNCERTAIN_COUNT:
        return float(ksue(probs, epsilon, indices))
    if measure == MEASURE_RESIDUAL:
        return residual_uncertainty(probs, indices)
    raise ValueError(f"unknown measure {measure!r}")


def expected_uncertainty(
    model: TrainedModel,
    assessment: np.ndarray,
    skill: int,
    epsilon: float,
    measure: str = MEASURE_RESIDUAL,
    restrict_to_unassessed: bool = False,
) -> float:
    """Probability-weighted uncertainty left after asking ``skill``.

    Both hypothetical answers are pushed through the network with the answer
    clamped; assessed skills contribute zero uncertainty either way, so
    ``restrict_to_unassessed`` only changes the residual measure's divisor,
    never the ranking of candidates.
    """
    if assessment[skill] != UNASSESSED:
        raise ValueError(f"skill index {skill} has already been assessed")
    probs = clamped_probabilities(model, assessment)
    p = float(probs[skill])
    total = 0.0
    for answer, weight in ((ASSESSED_MASTERED, p), (ASSESSED_UNMASTERED, 1.0 - p)):
        hypothetical = assessment.copy()
        hypothetical[skill] = answer
        after = clamped_probabilities(model, hypothetical)
        indices = unassessed_indices(hypothetical) if restrict_to_unassessed else None
        total += weight * _measure_value(after, epsilon, measure, indices)
    return total


def pick_expected_descent(
    model: TrainedModel,
    assessment: np.ndarray,
    epsilon: float,
    measure: str = MEASURE_RESIDUAL,
    candidate_cap: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    candidates: Optional[np.ndarray] = None,
    restrict_to_unassessed: bool = False,
) -> int:
    pool = _candidate_pool(assessment, candidates)
    if candidate_cap is not None and candidate_cap < len(pool):
        if rng is None:
            raise ValueError("candidate_cap sampling needs an rng")
        pool = np.sort(rng.choice(pool, size=candidate_cap, replace=False))
    best_skill, best_value = -1, np.inf
    for skill in pool:
        value = expected_uncertainty(
            model, assessment, int(skill), epsilon, measure, restrict_to_unassessed
        )
        if value < best_value:
            best_skill, best_value = int(skill), value
    return best_skill


def pick_hybrid(
    model: TrainedModel,
    assessment: np.ndarray,
    epsilon: float,
    measure: str = MEASURE_RESIDUAL,
    top_k: int = 8,
    candidates: Optional[np.ndarray] = None,
    restrict_to_unassessed: bool = False,
) -> int:
    """Expected descent restricted to the top_k most uncertain skills."""
    pool = _candidate_pool(assessment, candidates)
    probs = clamped_probabilities(model, assessment)
    distances = np.abs(probs[pool] - 0.5)
    order = np.argsort(distances, kind="stable")  # stable: ties to lowest index
    shortlist = pool[order[:top_k]]
    return pick_expected_descent(
        model,
        assessment,
        epsilon,
        measure,
        candidates=np.sort(shortlist),
        restrict_to_unassessed=restrict_to_unassessed,
    )


# ---------------------------------------------------------------------------
# Strategy configuration objects


@dataclass(frozen=True)
class RandomStrategy:
    kind: str = "random"

    def pick(self, model, assessment, epsilon, rng, candidates=None) -> int:
        return pick_random(assessment, rng, candidates)


@dataclass(frozen=True)
class MaxUncertaintyStrategy:
    kind: str = "max_uncertainty"

    def pick(self, model, assessment, epsilon, rng, candidates=None) -> int:
        probs = clamped_probabilities(model, assessment)
        return pick_max_uncertainty(probs, assessment, candidates)


@dataclass(frozen=True)
class ExpectedDescentStrategy:
    measure: str = MEASURE_RESIDUAL
    candidate_cap: Optional[int] = None
    restrict_to_unassessed: bool = False
    kind: str = "expected_descent"

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"measure must be one of {MEASURES}")
        if self.candidate_cap is not None and self.candidate_cap < 1:
            raise ValueError("candidate_cap must be >= 1")

    def pick(self, model, assessment, epsilon, rng, candidates=None) -> int:
        return pick_expected_descent(
            model,
            assessment,
            epsilon,
            self.measure,
            self.candidate_cap,
            rng,
            candidates,
            self.restrict_to_unassessed,
        )


@dataclass(frozen=True)
class HybridStrategy:
    top_k: int = 8
    measure: str = MEASURE_RESIDUAL
    restrict_to_unassessed: bool = False
    kind: str = "hybrid"

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.measure not in MEASURES:
            raise ValueError(f"measure must be one of {MEASURES}")

    def pick(self, model, assessment, epsilon, rng, candidates=None) -> int:
        return pick_hybrid(
            model,
            assessment,
            epsilon,
            self.measure,
            self.top_k,
            candidates,
            self.restrict_to_unassessed,
        )


Strategy = RandomStrategy | MaxUncertaintyStrategy | ExpectedDescentStrategy | HybridStrategy


def strategy_from_dict(doc: dict) -> Strategy:
    kind = doc.get("kind", "hybrid")
    opts = {k: v for k, v in doc.items() if k != "kind"}
    table = {
        "random": RandomStrategy,
        "max_uncertainty": MaxUncertaintyStrategy,
        "expected_descent": ExpectedDescentStrategy,
        "hybrid": HybridStrategy,
    }
    if kind not in table:
        raise ValueError(f"unknown strategy kind {kind!r}")
    return table[kind](**opts)


# ---------------------------------------------------------------------------
# Learnable-skill sets and stopping


def next_learnable(assessment: np.ndarray) -> list[int]:
    """Confirmed-unmastered skills with no unassessed skill before them."""
    result = []
    for j, value in enumerate(np.asarray(assessment)):
        if value == UNASSESSED:
            break
        if value == ASSESSED_UNMASTERED:
            result.append(j)
    return result


def predicted_next_learnable(probs_clamped: np.ndarray, epsilon: float) -> list[int]:
    """Skills predicted unmastered with every earlier skill decided.

    A skill qualifies when its probability is at most epsilon and no earlier
    skill has a probability strictly inside (epsilon, 1 - epsilon).
    """
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 0.5)")
    result = []
    for j, p in enumerate(np.asarray(probs_clamped, dtype=np.float64)):
        if epsilon < p < 1.0 - epsilon:
            break
        if p <= epsilon:
            result.append(j)
    return result


def should_stop(
    probs_clamped: np.ndarray, assessment: np.ndarray, rule: StopRule
) -> tuple[bool, str]:
    pool = unassessed_indices(assessment)
    if pool.size == 0:
        return True, "fully assessed"
    if ksue(probs_clamped, rule.epsilon, pool) == 0:
        return True, "uncertainty resolved"
    if rule.scope == "next_session":
        plan = predicted_next_learnable(probs_clamped, rule.epsilon)
        if len(plan) >= rule.session_length:
            return True, "session identified"
    return False, ""


@dataclass(frozen=True)
class PickInfo:
    explored: bool
    candidates: tuple[int, ...]


def pick_session(
    model: TrainedModel,
    assessment: np.ndarray,
    session: SessionConfig,
    strategy: Strategy,
    rng: np.random.Generator,
) -> tuple[int, PickInfo]:
    """Exploration vs confirmation: coin flip, then a confined or global pick.

    Confirmation confines candidates to the unassessed skills of the next
    session window, topped up with the earliest still-uncertain skills when
    the predicted-learnable list is shorter than the session.
    """
    pool = unassessed_indices(assessment)
    if pool.size == 0:
        raise NoQuestionError("no unassessed skill to pick from")
    explored = bool(rng.random() < session.exploration_probability)
    if explored:
        candidates = pool
    else:
        probs = clamped_probabilities(model, assessment)
        window = predicted_next_learnable(probs, session.epsilon)[: session.session_length]
        chosen = [s for s in window if assessment[s] == UNASSESSED]
        if len(chosen) < session.session_length:
            uncertain = [
                int(s)
                for s in pool
                if session.epsilon < probs[s] < 1.0 - session.epsilon and s not in chosen
            ]
            chosen.extend(uncertain[: session.session_length - len(chosen)])
        candidates = np.array(sorted(chosen), dtype=np.intp) if chosen else pool
    picked = strategy.pick(model, assessment, session.epsilon, rng, candidates)
    return picked, PickInfo(explored=explored, candidates=tuple(int(c) for c in candidates))
