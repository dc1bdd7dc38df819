"""Training-data generation: sampled partial assessments, personas, closure.

Each recorded learner contributes ``samples_per_learner`` simulated partial
assessment states.  A sample reveals a uniformly drawn subset of skills and
copies the learner's true answers for the revealed ones, so a sample can
never contradict the learner it was drawn from.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from skillassess.ontology import (
    ASSESSED_MASTERED,
    ASSESSED_UNMASTERED,
    MASTERED,
    UNKNOWN,
    UNMASTERED,
    OntologyError,
    SkillOntology,
    knowledge_state,
)
from skillassess.seeding import rng_for

COHORT_COLUMNS = ("learner_id", "skill_id", "mastered")

# m drawn uniformly over {0, ..., n}: the unbiased default for "a random
# number m <= n"; alternative laws can be plugged in by name or callable.
SubsetSizeLaw = Callable[[np.random.Generator, int, int], np.ndarray]


def uniform_subset_sizes(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    return rng.integers(0, n + 1, size=k)


_SUBSET_LAWS: dict[str, SubsetSizeLaw] = {"uniform": uniform_subset_sizes}


class NoTrainableLearnersError(ValueError):
    """Every learner fell below the completeness floor."""


class ClosureContradictionError(ValueError):
    def __init__(self, skill_id: str):
        self.skill_id = skill_id
        super().__init__(
            f"skill {skill_id!r} is required to be both mastered and unmastered"
        )


@dataclass(frozen=True)
class SimulationConfig:
    samples_per_learner: int = 100
    subset_size_law: str | SubsetSizeLaw = "uniform"
    rng_seed: int = 0

    def __post_init__(self):
        if self.samples_per_learner < 1:
            raise ValueError("samples_per_learner must be >= 1")

    def law(self) -> SubsetSizeLaw:
        if callable(self.subset_size_law):
            return self.subset_size_law
        return _SUBSET_LAWS[self.subset_size_law]


@dataclass(frozen=True)
class TrainingExample:
    input: np.ndarray  # assessment state, int8
    target: np.ndarray  # float64 entries in {0.0, 0.5, 1.0}


@dataclass(frozen=True)
class LearnerRecord:
    learner_id: str
    knowledge: np.ndarray

    def known_fraction(self) -> float:
        return float(np.mean(self.knowledge != UNKNOWN))


@dataclass(frozen=True)
class Cohort:
    records: tuple[LearnerRecord, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def ids(self) -> list[str]:
        return [r.learner_id for r in self.records]

    def get(self, learner_id: str) -> LearnerRecord:
        for r in self.records:
            if r.learner_id == learner_id:
                return r
        raise KeyError(learner_id)

    def without(self, learner_id: str) -> "Cohort":
        return Cohort(tuple(r for r in self.records if r.learner_id != learner_id))

    def subset(self, learner_ids: Sequence[str]) -> "Cohort":
        wanted = set(learner_ids)
        return Cohort(tuple(r for r in self.records if r.learner_id in wanted))


def simulate_states(
    knowledge: np.ndarray,
    config: SimulationConfig,
    rng: np.random.Generator | None = None,
) -> list[np.ndarray]:
    """Sample ``samples_per_learner`` partial assessment states of one learner.

    Revealed skills copy the true answer; revealed skills with unknown truth
    stay unassessed, so every sample is consistent with its source state.
    """
    knowledge = knowledge_state(knowledge)
    n = len(knowledge)
    k = config.samples_per_learner
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    sizes = np.asarray(config.law()(rng, n, k), dtype=np.int64)
    # ranks[i, s] = position of skill s in the i-th random permutation;
    # the revealed subset is the m smallest ranks.
    noise = rng.random((k, n))
    ranks = np.argsort(np.argsort(noise, axis=1, kind="stable"), axis=1, kind="stable")
    revealed = ranks < sizes[:, None]
    answers = np.zeros(n, dtype=np.int8)
    answers[knowledge == MASTERED] = ASSESSED_MASTERED
    answers[knowledge == UNMASTERED] = ASSESSED_UNMASTERED
    states = np.where(revealed, answers[None, :], np.int8(0)).astype(np.int8)
    return list(states)


def encode_target(knowledge: np.ndarray) -> np.ndarray:
    """Training target: 1.0 mastered, 0.0 unmastered, 0.5 unknown truth."""
    target = np.full(len(knowledge), 0.5, dtype=np.float64)
    target[knowledge == MASTERED] = 1.0
    target[knowledge == UNMASTERED] = 0.0
    return target


def build_dataset(
    cohort: Cohort,
    config: SimulationConfig,
    completeness_floor: float = 0.8,
) -> list[TrainingExample]:
    """Simulate examples for every learner above the completeness floor."""
    if not 0.0 < completeness_floor <= 1.0:
        raise ValueError("completeness_floor must lie in (0, 1]")
    retained = [r for r in cohort if r.known_fraction() >= completeness_floor]
    if not retained:
        raise NoTrainableLearnersError(
            f"no learner reaches the completeness floor {completeness_floor}"
        )
    examples: list[TrainingExample] = []
    for record in retained:
        rng = rng_for(config.rng_seed, "simulate", record.learner_id)
        target = encode_target(record.knowledge)
        for state in simulate_states(record.knowledge, config, rng=rng):
            examples.append(TrainingExample(input=state, target=target))
    return examples


# ---------------------------------------------------------------------------
# Prerequisite closure


def _adjacency(ontology: SkillOntology) -> tuple[dict[int, list[int]], dict[int, list[int]]]:
    prereqs_of: dict[int, list[int]] = {i: [] for i in range(len(ontology))}
    dependents_of: dict[int, list[int]] = {i: [] for i in range(len(ontology))}
    for frm, to in sorted(ontology.prerequisites):
        f, t = ontology.index_of(frm), ontology.index_of(to)
        prereqs_of[t].append(f)
        dependents_of[f].append(t)
    return prereqs_of, dependents_of


def _reach(seeds: Sequence[int], edges: dict[int, list[int]]) -> set[int]:
    seen: set[int] = set()
    stack = list(seeds)
    while stack:
        node = stack.pop()
        for nxt in edges[node]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def prerequisite_closure(ontology: SkillOntology, assessment: np.ndarray) -> np.ndarray:
    """Propagate answers along prerequisite edges.

    A mastered answer implies all transitive prerequisites mastered; an
    unmastered answer implies all transitive dependents unmastered.  Existing
    answers are never flipped; a skill pushed both ways is a contradiction.
    """
    if len(assessment) != len(ontology):
        raise OntologyError("assessment length does not match ontology")
    prereqs_of, dependents_of = _adjacency(ontology)
    pos_seeds = np.flatnonzero(assessment == ASSESSED_MASTERED)
    neg_seeds = np.flatnonzero(assessment == ASSESSED_UNMASTERED)
    required_pos = _reach(pos_seeds.tolist(), prereqs_of)
    required_neg = _reach(neg_seeds.tolist(), dependents_of)
    for idx in sorted(required_pos & required_neg):
        raise ClosureContradictionError(ontology.skills[idx].id)
    out = assessment.copy()
    for idx in required_pos:
        if out[idx] == ASSESSED_UNMASTERED:
            raise ClosureContradictionError(ontology.skills[idx].id)
        out[idx] = ASSESSED_MASTERED
    for idx in required_neg:
        if out[idx] == ASSESSED_MASTERED:
            raise ClosureContradictionError(ontology.skills[idx].id)
        out[idx] = ASSESSED_UNMASTERED
    return out


def close_knowledge(ontology: SkillOntology, knowledge: np.ndarray) -> np.ndarray:
    """Make a full binary knowledge state prerequisite-consistent.

    Mastery is closed upwards: every prerequisite of a mastered skill
    becomes mastered (the contrapositive covers the unmastered direction).
    """
    prereqs_of, _ = _adjacency(ontology)
    out = knowledge.copy()
    mastered = _reach(np.flatnonzero(out == MASTERED).tolist(), prereqs_of)
    for idx in mastered:
        out[idx] = MASTERED
    return out


# ---------------------------------------------------------------------------
# Cold-start personas


@dataclass(frozen=True)
class FrontLoadedLaw:
    """Mastery concentrated at the start of the path, decaying with index.

    Each persona draws an ability level and masters the skills whose
    index-decaying mastery probability exceeds it, plus a little flip noise.
    The threshold construction keeps skills strongly correlated within a
    persona, the way real learners of one type are.
    """

    start: float = 0.8
    end: float = 0.05
    noise: float = 0.03

    def sampler(self, rng: np.random.Generator, n: int):
        probs = np.linspace(self.start, self.end, n)

        def draw(r: np.random.Generator) -> np.ndarray:
            level = r.random()
            state = probs > level
            flips = r.random(n) < self.noise
            return (state ^ flips).astype(np.int8)

        return draw


@dataclass(frozen=True)
class SpreadLaw:
    """Mastery spread over the whole path via a few latent learner types.

    A fixed set of prototype states is drawn once per cohort; each persona
    copies one prototype with a little flip noise.
    """

    mastery_rate: float = 0.5
    prototype_count: int = 6
    noise: float = 0.05

    def sampler(self, rng: np.random.Generator, n: int):
        prototypes = rng.random((self.prototype_count, n)) < self.mastery_rate

        def draw(r: np.random.Generator) -> np.ndarray:
            base = prototypes[r.integers(self.prototype_count)]
            flips = r.random(n) < self.noise
            return (base ^ flips).astype(np.int8)

        return draw


@dataclass(frozen=True)
class ThresholdLaw:
    """First ``mastered_fraction`` of the path mastered, rest unmastered."""

    mastered_fraction: float = 0.5

    def sampler(self, rng: np.random.Generator, n: int):
        cut = int(round(self.mastered_fraction * n))
        state = np.zeros(n, dtype=np.int8)
        state[:cut] = MASTERED

        def draw(r: np.random.Generator) -> np.ndarray:
            return state.copy()

        return draw


PersonaLaw = FrontLoadedLaw | SpreadLaw | ThresholdLaw

PERSONA_LAWS = {
    "front_loaded": FrontLoadedLaw,
    "spread": SpreadLaw,
    "threshold": ThresholdLaw,
}


def synth_personas(
    ontology: SkillOntology,
    count: int,
    law: PersonaLaw,
    rng_seed: int = 0,
    id_prefix: str = "persona",
) -> Cohort:
    """Generate full, prerequisite-consistent knowledge states."""
    if count < 1:
        raise ValueError("count must be >= 1")
    n = len(ontology)
    draw = law.sampler(rng_for(rng_seed, "persona-law", id_prefix), n)
    records = []
    for i in range(count):
        rng = rng_for(rng_seed, "persona", id_prefix, i)
        closed = close_knowledge(ontology, draw(rng))
        records.append(LearnerRecord(learner_id=f"{id_prefix}-{i:03d}", knowledge=closed))
    return Cohort(tuple(records))


# ---------------------------------------------------------------------------
# Cohort file format (CSV: learner_id, skill_id, mastered)


def save_cohort(cohort: Cohort, ontology: SkillOntology, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COHORT_COLUMNS)
        for record in cohort:
            for skill, value in zip(ontology.skills, record.knowledge):
                cell = "" if value == UNKNOWN else str(int(value))
                writer.writerow([record.learner_id, skill.id, cell])


class CohortFormatError(ValueError):
    pass


def load_cohort(path, ontology: SkillOntology) -> Cohort:
    n = len(ontology)
    states: dict[str, np.ndarray] = {}
    filled: set[tuple[str, str]] = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != COHORT_COLUMNS:
            raise CohortFormatError(
                f"expected header {','.join(COHORT_COLUMNS)}, got {header}"
            )
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise CohortFormatError(f"row {row_no}: expected 3 columns, got {len(row)}")
            learner_id, skill_id, cell = row[0], row[1], row[2].strip()
            if (learner_id, skill_id) in filled:
                raise CohortFormatError(
                    f"row {row_no}: duplicate entry for learner {learner_id!r}, "
                    f"skill {skill_id!r}"
                )
            filled.add((learner_id, skill_id))
            idx = ontology.index_of(skill_id)
            state = states.setdefault(learner_id, np.full(n, UNKNOWN, dtype=np.int8))
            if cell == "":
                state[idx] = UNKNOWN
            elif cell in ("0", "1"):
                state[idx] = int(cell)
            else:
                raise CohortFormatError(f"row {row_no}: mastered must be 0, 1 or empty")
    records = tuple(
        LearnerRecord(learner_id=lid, knowledge=states[lid]) for lid in states
    )
    return Cohort(records)
