"""Skills, learner states and the elementary transformations between them.

A skill list in learn order plus optional prerequisite edges form the
ontology.  A learner has a ground-truth mastery state (per skill: mastered,
unmastered or unknown) and, during an assessment, an assessment state
(per skill: +1 answered mastered, -1 answered unmastered, 0 not asked yet).
The network maps assessment states to per-skill mastery probabilities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Ground-truth mastery values.  UNKNOWN marks a skill whose true state was
# never recorded; it becomes the 0.5 training target, never an oracle answer.
MASTERED = 1
UNMASTERED = 0
UNKNOWN = -1

# Assessment state values.
ASSESSED_MASTERED = 1
ASSESSED_UNMASTERED = -1
UNASSESSED = 0

ONTOLOGY_FORMAT = "skill-ontology/1"


class OntologyError(ValueError):
    """Raised for structurally invalid ontologies or state vectors."""


@dataclass(frozen=True)
class Skill:
    id: str
    title: str
    index: int


@dataclass(frozen=True)
class SkillOntology:
    """Ordered skill list; the list order is the learn order."""

    skills: tuple[Skill, ...]
    prerequisites: frozenset[tuple[str, str]] = field(default_factory=frozenset)

    def __post_init__(self):
        report = validate_ontology(self)
        if report:
            raise OntologyError("; ".join(report))

    def __len__(self) -> int:
        return len(self.skills)

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.skills]

    def index_of(self, skill_id: str) -> int:
        try:
            return self._index_map()[skill_id]
        except KeyError:
            raise OntologyError(f"unknown skill id {skill_id!r}") from None

    def _index_map(self) -> dict[str, int]:
        return {s.id: s.index for s in self.skills}

    @classmethod
    def from_lists(
        cls,
        skills: Sequence[tuple[str, str]] | Sequence[str],
        prerequisites: Iterable[tuple[str, str]] = (),
    ) -> "SkillOntology":
        built = []
        for i, entry in enumerate(skills):
            if isinstance(entry, str):
                built.append(Skill(id=entry, title=entry, index=i))
            else:
                built.append(Skill(id=entry[0], title=entry[1], index=i))
        return cls(skills=tuple(built), prerequisites=frozenset(prerequisites))


def validate_ontology(ontology: SkillOntology) -> list[str]:
    """Return a list of problems; empty iff the ontology invariants hold."""
    problems: list[str] = []
    seen: set[str] = set()
    for pos, skill in enumerate(ontology.skills):
        if skill.id in seen:
            problems.append(f"duplicate skill id {skill.id!r}")
        seen.add(skill.id)
        if skill.index != pos:
            problems.append(f"skill {skill.id!r} index {skill.index} != position {pos}")
    if not ontology.skills:
        problems.append("ontology has no skills")
    for frm, to in sorted(ontology.prerequisites):
        if frm not in seen:
            problems.append(f"prerequisite endpoint {frm!r} is not a skill")
        if to not in seen:
            problems.append(f"prerequisite endpoint {to!r} is not a skill")
    problems.extend(_find_cycles(ontology, seen))
    return problems


def _find_cycles(ontology: SkillOntology, valid_ids: set[str]) -> list[str]:
    adjacency: dict[str, list[str]] = {i: [] for i in valid_ids}
    for frm, to in sorted(ontology.prerequisites):
        if frm in adjacency and to in valid_ids:
            adjacency[frm].append(to)
    state: dict[str, int] = {}  # 0 visiting, 1 done
    problems: list[str] = []

    def visit(node: str, stack: list[str]) -> None:
        state[node] = 0
        stack.append(node)
        for nxt in adjacency[node]:
            if state.get(nxt) == 0:
                cycle = stack[stack.index(nxt):] + [nxt]
                problems.append("prerequisite cycle: " + " -> ".join(cycle))
            elif nxt not in state:
                visit(nxt, stack)
        stack.pop()
        state[node] = 1

    for node in sorted(adjacency):
        if node not in state:
            visit(node, [])
    return problems


# ---------------------------------------------------------------------------
# State vectors


def knowledge_state(values: Sequence[int]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int8)
    if arr.ndim != 1:
        raise OntologyError("knowledge state must be one-dimensional")
    bad = ~np.isin(arr, (MASTERED, UNMASTERED, UNKNOWN))
    if bad.any():
        raise OntologyError(f"invalid knowledge values {arr[bad].tolist()}")
    return arr


def assessment_state(values: Sequence[int]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int8)
    if arr.ndim != 1:
        raise OntologyError("assessment state must be one-dimensional")
    bad = ~np.isin(arr, (ASSESSED_MASTERED, ASSESSED_UNMASTERED, UNASSESSED))
    if bad.any():
        raise OntologyError(f"invalid assessment values {arr[bad].tolist()}")
    return arr


def empty_assessment(n: int) -> np.ndarray:
    return np.zeros(n, dtype=np.int8)


def unassessed_indices(assessment: np.ndarray) -> np.ndarray:
    return np.flatnonzero(assessment == UNASSESSED)


def _check_lengths(a: np.ndarray, b: np.ndarray) -> None:
    if len(a) != len(b):
        raise OntologyError(f"length mismatch: {len(a)} vs {len(b)}")


def threshold(probs: np.ndarray, tau: float) -> np.ndarray:
    """Binarize probabilities: 0 where p <= tau, 1 where p > tau."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"threshold must lie strictly in (0, 1), got {tau}")
    probs = np.asarray(probs, dtype=np.float64)
    return (probs > tau).astype(np.int8)


def is_consistent(assessment: np.ndarray, knowledge: np.ndarray) -> bool:
    """True iff every answer in the assessment matches the true state."""
    _check_lengths(assessment, knowledge)
    if np.any(knowledge == UNKNOWN):
        raise OntologyError("consistency is undefined against unknown truth")
    pos_ok = np.all(knowledge[assessment == ASSESSED_MASTERED] == MASTERED)
    neg_ok = np.all(knowledge[assessment == ASSESSED_UNMASTERED] == UNMASTERED)
    return bool(pos_ok and neg_ok)


def clamp_assessed(probs: np.ndarray, assessment: np.ndarray) -> np.ndarray:
    """Overwrite probabilities with the certain values of answered skills."""
    probs = np.asarray(probs, dtype=np.float64)
    _check_lengths(probs, assessment)
    out = probs.copy()
    out[assessment == ASSESSED_MASTERED] = 1.0
    out[assessment == ASSESSED_UNMASTERED] = 0.0
    return out


def encode_input(assessment: np.ndarray) -> np.ndarray:
    """Network input: the literal -1.0 / 0.0 / +1.0 values in learn order."""
    return np.asarray(assessment, dtype=np.float64)


def decode_input(encoded: np.ndarray) -> np.ndarray:
    return assessment_state(np.asarray(encoded).astype(np.int8))


# ---------------------------------------------------------------------------
# Ontology file format (JSON)


def save_ontology(ontology: SkillOntology, path) -> None:
    doc = {
        "format": ONTOLOGY_FORMAT,
        "skills": [{"id": s.id, "title": s.title} for s in ontology.skills],
        "prerequisites": [list(edge) for edge in sorted(ontology.prerequisites)],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_ontology(path) -> SkillOntology:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != ONTOLOGY_FORMAT:
        raise OntologyError(f"unsupported ontology format {doc.get('format')!r}")
    skills = [(s["id"], s.get("title", s["id"])) for s in doc["skills"]]
    edges = [tuple(e) for e in doc.get("prerequisites", [])]
    return SkillOntology.from_lists(skills, edges)
