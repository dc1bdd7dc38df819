"""Adaptive skill assessment driven by a learned mastery-prediction network."""

from skillassess.ontology import (
    MASTERED,
    UNKNOWN,
    UNMASTERED,
    Skill,
    SkillOntology,
    clamp_assessed,
    encode_input,
    is_consistent,
    threshold,
    validate_ontology,
)

__all__ = [
    "MASTERED",
    "UNMASTERED",
    "UNKNOWN",
    "Skill",
    "SkillOntology",
    "threshold",
    "is_consistent",
    "clamp_assessed",
    "encode_input",
    "validate_ontology",
]
