import numpy as np
import pytest

from skillassess.ontology import SkillOntology
from skillassess.simulate import (
    Cohort,
    FrontLoadedLaw,
    SpreadLaw,
    synth_personas,
)


@pytest.fixture
def ontology6():
    return SkillOntology.from_lists([f"s{i}" for i in range(1, 7)])


@pytest.fixture
def figure_ontology():
    """Seven skills with the prerequisite chain used in the closure examples:
    s1 -> s2 -> s5 -> s6, s1 -> s3, s3 -> s4, s4 -> s7."""
    return SkillOntology.from_lists(
        [f"s{i}" for i in range(1, 8)],
        [("s1", "s2"), ("s2", "s5"), ("s5", "s6"), ("s1", "s3"), ("s3", "s4"), ("s4", "s7")],
    )


@pytest.fixture(scope="session")
def small_cohort():
    onto = SkillOntology.from_lists([f"s{i}" for i in range(12)])
    front = synth_personas(onto, 8, FrontLoadedLaw(0.9, 0.05), rng_seed=1, id_prefix="front")
    spread = synth_personas(onto, 8, SpreadLaw(0.5), rng_seed=2, id_prefix="spread")
    return onto, Cohort(front.records + spread.records)


def states(*rows):
    return [np.asarray(r, dtype=np.int8) for r in rows]
