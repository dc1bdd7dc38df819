"""Assessment orchestration: the question/answer loop and its transcript.

``AssessmentRun`` is a resumable step machine (ask one question, accept one
answer) so the same logic drives in-process runs, the CLI's interactive mode
and the web service.  ``run_full_assessment`` / ``run_session_assessment``
drive it to completion against a respondent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from skillassess.metrics import ksue, rkse
from skillassess.network import TrainedModel
from skillassess.ontology import (
    ASSESSED_MASTERED,
    ASSESSED_UNMASTERED,
    MASTERED,
    UNASSESSED,
    UNKNOWN,
    SkillOntology,
    threshold,
    unassessed_indices,
)
from skillassess.seeding import rng_for
from skillassess.simulate import LearnerRecord
from skillassess.strategies import (
    PickInfo,
    SessionConfig,
    StopRule,
    Strategy,
    clamped_probabilities,
    pick_session,
    predicted_next_learnable,
    should_stop,
)

TRANSCRIPT_SCHEMA = "assessment-transcript/1"


class RespondentError(RuntimeError):
    pass


class CorrectionRejectedError(ValueError):
    pass


@dataclass(frozen=True)
class RecordedOracle:
    """Answers from a recorded learner's true knowledge state."""

    knowledge: np.ndarray

    def answer(self, skill_index: int) -> bool:
        value = self.knowledge[skill_index]
        if value == UNKNOWN:
            raise RespondentError(
                f"recorded learner has no truth for skill index {skill_index}"
            )
        return bool(value == MASTERED)


@dataclass
class ScriptedRespondent:
    """Answers a fixed list of booleans in ask order."""

    answers: Sequence[bool]
    _cursor: int = 0

    def answer(self, skill_index: int) -> bool:
        if self._cursor >= len(self.answers):
            raise RespondentError("scripted respondent ran out of answers")
        value = bool(self.answers[self._cursor])
        self._cursor += 1
        return value


Respondent = RecordedOracle | ScriptedRespondent | Callable[[int], bool]


@dataclass(frozen=True)
class TranscriptStep:
    iteration: int
    skill_index: int
    skill_id: str
    answer: bool
    probabilities: tuple[float, ...]  # post-answer, clamped
    uncertain_count: int  # over still-unassessed skills
    error_on_unassessed: Optional[float]  # vs truth, when truth known
    explored: Optional[bool]
    candidates: tuple[int, ...]


@dataclass(frozen=True)
class Transcript:
    steps: tuple[TranscriptStep, ...]
    stop_reason: str
    predicted: tuple[int, ...]
    assessment: tuple[int, ...]
    question_count: int
    tau: float
    epsilon: float
    strategy_kind: str
    restrict_flag: bool
    session_plan: Optional[tuple[int, ...]] = None

    def assessed_indices(self) -> list[int]:
        return [s.skill_index for s in self.steps]


@dataclass(frozen=True)
class Correction:
    skill_id: str
    mastered: bool


@dataclass(frozen=True)
class RetrainingRecord:
    learner_id: str
    knowledge: np.ndarray
    user_verified: bool = True

    def as_learner(self) -> LearnerRecord:
        return LearnerRecord(learner_id=self.learner_id, knowledge=self.knowledge)


class AssessmentRun:
    """One assessment of one learner; strictly sequential."""

    def __init__(
        self,
        model: TrainedModel,
        ontology: SkillOntology,
        strategy: Strategy,
        *,
        stop_rule: StopRule | None = None,
        session: SessionConfig | None = None,
        tau: float = 0.5,
        rng_seed: int = 0,
        initial_assessment: np.ndarray | None = None,
        truth: np.ndarray | None = None,
    ):
        if not 0.0 < tau < 1.0:
            raise ValueError("tau must lie strictly in (0, 1)")
        self.model = model
        self.ontology = ontology
        self.strategy = strategy
        self.session = session
        if session is not None:
            self.stop_rule = StopRule(
                epsilon=session.epsilon,
                scope="next_session",
                session_length=session.session_length,
            )
        elif stop_rule is not None:
            self.stop_rule = stop_rule
        else:
            self.stop_rule = StopRule()
        self.tau = tau
        self.truth = truth
        n = len(ontology)
        if initial_assessment is not None:
            if len(initial_assessment) != n:
                raise ValueError("initial assessment length does not match ontology")
            self.assessment = np.asarray(initial_assessment, dtype=np.int8).copy()
        else:
            self.assessment = np.zeros(n, dtype=np.int8)
        # seeded prior answers are facts, never asked again
        self.seeded = frozenset(np.flatnonzero(self.assessment != UNASSESSED).tolist())
        self.rng = rng_for(rng_seed, "assessment")
        self.steps: list[TranscriptStep] = []
        self.stop_reason: str | None = None
        self._pending: tuple[int, PickInfo] | None = None

    @property
    def finished(self) -> bool:
        return self.stop_reason is not None

    def probabilities(self) -> np.ndarray:
        return clamped_probabilities(self.model, self.assessment)

    def next_question(self) -> Optional[int]:
        """The next skill to ask about, or None once the run has stopped."""
        if self.finished:
            return None
        if self._pending is not None:
            return self._pending[0]
        probs = self.probabilities()
        stop, reason = should_stop(probs, self.assessment, self.stop_rule)
        if stop:
            self.stop_reason = reason
            return None
        if self.session is not None:
            picked, info = pick_session(
                self.model, self.assessment, self.session, self.strategy, self.rng
            )
        else:
            picked = self.strategy.pick(
                self.model, self.assessment, self.stop_rule.epsilon, self.rng
            )
            info = PickInfo(explored=None, candidates=())
        self._pending = (picked, info)
        return picked

    def submit_answer(self, skill_index: int, mastered: bool) -> None:
        if self.finished:
            raise RuntimeError("assessment has already stopped")
        if self._pending is None or self._pending[0] != skill_index:
            expected = None if self._pending is None else self._pending[0]
            raise ValueError(
                f"answer for skill index {skill_index} but question is {expected}"
            )
        _, info = self._pending
        self._pending = None
        self.assessment[skill_index] = (
            ASSESSED_MASTERED if mastered else ASSESSED_UNMASTERED
        )
        probs = self.probabilities()
        pool = unassessed_indices(self.assessment)
        error = None
        if self.truth is not None and pool.size > 0:
            known = pool[self.truth[pool] != UNKNOWN]
            if known.size > 0:
                error = rkse(probs, self.truth, self.tau, known)
        self.steps.append(
            TranscriptStep(
                iteration=len(self.steps) + 1,
                skill_index=int(skill_index),
                skill_id=self.ontology.skills[skill_index].id,
                answer=bool(mastered),
                probabilities=tuple(float(p) for p in probs),
                uncertain_count=ksue(probs, self.stop_rule.epsilon, pool),
                error_on_unassessed=error,
                explored=info.explored,
                candidates=info.candidates,
            )
        )

    def abort(self, reason: str) -> None:
        self._pending = None
        self.stop_reason = reason

    def predicted_state(self) -> np.ndarray:
        return threshold(self.probabilities(), self.tau)

    def session_plan(self) -> list[int]:
        plan = predicted_next_learnable(self.probabilities(), self.stop_rule.epsilon)
        length = self.session.session_length if self.session else self.stop_rule.session_length
        return plan[:length]

    def transcript(self) -> Transcript:
        if not self.finished:
            raise RuntimeError("assessment has not stopped yet")
        plan = tuple(self.session_plan()) if self.session is not None else None
        restrict = bool(getattr(self.strategy, "restrict_to_unassessed", False))
        return Transcript(
            steps=tuple(self.steps),
            stop_reason=self.stop_reason,
            predicted=tuple(int(v) for v in self.predicted_state()),
            assessment=tuple(int(v) for v in self.assessment),
            question_count=len(self.steps),
            tau=self.tau,
            epsilon=self.stop_rule.epsilon,
            strategy_kind=self.strategy.kind,
            restrict_flag=restrict,
            session_plan=plan,
        )


def _drive(run: AssessmentRun, respondent: Respondent) -> None:
    answer_fn = respondent.answer if hasattr(respondent, "answer") else respondent
    while True:
        question = run.next_question()
        if question is None:
            return
        try:
            answer = answer_fn(question)
        except Exception as exc:  # truncated transcript, error stop reason
            run.abort(f"respondent error: {exc}")
            return
        run.submit_answer(question, answer)


def run_full_assessment(
    model: TrainedModel,
    ontology: SkillOntology,
    respondent: Respondent,
    strategy: Strategy,
    stop_rule: StopRule | None = None,
    tau: float = 0.5,
    rng_seed: int = 0,
    initial_assessment: np.ndarray | None = None,
    truth: np.ndarray | None = None,
) -> Transcript:
    if stop_rule is not None and stop_rule.scope != "all":
        raise ValueError("full assessment needs an all-skills stop rule")
    if truth is None and isinstance(respondent, RecordedOracle):
        truth = respondent.knowledge
    run = AssessmentRun(
        model,
        ontology,
        strategy,
        stop_rule=stop_rule or StopRule(),
        tau=tau,
        rng_seed=rng_seed,
        initial_assessment=initial_assessment,
        truth=truth,
    )
    _drive(run, respondent)
    return run.transcript()


def run_session_assessment(
    model: TrainedModel,
    ontology: SkillOntology,
    respondent: Respondent,
    session: SessionConfig,
    strategy: Strategy,
    tau: float = 0.5,
    initial_assessment: np.ndarray | None = None,
    truth: np.ndarray | None = None,
) -> tuple[list[int], Transcript]:
    """Assess until the next learning session is identified; returns the plan."""
    if truth is None and isinstance(respondent, RecordedOracle):
        truth = respondent.knowledge
    run = AssessmentRun(
        model,
        ontology,
        strategy,
        session=session,
        tau=tau,
        rng_seed=session.rng_seed,
        initial_assessment=initial_assessment,
        truth=truth,
    )
    _drive(run, respondent)
    transcript = run.transcript()
    return list(transcript.session_plan or ()), transcript


def apply_correction(
    transcript: Transcript,
    corrections: Sequence[Correction],
    ontology: SkillOntology,
    learner_id: str = "corrected",
) -> tuple[np.ndarray, RetrainingRecord]:
    """Apply learner corrections to the predicted state.

    Directly assessed skills are answers, not predictions, and cannot be
    overridden.  The returned record carries the full corrected state for the
    training pool, flagged as user-verified.
    """
    state = np.asarray(transcript.predicted, dtype=np.int8).copy()
    assessed = set(transcript.assessed_indices())
    assessed.update(
        i for i, v in enumerate(transcript.assessment) if v != UNASSESSED
    )
    for correction in corrections:
        idx = ontology.index_of(correction.skill_id)
        if idx in assessed:
            raise CorrectionRejectedError(
                f"skill {correction.skill_id!r} was directly assessed; "
                "its answer cannot be corrected"
            )
        state[idx] = MASTERED if correction.mastered else 0
    record = RetrainingRecord(learner_id=learner_id, knowledge=state, user_verified=True)
    return state, record


# ---------------------------------------------------------------------------
# Transcript file format (JSON lines, versioned)


def save_transcript(transcript: Transcript, path) -> None:
    with open(path, "w") as fh:
        header = {
            "schema": TRANSCRIPT_SCHEMA,
            "tau": transcript.tau,
            "epsilon": transcript.epsilon,
            "strategy_kind": transcript.strategy_kind,
            "restrict_flag": transcript.restrict_flag,
        }
        fh.write(json.dumps(header) + "\n")
        for step in transcript.steps:
            fh.write(
                json.dumps(
                    {
                        "kind": "step",
                        "iteration": step.iteration,
                        "skill_index": step.skill_index,
                        "skill_id": step.skill_id,
                        "answer": step.answer,
                        "probabilities": list(step.probabilities),
                        "uncertain_count": step.uncertain_count,
                        "error_on_unassessed": step.error_on_unassessed,
                        "explored": step.explored,
                        "candidates": list(step.candidates),
                    }
                )
                + "\n"
            )
        summary = {
            "kind": "summary",
            "stop_reason": transcript.stop_reason,
            "predicted": list(transcript.predicted),
            "assessment": list(transcript.assessment),
            "question_count": transcript.question_count,
            "session_plan": list(transcript.session_plan)
            if transcript.session_plan is not None
            else None,
        }
        fh.write(json.dumps(summary) + "\n")


def load_transcript(path) -> Transcript:
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("schema") != TRANSCRIPT_SCHEMA:
        raise ValueError("not a recognized transcript file")
    header = lines[0]
    steps = []
    summary = None
    for doc in lines[1:]:
        if doc.get("kind") == "step":
            steps.append(
                TranscriptStep(
                    iteration=doc["iteration"],
                    skill_index=doc["skill_index"],
                    skill_id=doc["skill_id"],
                    answer=doc["answer"],
                    probabilities=tuple(doc["probabilities"]),
                    uncertain_count=doc["uncertain_count"],
                    error_on_unassessed=doc["error_on_unassessed"],
                    explored=doc["explored"],
                    candidates=tuple(doc["candidates"]),
                )
            )
        elif doc.get("kind") == "summary":
            summary = doc
    if summary is None:
        raise ValueError("transcript file has no summary record")
    return Transcript(
        steps=tuple(steps),
        stop_reason=summary["stop_reason"],
        predicted=tuple(summary["predicted"]),
        assessment=tuple(summary["assessment"]),
        question_count=summary["question_count"],
        tau=header["tau"],
        epsilon=header["epsilon"],
        strategy_kind=header["strategy_kind"],
        restrict_flag=header["restrict_flag"],
        session_plan=tuple(summary["session_plan"])
        if summary.get("session_plan") is not None
        else None,
    )
