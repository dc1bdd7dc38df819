"""Live assessment sessions over HTTP.

One loaded model and ontology serve many independent sessions.  Each session
is an ``AssessmentRun`` plus an append-only journal file; on restart the
journals are replayed, which reproduces the exact engine state because runs
are deterministic given their seed.
"""

from __future__ import annotations

import csv
import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from skillassess.engine import (
    AssessmentRun,
    Correction,
    CorrectionRejectedError,
    apply_correction,
)
from skillassess.metrics import ksue
from skillassess.network import TrainedModel
from skillassess.ontology import (
    ASSESSED_MASTERED,
    ASSESSED_UNMASTERED,
    UNASSESSED,
    OntologyError,
    SkillOntology,
)
from skillassess.simulate import COHORT_COLUMNS
from skillassess.strategies import SessionConfig, StopRule, strategy_from_dict

JOURNAL_SUFFIX = ".journal.jsonl"


class CreateSessionRequest(BaseModel):
    mode: str = Field(default="full", pattern="^(full|session)$")
    strategy: dict = Field(default_factory=lambda: {"kind": "hybrid"})
    epsilon: float = Field(default=0.1, gt=0.0, lt=0.5)
    tau: float = Field(default=0.5, gt=0.0, lt=1.0)
    session_length: int = Field(default=3, ge=1)
    exploration_probability: float = Field(default=0.3, ge=0.0, le=1.0)
    rng_seed: int = 0
    prior: dict[str, bool] = Field(default_factory=dict)


class AnswerRequest(BaseModel):
    skill_id: str
    mastered: bool


class CorrectionItem(BaseModel):
    skill_id: str
    mastered: bool


class CorrectionsRequest(BaseModel):
    corrections: list[CorrectionItem] = Field(default_factory=list)


@dataclass
class SessionRecord:
    session_id: str
    run: AssessmentRun
    params: dict
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_answer: Optional[tuple[str, bool]] = None
    last_response: Optional[dict] = None
    corrected: Optional[list[int]] = None


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


class SessionStore:
    def __init__(
        self,
        model: TrainedModel,
        ontology: SkillOntology,
        sessions_dir: Path,
        correction_pool: Path,
    ):
        self.model = model
        self.ontology = ontology
        self.sessions_dir = Path(sessions_dir)
        self.correction_pool = Path(correction_pool)
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, SessionRecord] = {}
        self._index_lock = threading.Lock()
        self._restore()

    # -- construction and persistence ------------------------------------

    def _build_run(self, params: dict) -> AssessmentRun:
        strategy = strategy_from_dict(params.get("strategy", {"kind": "hybrid"}))
        prior = np.zeros(len(self.ontology), dtype=np.int8)
        for skill_id, mastered in params.get("prior", {}).items():
            idx = self.ontology.index_of(skill_id)
            prior[idx] = ASSESSED_MASTERED if mastered else ASSESSED_UNMASTERED
        kwargs = dict(
            tau=params.get("tau", 0.5),
            rng_seed=params.get("rng_seed", 0),
            initial_assessment=prior,
        )
        if params.get("mode") == "session":
            session = SessionConfig(
                session_length=params.get("session_length", 3),
                exploration_probability=params.get("exploration_probability", 0.3),
                epsilon=params.get("epsilon", 0.1),
                rng_seed=params.get("rng_seed", 0),
            )
            return AssessmentRun(
                self.model, self.ontology, strategy, session=session, **kwargs
            )
        stop = StopRule(epsilon=params.get("epsilon", 0.1))
        return AssessmentRun(
            self.model, self.ontology, strategy, stop_rule=stop, **kwargs
        )

    def _journal_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}{JOURNAL_SUFFIX}"

    def _append_journal(self, session_id: str, record: dict) -> None:
        with open(self._journal_path(session_id), "a") as fh:
            fh.write(json.dumps(record) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _restore(self) -> None:
        for path in sorted(self.sessions_dir.glob(f"*{JOURNAL_SUFFIX}")):
            with open(path) as fh:
                records = [json.loads(line) for line in fh if line.strip()]
            if not records or records[0].get("kind") != "created":
                continue
            params = records[0]["params"]
            session_id = records[0]["session_id"]
            run = self._build_run(params)
            record = SessionRecord(session_id=session_id, run=run, params=params)
            for doc in records[1:]:
                if doc.get("kind") == "answer":
                    idx = self.ontology.index_of(doc["skill_id"])
                    question = run.next_question()
                    if question != idx:
                        break  # journal does not match a deterministic replay
                    run.submit_answer(idx, doc["mastered"])
                    record.last_answer = (doc["skill_id"], doc["mastered"])
                elif doc.get("kind") == "corrections":
                    record.corrected = doc["state"]
            run.next_question()  # settle stop state
            self._sessions[session_id] = record

    # -- request handling -------------------------------------------------

    def create(self, request: CreateSessionRequest) -> dict:
        try:
            strategy_from_dict(request.strategy)
        except (ValueError, TypeError) as exc:
            raise _error(422, "invalid_strategy", str(exc))
        params = request.model_dump()
        session_id = uuid.uuid4().hex
        try:
            run = self._build_run(params)
        except OntologyError as exc:
            raise _error(422, "invalid_prior", str(exc))
        record = SessionRecord(session_id=session_id, run=run, params=params)
        with self._index_lock:
            self._sessions[session_id] = record
        self._append_journal(
            session_id, {"kind": "created", "session_id": session_id, "params": params}
        )
        with record.lock:
            return self._advance_payload(record)

    def _get(self, session_id: str) -> SessionRecord:
        record = self._sessions.get(session_id)
        if record is None:
            raise _error(404, "unknown_session", f"no session {session_id!r}")
        return record

    def _question_payload(self, question: Optional[int]) -> Optional[dict]:
        if question is None:
            return None
        skill = self.ontology.skills[question]
        return {"skill_id": skill.id, "title": skill.title}

    def _completion_payload(self, record: SessionRecord) -> dict:
        run = record.run
        transcript = run.transcript()
        assessed = {
            i for i, v in enumerate(run.assessment) if v != UNASSESSED
        }
        predicted = [
            {
                "skill_id": skill.id,
                "title": skill.title,
                "mastered": bool(transcript.predicted[i]),
                "source": "assessed" if i in assessed else "predicted",
            }
            for i, skill in enumerate(self.ontology.skills)
        ]
        payload = {
            "session_id": record.session_id,
            "status": "complete",
            "stop_reason": transcript.stop_reason,
            "question_count": transcript.question_count,
            "predicted": predicted,
        }
        if transcript.session_plan is not None:
            payload["session_plan"] = [
                self.ontology.skills[i].id for i in transcript.session_plan
            ]
        return payload

    def _advance_payload(self, record: SessionRecord) -> dict:
        question = record.run.next_question()
        if question is None:
            return self._completion_payload(record)
        return {
            "session_id": record.session_id,
            "status": "awaiting-answer",
            "question": self._question_payload(question),
            "answered_count": len(record.run.steps),
            "total_skills": len(self.ontology),
        }

    def submit_answer(self, session_id: str, request: AnswerRequest) -> dict:
        record = self._get(session_id)
        with record.lock:
            run = record.run
            if record.last_answer == (request.skill_id, request.mastered) and (
                record.last_response is not None
            ):
                asked = run.next_question()
                already = self.ontology.index_of(request.skill_id)
                if asked is None or run.assessment[already] != UNASSESSED:
                    return record.last_response  # idempotent re-submit
            question = run.next_question()
            if question is None:
                raise _error(
                    409, "session_complete", "the assessment has already stopped"
                )
            try:
                idx = self.ontology.index_of(request.skill_id)
            except OntologyError as exc:
                raise _error(422, "unknown_skill", str(exc))
            if idx != question:
                raise _error(
                    409,
                    "wrong_skill",
                    f"expected an answer for {self.ontology.skills[question].id!r}, "
                    f"got {request.skill_id!r}",
                )
            run.submit_answer(idx, request.mastered)
            self._append_journal(
                session_id,
                {"kind": "answer", "skill_id": request.skill_id, "mastered": request.mastered},
            )
            payload = self._advance_payload(record)
            record.last_answer = (request.skill_id, request.mastered)
            record.last_response = payload
            return payload

    def get_state(self, session_id: str) -> dict:
        record = self._get(session_id)
        with record.lock:
            run = record.run
            question = run.next_question()
            probs = run.probabilities()
            pool = np.flatnonzero(run.assessment == UNASSESSED)
            assessed = [
                {
                    "skill_id": self.ontology.skills[i].id,
                    "mastered": bool(v == ASSESSED_MASTERED),
                }
                for i, v in enumerate(run.assessment)
                if v != UNASSESSED
            ]
            return {
                "session_id": session_id,
                "status": "complete" if question is None else "awaiting-answer",
                "question": self._question_payload(question),
                "assessed": assessed,
                "probabilities": [float(p) for p in probs],
                "uncertain_count": ksue(probs, run.stop_rule.epsilon, pool),
                "answered_count": len(run.steps),
                "total_skills": len(self.ontology),
            }

    def submit_corrections(self, session_id: str, request: CorrectionsRequest) -> dict:
        record = self._get(session_id)
        with record.lock:
            run = record.run
            if run.next_question() is not None:
                raise _error(
                    409, "session_active", "corrections are only accepted after completion"
                )
            corrections = [
                Correction(skill_id=c.skill_id, mastered=c.mastered)
                for c in request.corrections
            ]
            try:
                state, retraining = apply_correction(
                    run.transcript(), corrections, self.ontology, learner_id=session_id
                )
            except CorrectionRejectedError as exc:
                raise _error(409, "correction_rejected", str(exc))
            except OntologyError as exc:
                raise _error(422, "unknown_skill", str(exc))
            self._append_pool(session_id, state)
            record.corrected = [int(v) for v in state]
            self._append_journal(
                session_id, {"kind": "corrections", "state": record.corrected}
            )
            return {
                "session_id": session_id,
                "corrected": [
                    {"skill_id": skill.id, "mastered": bool(v)}
                    for skill, v in zip(self.ontology.skills, state)
                ],
                "user_verified": True,
            }

    def _append_pool(self, session_id: str, state: np.ndarray) -> None:
        new_file = not self.correction_pool.exists()
        self.correction_pool.parent.mkdir(parents=True, exist_ok=True)
        with open(self.correction_pool, "a", newline="") as fh:
            writer = csv.writer(fh)
            if new_file:
                writer.writerow(COHORT_COLUMNS)
            for skill, value in zip(self.ontology.skills, state):
                writer.writerow([session_id, skill.id, int(value)])

    def flush(self) -> None:
        """Journals are written synchronously; nothing is buffered."""


def create_app(
    model: TrainedModel,
    ontology: SkillOntology,
    sessions_dir,
    correction_pool,
) -> FastAPI:
    store = SessionStore(model, ontology, Path(sessions_dir), Path(correction_pool))
    app = FastAPI(title="skillassess")
    app.state.store = store

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "skills": len(ontology)}

    @app.post("/v1/sessions")
    def create_session(request: CreateSessionRequest):
        return store.create(request)

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        return store.get_state(session_id)

    @app.post("/v1/sessions/{session_id}/answers")
    def submit_answer(session_id: str, request: AnswerRequest):
        return store.submit_answer(session_id, request)

    @app.post("/v1/sessions/{session_id}/corrections")
    def submit_corrections(session_id: str, request: CorrectionsRequest):
        return store.submit_corrections(session_id, request)

    return app
