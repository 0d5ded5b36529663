"""Blinded annotation sessions over a local HTTP service.

Annotators rank system outputs by understandability and label the
translation strategy each used.  Outputs are presented under shuffled
anonymous letters; the letter-to-system mapping is derived from the
session seed, kept server side, and only resolved at export.  Records
append to a JSONL store so a crash loses nothing already acknowledged.
"""

from __future__ import annotations

import json
import string
import threading
import time
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

from pydantic import BaseModel

from .analysis import StrategyAnnotation, StrategyLabel
from .corpus import Corpus, SystemRun

__all__ = [
    "AnnotationError",
    "DuplicateSubmission",
    "TaskView",
    "AnnotationRecord",
    "AnnotationSession",
    "AnnotationService",
    "create_app",
]


class AnnotationError(Exception):
    pass


class DuplicateSubmission(AnnotationError):
    def __init__(self, annotator_id: str, sample_id: str, original_timestamp: float):
        super().__init__(
            f"annotator {annotator_id!r} already submitted {sample_id!r}"
        )
        self.original_timestamp = original_timestamp


@dataclass(frozen=True)
class TaskView:
    """What an annotator sees: blinded outputs plus the open reference.

    ``csi_spans`` are 0-based end-exclusive offsets into the source, so
    the client can highlight without knowing anything else about the
    corpus.
    """

    sample_id: str
    source_text: str
    reference_text: str
    outputs: dict[str, str]
    csi_spans: tuple[tuple[int, int], ...] = ()

    def to_payload(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "source_text": self.source_text,
            "reference_text": self.reference_text,
            "outputs": self.outputs,
            "csi_spans": [list(span) for span in self.csi_spans],
        }


@dataclass(frozen=True)
class AnnotationRecord:
    annotator_id: str
    sample_id: str
    ranks: dict[str, int]
    labels: dict[str, StrategyLabel]
    timestamp: float

    def to_record(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "sample_id": self.sample_id,
            "ranks": dict(self.ranks),
            "labels": {letter: label.value for letter, label in self.labels.items()},
            "timestamp": self.timestamp,
        }


@dataclass
class AnnotationSession:
    session_id: str
    blinding_seed: int
    sample_ids: tuple[str, ...]
    letter_maps: dict[str, dict[str, str]]
    tasks: dict[str, TaskView]
    records: list[AnnotationRecord] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.sample_ids)

    def completed_by(self, annotator_id: str) -> set[str]:
        return {r.sample_id for r in self.records if r.annotator_id == annotator_id}

    def find_record(self, annotator_id: str, sample_id: str) -> AnnotationRecord | None:
        for record in self.records:
            if record.annotator_id == annotator_id and record.sample_id == sample_id:
                return record
        return None


def _letter_map(seed: int, sample_id: str, system_ids: Sequence[str]) -> dict[str, str]:
    # Per-sample derivation keeps the assignment stable under task
    # reordering; sorted input makes it independent of run order.
    shuffled = sorted(system_ids)
    random.Random(f"{seed}:{sample_id}").shuffle(shuffled)
    return dict(zip(string.ascii_uppercase, shuffled))


def _validate_record(
    session: AnnotationSession,
    annotator_id: str,
    sample_id: str,
    ranks: Mapping[str, int],
    labels: Mapping[str, StrategyLabel],
) -> None:
    if sample_id not in session.letter_maps:
        raise AnnotationError(f"unknown sample {sample_id!r} for this session")
    letters = set(session.letter_maps[sample_id])
    if set(ranks) != letters or set(labels) != letters:
        raise AnnotationError(
            f"ranks and labels must cover exactly letters {sorted(letters)}"
        )
    if sorted(ranks.values()) != list(range(1, len(letters) + 1)):
        raise AnnotationError("ranks are not a permutation of 1..k")
    previous = session.find_record(annotator_id, sample_id)
    if previous is not None:
        raise DuplicateSubmission(annotator_id, sample_id, previous.timestamp)


class AnnotationService:
    """Sessions, validation, and the append-only record store."""

    def __init__(
        self,
        corpus: Corpus,
        store_dir: str | Path,
        clock: Callable[[], float] = time.time,
    ) -> None:
        self.corpus = corpus
        self.store_dir = Path(store_dir)
        self.sessions: dict[str, AnnotationSession] = {}
        self._clock = clock
        self._write_lock = threading.Lock()

    def create_session(
        self,
        runs: Sequence[SystemRun],
        seed: int,
        session_id: str = "default",
        sample_count: int | None = None,
    ) -> AnnotationSession:
        if len(runs) < 2:
            raise AnnotationError("need at least two system runs to rank")
        system_ids = [run.system_id for run in runs]
        if len(set(system_ids)) != len(system_ids):
            raise AnnotationError("system ids must be distinct")
        if session_id in self.sessions:
            raise AnnotationError(f"session {session_id!r} already exists")
        all_ids = [s.sample_id for s in self.corpus.samples]
        if sample_count is None:
            sample_ids = list(all_ids)
        else:
            if sample_count > len(all_ids):
                raise AnnotationError(
                    f"insufficient samples: requested {sample_count}, have {len(all_ids)}"
                )
            sample_ids = random.Random(seed).sample(all_ids, sample_count)
        by_run = {run.system_id: run.hypotheses for run in runs}
        uncovered = [
            sid
            for sid in sample_ids
            if any(sid not in hyps for hyps in by_run.values())
        ]
        if uncovered:
            raise AnnotationError(
                "insufficient coverage: no hypothesis for " + ", ".join(sorted(uncovered))
            )
        letter_maps = {}
        tasks = {}
        for sid in sample_ids:
            sample = self.corpus.sample(sid)
            mapping = _letter_map(seed, sid, system_ids)
            letter_maps[sid] = mapping
            tasks[sid] = TaskView(
                sample_id=sid,
                source_text=sample.source_text,
                reference_text=sample.reference_text,
                outputs={letter: by_run[system][sid] for letter, system in mapping.items()},
                csi_spans=tuple(occ.span for occ in sample.csis),
            )
        session = AnnotationSession(
            session_id=session_id,
            blinding_seed=seed,
            sample_ids=tuple(sample_ids),
            letter_maps=letter_maps,
            tasks=tasks,
        )
        self._load_existing_records(session)
        self.sessions[session_id] = session
        return session

    def _record_path(self, session_id: str) -> Path:
        return self.store_dir / session_id / "records.jsonl"

    def _load_existing_records(self, session: AnnotationSession) -> None:
        path = self._record_path(session.session_id)
        if not path.exists():
            return
        with path.open(encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                data = json.loads(raw)
                record = AnnotationRecord(
                    annotator_id=data["annotator_id"],
                    sample_id=data["sample_id"],
                    ranks={k: int(v) for k, v in data["ranks"].items()},
                    labels={
                        k: StrategyLabel(v) for k, v in data["labels"].items()
                    },
                    timestamp=data["timestamp"],
                )
                # Idempotent rebuild: the duplicate check absorbs a
                # crash that appended before acknowledging.
                if session.find_record(record.annotator_id, record.sample_id) is None:
                    session.records.append(record)

    def session(self, session_id: str) -> AnnotationSession:
        if session_id not in self.sessions:
            raise AnnotationError(f"unknown session {session_id!r}")
        return self.sessions[session_id]

    def next_task(self, session_id: str, annotator_id: str) -> TaskView | None:
        session = self.session(session_id)
        done = session.completed_by(annotator_id)
        for sid in session.sample_ids:
            if sid not in done:
                return session.tasks[sid]
        return None

    def submit_annotation(
        self,
        session_id: str,
        annotator_id: str,
        sample_id: str,
        ranks: Mapping[str, int],
        labels: Mapping[str, StrategyLabel],
    ) -> AnnotationRecord:
        session = self.session(session_id)
        _validate_record(session, annotator_id, sample_id, ranks, labels)
        record = AnnotationRecord(
            annotator_id=annotator_id,
            sample_id=sample_id,
            ranks=dict(ranks),
            labels=dict(labels),
            timestamp=self._clock(),
        )
        path = self._record_path(session_id)
        with self._write_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_record(), ensure_ascii=False) + "\n")
            session.records.append(record)
        return record

    def progress(self, session_id: str, annotator_id: str | None = None) -> dict:
        session = self.session(session_id)
        if annotator_id is None:
            completed = len({r.sample_id for r in session.records})
        else:
            completed = len(session.completed_by(annotator_id))
        return {"completed": completed, "total": session.total}

    def export_annotations(self, session_id: str) -> list[StrategyAnnotation]:
        """De-blind stored records into analysis-ready annotations."""
        session = self.session(session_id)
        out = []
        for record in session.records:
            mapping = session.letter_maps[record.sample_id]
            for letter, system_id in mapping.items():
                out.append(
                    StrategyAnnotation(
                        sample_id=record.sample_id,
                        system_id=system_id,
                        label=record.labels[letter],
                        understandability_rank=record.ranks[letter],
                    )
                )
        return out


# Module level so the postponed annotation on the submit endpoint
# resolves; a factory-local class breaks FastAPI's hint lookup.
class SubmissionBody(BaseModel):
    annotator_id: str
    sample_id: str
    ranks: dict[str, int]
    labels: dict[str, str]


def create_app(service: AnnotationService):
    """FastAPI wrapper; blinded payloads only until /export."""
    from fastapi import FastAPI, HTTPException

    app = FastAPI(title="csieval annotation service")

    def get_session_or_404(session_id: str):
        try:
            return service.session(session_id)
        except AnnotationError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get("/api/session/{session_id}/next-task")
    def next_task(session_id: str, annotator: str = "anonymous"):
        get_session_or_404(session_id)
        task = service.next_task(session_id, annotator)
        if task is None:
            return {"done": True, "task": None}
        return {"done": False, "task": task.to_payload()}

    @app.post("/api/session/{session_id}/annotations")
    def submit(session_id: str, body: SubmissionBody):
        get_session_or_404(session_id)
        try:
            labels = {k: StrategyLabel(v) for k, v in body.labels.items()}
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=f"unknown label: {exc}") from exc
        try:
            record = service.submit_annotation(
                session_id, body.annotator_id, body.sample_id, body.ranks, labels
            )
        except DuplicateSubmission as exc:
            raise HTTPException(
                status_code=409,
                detail={
                    "error": str(exc),
                    "original_timestamp": exc.original_timestamp,
                },
            ) from exc
        except AnnotationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {"accepted": True, "timestamp": record.timestamp}

    @app.get("/api/session/{session_id}/progress")
    def progress(session_id: str, annotator: str | None = None):
        get_session_or_404(session_id)
        return service.progress(session_id, annotator)

    @app.get("/api/session/{session_id}/export")
    def export(session_id: str):
        get_session_or_404(session_id)
        annotations = service.export_annotations(session_id)
        return {
            "annotations": [
                {
                    "sample_id": a.sample_id,
                    "system_id": a.system_id,
                    "label": a.label.value,
                    "understandability_rank": a.understandability_rank,
                }
                for a in annotations
            ]
        }

    return app
