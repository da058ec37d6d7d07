"""Sessions, ranking records, and the append-only response log.

The log is line-delimited JSON, one typed object per line ("session" or
"ranking").  It is never rewritten: resubmissions append a second line and
the later one becomes effective (last-write-wins), keeping the full audit
trail.  All writes serialize through one lock; reads copy a snapshot.
"""

from __future__ import annotations

import json
import random
import secrets
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from .definition import SurveyDefinition


class StorageError(RuntimeError):
    """The response log could not be read or written."""


class ValidationError(ValueError):
    """A submitted ranking violates the protocol."""


class UnknownIdError(KeyError):
    """Participant, task, or image id does not exist."""


class ReplayError(ValueError):
    """Submission references images that do not belong to the task/session."""


@dataclass
class Session:
    participant_id: str
    task_order: list  # task ids, part 1 tasks then part 2 tasks
    image_orders: dict  # task id -> display order as a list of model ids
    created_at: str = ""


@dataclass
class RankingRecord:
    participant_id: str
    task_id: str
    question_id: str
    rankings: dict  # model id -> rank in {1,2,3}
    image_order: list = field(default_factory=list)  # session display order, for audit
    submitted_at: str = ""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def validate_rankings(rankings: dict, models) -> None:
    """A valid ranking is a bijection from the 3 models onto {1, 2, 3}."""
    if set(rankings.keys()) != set(models):
        raise ValidationError(
            f"rankings must cover exactly {sorted(models)}, got {sorted(rankings)}")
    values = sorted(rankings.values())
    if values != [1, 2, 3]:
        raise ValidationError(f"ranks must be a permutation of 1..3, got {values}")


def new_session(definition: SurveyDefinition, rng_seed: int) -> Session:
    """Seeded per-participant shuffle: tasks within each question part, and
    the display order of each task's three images."""
    rng = random.Random(rng_seed)
    task_order: list[str] = []
    for q in definition.questions:
        part = [t.id for t in definition.tasks if t.question_id == q.id]
        rng.shuffle(part)
        task_order.extend(part)
    image_orders = {}
    for t in definition.tasks:
        order = list(definition.models)
        rng.shuffle(order)
        image_orders[t.id] = order
    return Session(
        participant_id=secrets.token_hex(16),
        task_order=task_order,
        image_orders=image_orders,
        created_at=_now(),
    )


class ResponseLog:
    """Append-only JSONL store; effective state is a fold over the lines."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._records: list[RankingRecord] = []
        self._load()

    def _load(self) -> None:
        try:
            fh = open(self.path, "r", encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    kind = obj.pop("kind")
                except (ValueError, KeyError) as e:
                    raise StorageError(f"{self.path}:{lineno}: corrupt log line: {e}") from e
                if kind == "session":
                    s = Session(**obj)
                    self._sessions[s.participant_id] = s
                elif kind == "ranking":
                    self._records.append(RankingRecord(**obj))
                else:
                    raise StorageError(f"{self.path}:{lineno}: unknown record kind {kind!r}")

    def _append(self, kind: str, payload: dict) -> None:
        line = json.dumps({"kind": kind, **payload}, sort_keys=True)
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
        except OSError as e:
            raise StorageError(f"cannot append to {self.path}: {e}") from e

    def add_session(self, session: Session) -> None:
        with self._lock:
            self._append("session", asdict(session))
            self._sessions[session.participant_id] = session

    def add_ranking(self, record: RankingRecord) -> None:
        with self._lock:
            self._append("ranking", asdict(record))
            self._records.append(record)

    def get_session(self, participant_id: str) -> Session | None:
        with self._lock:
            return self._sessions.get(participant_id)

    def session_count(self) -> int:
        with self._lock:
            return len(self._sessions)

    def all_records(self) -> list[RankingRecord]:
        with self._lock:
            return list(self._records)

    def effective_records(self) -> list[RankingRecord]:
        """Last-write-wins fold keyed by (participant, task)."""
        with self._lock:
            eff: dict[tuple, RankingRecord] = {}
            for rec in self._records:
                eff[(rec.participant_id, rec.task_id)] = rec
            return list(eff.values())


def submit_ranking(log: ResponseLog, definition: SurveyDefinition,
                   session: Session, record: RankingRecord) -> RankingRecord:
    """Validate a ranking against the definition and append it to the log."""
    task = definition.task_by_id(record.task_id)
    if task is None:
        raise UnknownIdError(f"unknown task {record.task_id!r}")
    if record.task_id not in session.task_order:
        raise UnknownIdError(f"task {record.task_id!r} is not part of this session")
    validate_rankings(record.rankings, definition.models)
    if not record.image_order:
        record.image_order = list(session.image_orders[record.task_id])
    if not record.submitted_at:
        record.submitted_at = _now()
    log.add_ranking(record)
    return record
