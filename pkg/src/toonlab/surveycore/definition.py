"""Survey definition file: two questions, twenty three-way ranking tasks.

The definition JSON names stylized images per model; clients must never see
those names, so every image gets an opaque hex id at load time and the
service only ever hands out ids.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

DEFAULT_PROMPTS = {
    "aesthetic": "Rank the following images according to aesthetic/visual appeal.",
    "cartoon": ("Rank the following images according to how much the image "
                "resembles a cartoon (i.e. illustrated photo or anime)."),
}

REQUIRED_TASK_COUNT = 20
TASKS_PER_QUESTION = 10


class DefinitionError(ValueError):
    """Survey definition violates the protocol invariants."""


@dataclass(frozen=True)
class SurveyQuestion:
    id: str
    prompt: str


@dataclass(frozen=True)
class SurveyTask:
    id: str
    question_id: str
    source: str
    image_paths: dict  # model id -> path
    image_ids: dict    # model id -> opaque hex id


@dataclass
class SurveyDefinition:
    questions: list[SurveyQuestion]
    tasks: list[SurveyTask]
    models: list[str]
    base_dir: str = "."
    image_files: dict = field(default_factory=dict)  # opaque id -> absolute path

    def __post_init__(self):
        if len(self.questions) != 2:
            raise DefinitionError(f"need exactly 2 questions, got {len(self.questions)}")
        if len(self.tasks) != REQUIRED_TASK_COUNT:
            raise DefinitionError(
                f"need exactly {REQUIRED_TASK_COUNT} tasks, got {len(self.tasks)}")
        if len(set(t.id for t in self.tasks)) != len(self.tasks):
            raise DefinitionError("task ids must be unique")
        if len(set(self.models)) != 3:
            raise DefinitionError(f"need exactly 3 distinct models, got {self.models}")
        per_question = {q.id: 0 for q in self.questions}
        for t in self.tasks:
            if t.question_id not in per_question:
                raise DefinitionError(f"task {t.id}: unknown question {t.question_id!r}")
            per_question[t.question_id] += 1
            if set(t.image_paths) != set(self.models):
                raise DefinitionError(
                    f"task {t.id}: images must cover models {sorted(self.models)}")
        for qid, n in per_question.items():
            if n != TASKS_PER_QUESTION:
                raise DefinitionError(
                    f"question {qid!r} has {n} tasks, need {TASKS_PER_QUESTION}")

    def task_by_id(self, task_id: str) -> SurveyTask | None:
        for t in self.tasks:
            if t.id == task_id:
                return t
        return None

    def question_by_id(self, question_id: str) -> SurveyQuestion | None:
        for q in self.questions:
            if q.id == question_id:
                return q
        return None


def _opaque_id(task_id: str, model: str, path: str) -> str:
    digest = hashlib.sha256(f"{task_id}/{model}/{path}".encode("utf-8")).hexdigest()
    return digest[:16]


def build_definition(raw: dict, base_dir: str = ".") -> SurveyDefinition:
    """Validate a parsed definition dict and assign opaque image ids."""
    try:
        questions = [SurveyQuestion(q["id"], q.get("prompt") or DEFAULT_PROMPTS.get(q["id"], ""))
                     for q in raw["questions"]]
        models = list(raw["models"])
        tasks = []
        image_files: dict = {}
        for tr in raw["tasks"]:
            image_paths = dict(tr["images"])
            image_ids = {}
            for model, rel in image_paths.items():
                oid = _opaque_id(tr["id"], model, rel)
                if oid in image_files:
                    raise DefinitionError(f"image id collision for task {tr['id']}")
                image_files[oid] = os.path.join(base_dir, rel)
                image_ids[model] = oid
            tasks.append(SurveyTask(
                id=tr["id"],
                question_id=tr["question"],
                source=tr.get("source", ""),
                image_paths=image_paths,
                image_ids=image_ids,
            ))
    except (KeyError, TypeError) as e:
        raise DefinitionError(f"malformed survey definition: {e}") from e
    return SurveyDefinition(questions=questions, tasks=tasks, models=models,
                            base_dir=base_dir, image_files=image_files)


def load_definition(path) -> SurveyDefinition:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return build_definition(raw, base_dir=os.path.dirname(os.path.abspath(path)))
