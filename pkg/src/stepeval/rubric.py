"""Ordered subgoal decomposition of a task and outcome-vector validation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import (
    FileMissing,
    InvalidRubric,
    LengthMismatch,
    MalformedDocument,
    NonBinaryEntry,
)

# Outcome vectors must fit one 64-bit word.
MAX_SUBGOALS = 64


@dataclass(frozen=True)
class Subgoal:
    index: int
    name: str
    description: str


@dataclass(frozen=True)
class SubgoalRubric:
    task_name: str
    subgoals: tuple[Subgoal, ...]

    def __post_init__(self):
        validate_rubric(self)

    @property
    def n(self) -> int:
        return len(self.subgoals)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.subgoals]

    def subgoal(self, k: int) -> Subgoal:
        return self.subgoals[k - 1]

    @classmethod
    def from_entries(cls, task_name: str, entries: Iterable[tuple[str, str]]) -> "SubgoalRubric":
        subgoals = tuple(
            Subgoal(index=i, name=name, description=desc)
            for i, (name, desc) in enumerate(entries, start=1)
        )
        return cls(task_name=task_name, subgoals=subgoals)

    @classmethod
    def from_dict(cls, doc: Any) -> "SubgoalRubric":
        if not isinstance(doc, dict):
            raise InvalidRubric("$", "document must be a JSON object")
        task_name = doc.get("task_name")
        if not isinstance(task_name, str) or not task_name.strip():
            raise InvalidRubric("task_name", "must be a non-empty string")
        raw = doc.get("subgoals")
        if not isinstance(raw, list):
            raise InvalidRubric("subgoals", "must be a list")
        entries = []
        for i, item in enumerate(raw):
            if not isinstance(item, dict):
                raise InvalidRubric(f"subgoals[{i}]", "must be an object")
            name = item.get("name")
            desc = item.get("description")
            if not isinstance(name, str):
                raise InvalidRubric(f"subgoals[{i}].name", "must be a string")
            if not isinstance(desc, str):
                raise InvalidRubric(f"subgoals[{i}].description", "must be a string")
            entries.append((name, desc))
        return cls.from_entries(task_name, entries)

    def to_dict(self) -> dict:
        return {
            "task_name": self.task_name,
            "subgoals": [{"name": s.name, "description": s.description} for s in self.subgoals],
        }


def validate_rubric(rubric: SubgoalRubric) -> SubgoalRubric:
    if not rubric.task_name or not rubric.task_name.strip():
        raise InvalidRubric("task_name", "must be non-empty")
    n = len(rubric.subgoals)
    if n == 0:
        raise InvalidRubric("subgoals", "at least one subgoal is required")
    if n > MAX_SUBGOALS:
        raise InvalidRubric("subgoals", f"{n} subgoals exceeds the maximum of {MAX_SUBGOALS}")
    seen: set[str] = set()
    for pos, sg in enumerate(rubric.subgoals):
        where = f"subgoals[{pos}]"
        if sg.index != pos + 1:
            raise InvalidRubric(f"{where}.index", f"expected {pos + 1}, got {sg.index}")
        if not sg.name or not sg.name.strip():
            raise InvalidRubric(f"{where}.name", "must be non-empty")
        if sg.name in seen:
            raise InvalidRubric(f"{where}.name", f"duplicate name {sg.name!r}")
        seen.add(sg.name)
        if not sg.description or not sg.description.strip():
            raise InvalidRubric(f"{where}.description", "must be non-empty")
    return rubric


def load_rubric(path) -> SubgoalRubric:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedDocument(path, str(exc)) from exc
    return SubgoalRubric.from_dict(doc)


def save_rubric(rubric: SubgoalRubric, path) -> None:
    Path(path).write_text(
        json.dumps(rubric.to_dict(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def validate_outcome_vector(rubric: SubgoalRubric, y: Sequence) -> tuple[int, ...]:
    """Return ``y`` as a tuple of ints if it is a length-n bit vector."""
    if len(y) != rubric.n:
        raise LengthMismatch(rubric.n, len(y), "outcome vector")
    for pos, v in enumerate(y):
        # bool is an int subclass; True/False are accepted as 1/0
        if not isinstance(v, int) or v not in (0, 1):
            raise NonBinaryEntry(pos, v)
    return tuple(int(v) for v in y)
