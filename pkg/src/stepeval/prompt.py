"""Prompt strategies and template rendering."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .errors import (
    FileMissing,
    IndexOutOfRange,
    MalformedDocument,
    PlaceholderUnfilled,
    TemplateIncompatible,
    UnknownTemplate,
)
from .rubric import SubgoalRubric
from .trajectory import ImageRef, Trajectory, sample_frames, select_views, subgoal_window

PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class PromptStrategy(str, Enum):
    WHOLE_TRAJECTORY = "whole_trajectory"
    PER_SUBGOAL = "per_subgoal"
    PER_SUBGOAL_WINDOWED = "per_subgoal_windowed"

    @property
    def per_subgoal(self) -> bool:
        return self is not PromptStrategy.WHOLE_TRAJECTORY

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    style: str
    body: str
    few_shot_examples: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.style not in ("zero_shot", "few_shot"):
            raise TemplateIncompatible(self.id, f"unknown style {self.style!r}")
        if self.body.count("{answer_instruction}") != 1:
            raise TemplateIncompatible(self.id, "body must contain {answer_instruction} exactly once")
        if self.style == "zero_shot" and self.few_shot_examples:
            raise TemplateIncompatible(self.id, "zero_shot templates carry no examples")
        if not (self.whole_trajectory or self.per_subgoal):
            raise TemplateIncompatible(self.id, "body needs {subgoal_list} or {subgoal_description}")

    @property
    def whole_trajectory(self) -> bool:
        return "{subgoal_list}" in self.body

    @property
    def per_subgoal(self) -> bool:
        return "{subgoal_description}" in self.body

    def supports(self, strategy: PromptStrategy) -> bool:
        return self.per_subgoal if strategy.per_subgoal else self.whole_trajectory

    @classmethod
    def from_dict(cls, doc: dict) -> "PromptTemplate":
        examples = tuple((str(s), str(a)) for s, a in doc.get("few_shot_examples") or [])
        return cls(id=doc["id"], style=doc["style"], body=doc["body"], few_shot_examples=examples)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "style": self.style,
            "body": self.body,
            "few_shot_examples": [list(e) for e in self.few_shot_examples],
        }


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    images: tuple[ImageRef, ...] = field(default=())
    subgoal_scope: Optional[int] = None  # None means all subgoals

    @property
    def image_count(self) -> int:
        return len(self.images)


def answer_instruction(n: int) -> str:
    if n == 1:
        return (
            "After your reasoning, end with a final line of the form `ANSWER: 1` if the "
            "subgoal was achieved or `ANSWER: 0` if it was not."
        )
    return (
        "After your reasoning, end with a final line of the form "
        f"`ANSWER: b1 b2 ... b{n}` containing exactly {n} values separated by spaces, "
        "in subgoal order, where each value is 1 if that subgoal was achieved and 0 if not."
    )


def format_subgoal_list(rubric: SubgoalRubric) -> str:
    return "\n".join(f"{s.index}. {s.description}" for s in rubric.subgoals)


def _examples_block(template: PromptTemplate) -> str:
    if not template.few_shot_examples:
        return ""
    blocks = ["Here are worked examples."]
    for i, (scenario, answer) in enumerate(template.few_shot_examples, start=1):
        blocks.append(f"Example {i}:\nScenario: {scenario}\nANSWER: {answer}")
    blocks.append("Now judge the following.")
    return "\n\n".join(blocks) + "\n\n"


def _fill(template: PromptTemplate, values: dict[str, str]) -> str:
    def sub(match: re.Match) -> str:
        key = match.group(1)
        if key not in values:
            raise PlaceholderUnfilled(template.id, key)
        return values[key]

    # single pass over the body only; substituted values are never re-scanned
    return _examples_block(template) + PLACEHOLDER_RE.sub(sub, template.body)


def render_whole_trajectory(template: PromptTemplate, rubric: SubgoalRubric,
                            frames: Trajectory) -> RenderedPrompt:
    if not template.whole_trajectory:
        raise TemplateIncompatible(template.id, "whole-trajectory rendering requires {subgoal_list}")
    text = _fill(template, {
        "task_name": rubric.task_name,
        "subgoal_list": format_subgoal_list(rubric),
        "subgoal_count": str(rubric.n),
        "answer_instruction": answer_instruction(rubric.n),
    })
    return RenderedPrompt(text=text, images=tuple(frames.image_refs()), subgoal_scope=None)


def render_per_subgoal(template: PromptTemplate, rubric: SubgoalRubric, k: int,
                       frames: Trajectory) -> RenderedPrompt:
    if not 1 <= k <= rubric.n:
        raise IndexOutOfRange(k, rubric.n)
    if not template.per_subgoal:
        raise TemplateIncompatible(template.id, "per-subgoal rendering requires {subgoal_description}")
    sg = rubric.subgoal(k)
    text = _fill(template, {
        "task_name": rubric.task_name,
        "subgoal_description": sg.description,
        "subgoal_index": str(k),
        "answer_instruction": answer_instruction(1),
    })
    return RenderedPrompt(text=text, images=tuple(frames.image_refs()), subgoal_scope=k)


_WHOLE_BODY = (
    "You are evaluating a recorded robot manipulation attempt at the task "
    "\"{task_name}\". The attached images are frames from the attempt in "
    "chronological order.\n\n"
    "The task consists of these subgoals, in order:\n{subgoal_list}\n\n"
    "For each subgoal, decide from the visual evidence whether the robot achieved it.\n"
    "{answer_instruction}"
)

_PER_SUBGOAL_BODY = (
    "You are evaluating a recorded robot manipulation attempt at the task "
    "\"{task_name}\". The attached images are frames from the attempt in "
    "chronological order.\n\n"
    "Subgoal to judge: {subgoal_description}\n\n"
    "Decide from the visual evidence whether the robot achieved this subgoal.\n"
    "{answer_instruction}"
)

_WHOLE_EXAMPLES = (
    ("Task with subgoals 1. grasp the block, 2. lift the block, 3. place the block "
     "on the plate. The gripper closes on the block and raises it, but the final "
     "frame shows the block on the table beside the plate.", "1 1 0"),
    ("Task with subgoals 1. open the drawer, 2. put the sponge inside. The drawer "
     "stays closed throughout and the sponge never moves.", "0 0"),
)

_PER_SUBGOAL_EXAMPLES = (
    ("Subgoal: grasp the cup. The gripper closes around the cup handle and the cup "
     "moves with the gripper in later frames.", "1"),
    ("Subgoal: place the cup on the saucer. The last frame shows the cup tipped "
     "over next to the saucer.", "0"),
)


def builtin_templates() -> list[PromptTemplate]:
    return [
        PromptTemplate("whole_zero_shot", "zero_shot", _WHOLE_BODY),
        PromptTemplate("whole_few_shot", "few_shot", _WHOLE_BODY, _WHOLE_EXAMPLES),
        PromptTemplate("subgoal_zero_shot", "zero_shot", _PER_SUBGOAL_BODY),
        PromptTemplate("subgoal_few_shot", "few_shot", _PER_SUBGOAL_BODY, _PER_SUBGOAL_EXAMPLES),
    ]


def load_template(path) -> PromptTemplate:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        return PromptTemplate.from_dict(doc)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(path, str(exc)) from exc


def template_catalog(extra: Iterable[PromptTemplate] = ()) -> dict[str, PromptTemplate]:
    """Built-in templates keyed by id; ``extra`` entries override by id."""
    catalog = {t.id: t for t in builtin_templates()}
    for t in extra:
        catalog[t.id] = t
    return catalog


def lookup_template(catalog: dict[str, PromptTemplate], template_id: str) -> PromptTemplate:
    try:
        return catalog[template_id]
    except KeyError:
        raise UnknownTemplate(template_id) from None


def plan_prompts(config, rubric: SubgoalRubric, trajectory: Trajectory,
                 catalog: dict[str, PromptTemplate]) -> list[RenderedPrompt]:
    """All prompts one trajectory needs under ``config``, in call order.

    Views are selected first; the windowed strategy then cuts the subgoal
    window before the frame policy thins it.
    """
    template = lookup_template(catalog, config.template_id)
    strategy = PromptStrategy(config.strategy)
    if not template.supports(strategy):
        raise TemplateIncompatible(template.id, f"does not support strategy {strategy.value}")
    viewed = select_views(trajectory, config.views)
    if strategy is PromptStrategy.WHOLE_TRAJECTORY:
        return [render_whole_trajectory(template, rubric, sample_frames(viewed, config.frame_policy))]
    if strategy is PromptStrategy.PER_SUBGOAL:
        frames = sample_frames(viewed, config.frame_policy)
        return [render_per_subgoal(template, rubric, k, frames) for k in range(1, rubric.n + 1)]
    return [
        render_per_subgoal(
            template, rubric, k,
            sample_frames(subgoal_window(viewed, k, rubric.n), config.frame_policy),
        )
        for k in range(1, rubric.n + 1)
    ]
