"""Judge abstraction: backends, verdict grammar, and per-trajectory judging."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

from ..config import EvalConfig
from ..cost import SpendGuard, estimate_tokens, trajectory_cost
from ..errors import VerdictParseError
from ..prompt import PromptTemplate, RenderedPrompt, plan_prompts
from ..rubric import SubgoalRubric
from ..trajectory import Trajectory

_MARKER_RE = re.compile(r"ANSWER\s*:", re.IGNORECASE)
_SPLIT_RE = re.compile(r"[\s,;]+")
_TOKENS = {"1": 1, "0": 0, "true": 1, "false": 0, "yes": 1, "no": 0}


@dataclass(frozen=True)
class JudgeRequest:
    prompt: RenderedPrompt
    model_id: str
    trajectory: Trajectory
    resolution: Optional[int] = None

    @property
    def images(self):
        return self.prompt.images


@dataclass(frozen=True)
class JudgeReply:
    text: str
    prompt_tokens: Optional[int] = None  # None when the provider did not report usage
    completion_tokens: Optional[int] = None
    latency: float = 0.0


class JudgeBackend(Protocol):
    backend_id: str

    def judge_call(self, request: JudgeRequest) -> JudgeReply: ...


@dataclass(frozen=True)
class Verdict:
    trajectory_id: str
    predictions: tuple[int, ...]
    raw_replies: tuple[str, ...]
    prompt_tokens: int
    image_count: int
    latency: float
    backend_id: str
    completion_tokens: int = 0
    token_source: str = "measured"

    def to_dict(self) -> dict:
        return {
            "trajectory_id": self.trajectory_id,
            "predictions": list(self.predictions),
            "raw_replies": list(self.raw_replies),
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "image_count": self.image_count,
            "latency": self.latency,
            "backend_id": self.backend_id,
            "token_source": self.token_source,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Verdict":
        return cls(
            trajectory_id=doc["trajectory_id"],
            predictions=tuple(doc["predictions"]),
            raw_replies=tuple(doc["raw_replies"]),
            prompt_tokens=doc["prompt_tokens"],
            image_count=doc["image_count"],
            latency=doc["latency"],
            backend_id=doc["backend_id"],
            completion_tokens=doc.get("completion_tokens", 0),
            token_source=doc.get("token_source", "measured"),
        )


def format_answer(bits: Sequence[int]) -> str:
    return "ANSWER: " + " ".join(str(int(b)) for b in bits)


def parse_verdict(reply: str, expected_n: int) -> tuple[int, ...]:
    """Extract the bit vector from the last ``ANSWER:`` line of a reply.

    Tokens may be 0/1, true/false or yes/no in any case, separated by spaces
    or commas and optionally wrapped in brackets.
    """
    if expected_n < 1:
        raise ValueError("expected_n must be >= 1")
    payload = None
    for line in reply.splitlines():
        markers = list(_MARKER_RE.finditer(line))
        if markers:
            payload = line[markers[-1].end():]
    if payload is None:
        raise VerdictParseError(VerdictParseError.NO_ANSWER_MARKER, reply)

    payload = payload.strip().strip("`*").strip().rstrip(".").strip()
    payload = payload.strip("[]()")
    raw_tokens = [t for t in _SPLIT_RE.split(payload) if t]
    bits = []
    for tok in raw_tokens:
        key = tok.strip("'\"`").lower()
        if key not in _TOKENS:
            raise VerdictParseError(VerdictParseError.NON_BINARY_TOKEN, reply, f"token {tok!r}")
        bits.append(_TOKENS[key])
    if len(bits) != expected_n:
        raise VerdictParseError(
            VerdictParseError.LENGTH_MISMATCH, reply, f"expected {expected_n} values, got {len(bits)}"
        )
    return tuple(bits)


def judge_trajectory(backend: JudgeBackend, config: EvalConfig, rubric: SubgoalRubric,
                     trajectory: Trajectory, catalog: dict[str, PromptTemplate],
                     guard: Optional[SpendGuard] = None) -> Verdict:
    """Judge one trajectory: one call for the whole-trajectory strategy, n calls otherwise."""
    prompts = plan_prompts(config, rubric, trajectory, catalog)
    replies = []
    predictions: list[int] = []
    tokens = completion = images = 0
    latency = 0.0
    estimated = False
    for prompt in prompts:
        reserved = guard.reserve(prompt) if guard is not None else 0.0
        reply = backend.judge_call(JudgeRequest(
            prompt=prompt, model_id=config.model_id,
            trajectory=trajectory, resolution=config.resolution,
        ))
        if reply.prompt_tokens is None:
            call_tokens = estimate_tokens(prompt)
            estimated = True
        else:
            call_tokens = reply.prompt_tokens
        if guard is not None:
            guard.settle(reserved, trajectory_cost(guard.model, call_tokens, prompt.image_count))
        n_expected = rubric.n if prompt.subgoal_scope is None else 1
        predictions.extend(parse_verdict(reply.text, n_expected))
        replies.append(reply.text)
        tokens += call_tokens
        completion += reply.completion_tokens or 0
        images += prompt.image_count
        latency += reply.latency
    return Verdict(
        trajectory_id=trajectory.id,
        predictions=tuple(predictions),
        raw_replies=tuple(replies),
        prompt_tokens=tokens,
        image_count=images,
        latency=latency,
        backend_id=backend.backend_id,
        completion_tokens=completion,
        token_source="estimated" if estimated else "measured",
    )
