"""Seeded error-model judge for meta-evaluation without a live model.

Each prediction equals the ground truth except where a counter-based draw,
keyed by ``(seed, trajectory_id, k)``, falls below the flip probability of
subgoal ``k``. Draws do not depend on call order, so verdicts are identical
under any evaluation schedule.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Sequence

from ..cost import estimate_tokens
from ..errors import MissingGroundTruth
from .core import JudgeReply, JudgeRequest, format_answer


def uniform(seed: int, trajectory_id: str, k: int) -> float:
    """Deterministic draw in [0, 1) from a 64-bit BLAKE2b digest."""
    h = hashlib.blake2b(digest_size=8, person=b"stepeval-mock")
    h.update(struct.pack("<Q", seed & 0xFFFF_FFFF_FFFF_FFFF))
    h.update(struct.pack("<I", k))
    h.update(trajectory_id.encode("utf-8"))
    return int.from_bytes(h.digest(), "little") / 2.0**64


@dataclass(frozen=True)
class MockJudgeSpec:
    flip_probabilities: tuple[float, ...]
    seed: int = 0
    synthetic_tokens_per_image: int = 0
    synthetic_latency: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "flip_probabilities", tuple(float(e) for e in self.flip_probabilities))
        for e in self.flip_probabilities:
            if not 0.0 <= e <= 1.0:
                raise ValueError(f"flip probability {e} outside [0, 1]")


class MockJudge:
    def __init__(self, spec: MockJudgeSpec):
        self.spec = spec
        self.backend_id = f"mock(seed={spec.seed})"

    def predict(self, trajectory_id: str, truth: Sequence[int]) -> tuple[int, ...]:
        eps = self.spec.flip_probabilities
        if len(eps) not in (1, len(truth)):
            raise ValueError(f"mock has {len(eps)} flip probabilities for {len(truth)} subgoals")
        out = []
        for k, y in enumerate(truth, start=1):
            e = eps[0] if len(eps) == 1 else eps[k - 1]
            flip = uniform(self.spec.seed, trajectory_id, k) < e
            out.append(1 - y if flip else y)
        return tuple(out)

    def judge_call(self, request: JudgeRequest) -> JudgeReply:
        traj = request.trajectory
        if traj.ground_truth is None:
            raise MissingGroundTruth(traj.id)
        predicted = self.predict(traj.id, traj.ground_truth)
        k = request.prompt.subgoal_scope
        text = format_answer(predicted if k is None else predicted[k - 1:k])
        tokens = estimate_tokens(request.prompt) + self.spec.synthetic_tokens_per_image * request.prompt.image_count
        return JudgeReply(
            text=text,
            prompt_tokens=tokens,
            completion_tokens=estimate_tokens(text),
            latency=self.spec.synthetic_latency,
        )


def mock_judge(spec: MockJudgeSpec) -> MockJudge:
    return MockJudge(spec)
