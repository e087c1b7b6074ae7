from .core import (
    JudgeBackend,
    JudgeReply,
    JudgeRequest,
    Verdict,
    format_answer,
    judge_trajectory,
    parse_verdict,
)
from .http import HttpBackend, build_payload, encode_image, http_backend
from .mock import MockJudge, MockJudgeSpec, mock_judge
from .replay import ReplayBackend, replay_backend, request_digest

__all__ = [
    "HttpBackend",
    "JudgeBackend",
    "JudgeReply",
    "JudgeRequest",
    "MockJudge",
    "MockJudgeSpec",
    "ReplayBackend",
    "Verdict",
    "build_payload",
    "encode_image",
    "format_answer",
    "http_backend",
    "judge_trajectory",
    "mock_judge",
    "parse_verdict",
    "replay_backend",
    "request_digest",
]
