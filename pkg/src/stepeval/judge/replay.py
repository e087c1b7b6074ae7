"""Record/replay verdict cache.

The cache is an append-only JSON-lines file. Each line holds one reply keyed
by a SHA-256 digest of the prompt text, the content digests of the attached
images, and the model id.
"""

from __future__ import annotations

import functools
import hashlib
import json
import logging
import os
import threading
from pathlib import Path
from typing import Optional

from ..errors import CacheCorrupt, CacheMiss
from .core import JudgeBackend, JudgeReply, JudgeRequest

logger = logging.getLogger(__name__)

RECORD = "record"
REPLAY = "replay"


def _file_digest(path: Path) -> str:
    st = path.stat()
    return _digest_cached(str(path), st.st_mtime_ns, st.st_size)


@functools.lru_cache(maxsize=4096)
def _digest_cached(path: str, mtime_ns: int, size: int) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def request_digest(request: JudgeRequest) -> str:
    key = {
        "prompt": request.prompt.text,
        "images": [_file_digest(ref.path) for ref in request.images],
        "model": request.model_id,
    }
    canon = json.dumps(key, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


class ReplayBackend:
    def __init__(self, cache_path, mode: str = REPLAY, inner: Optional[JudgeBackend] = None):
        if mode not in (RECORD, REPLAY):
            raise ValueError(f"unknown cache mode {mode!r}")
        if mode == RECORD and inner is None:
            raise ValueError("record mode needs an inner backend")
        self.path = Path(cache_path)
        self.mode = mode
        self.inner = inner
        self.backend_id = inner.backend_id if inner is not None else "replay"
        self.live_calls = 0
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        data = self.path.read_bytes()
        good_end = 0
        lines = data.split(b"\n")
        for i, raw in enumerate(lines):
            is_tail = i == len(lines) - 1
            if not raw.strip():
                good_end += len(raw) + (0 if is_tail else 1)
                continue
            try:
                entry = json.loads(raw)
                digest = entry["digest"]
                entry["reply_text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                if is_tail:
                    # interrupted append: drop the partial record so the next write starts clean
                    logger.warning("dropping truncated final record in %s", self.path)
                    with open(self.path, "r+b") as fh:
                        fh.truncate(good_end)
                    break
                raise CacheCorrupt(self.path, i + 1, str(exc)) from exc
            self._entries.setdefault(digest, entry)
            good_end += len(raw) + (0 if is_tail else 1)
        if self.backend_id == "replay":
            ids = {e.get("backend_id") for e in self._entries.values()} - {None}
            if len(ids) == 1:
                self.backend_id = ids.pop()

    def __len__(self) -> int:
        return len(self._entries)

    def judge_call(self, request: JudgeRequest) -> JudgeReply:
        digest = request_digest(request)
        with self._lock:
            entry = self._entries.get(digest)
        if entry is None:
            if self.mode == REPLAY:
                raise CacheMiss(digest)
            reply = self.inner.judge_call(request)
            entry = {
                "digest": digest,
                "reply_text": reply.text,
                "prompt_tokens": reply.prompt_tokens,
                "completion_tokens": reply.completion_tokens,
                "latency": reply.latency,
                "backend_id": self.inner.backend_id,
            }
            with self._lock:
                self.live_calls += 1
                if digest not in self._entries:
                    self._entries[digest] = entry
                    self._append(entry)
                entry = self._entries[digest]
        return JudgeReply(
            text=entry["reply_text"],
            prompt_tokens=entry.get("prompt_tokens"),
            completion_tokens=entry.get("completion_tokens"),
            latency=entry.get("latency", 0.0),
        )

    def _append(self, entry: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n"
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())


def replay_backend(cache_path, mode: str = REPLAY, inner: Optional[JudgeBackend] = None) -> ReplayBackend:
    return ReplayBackend(cache_path, mode, inner)
