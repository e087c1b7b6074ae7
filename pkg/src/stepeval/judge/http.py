"""Chat-completion HTTP backend for hosted or self-served VLMs."""

from __future__ import annotations

import base64
import io
import logging
import os
import time
from typing import Callable, Optional

import httpx
from PIL import Image

from ..errors import AuthRejected, BackendUnavailable, ProviderError
from ..ratelimit import TokenBucket
from ..trajectory import ImageRef
from .core import JudgeReply, JudgeRequest

logger = logging.getLogger(__name__)

API_KEY_ENV = "STEPEVAL_API_KEY"
ENDPOINT_ENV = "STEPEVAL_ENDPOINT"

MAX_RETRIES = 3
_PIL_FORMATS = {"image/png": "PNG", "image/jpeg": "JPEG"}


def encode_image(ref: ImageRef, resolution: Optional[int] = None) -> str:
    """Return a ``data:`` URL, downscaled so the longest edge is at most ``resolution``.

    Aspect ratio is preserved and images are never upscaled.
    """
    data = ref.read_bytes()
    if resolution is not None:
        with Image.open(io.BytesIO(data)) as im:
            w, h = im.size
            if max(w, h) > resolution:
                scale = resolution / max(w, h)
                size = (max(1, round(w * scale)), max(1, round(h * scale)))
                small = im.convert("RGB") if ref.media_type == "image/jpeg" else im.copy()
                small = small.resize(size, Image.Resampling.LANCZOS)
                buf = io.BytesIO()
                small.save(buf, format=_PIL_FORMATS[ref.media_type])
                data = buf.getvalue()
    return f"data:{ref.media_type};base64,{base64.b64encode(data).decode('ascii')}"


def build_payload(request: JudgeRequest, resolution: Optional[int] = None) -> dict:
    content: list[dict] = [{"type": "text", "text": request.prompt.text}]
    for ref in request.images:
        content.append({"type": "image_url", "image_url": {"url": encode_image(ref, resolution)}})
    return {
        "model": request.model_id,
        "messages": [{"role": "user", "content": content}],
        "temperature": 0,
    }


class HttpBackend:
    def __init__(
        self,
        endpoint: str,
        model_id: str,
        api_key: Optional[str] = None,
        resolution: Optional[int] = None,
        timeout: float = 120.0,
        max_retries: int = MAX_RETRIES,
        backoff_base: float = 1.0,
        rate_limiter: Optional[TokenBucket] = None,
        client: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self.api_key = api_key
        self.resolution = resolution
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.rate_limiter = rate_limiter
        self.backend_id = f"http:{model_id}"
        self.retries = 0
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep

    def close(self) -> None:
        self._client.close()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def judge_call(self, request: JudgeRequest) -> JudgeReply:
        resolution = request.resolution if request.resolution is not None else self.resolution
        payload = build_payload(request, resolution)
        payload["model"] = request.model_id or self.model_id
        started = time.perf_counter()
        attempt = 0
        while True:
            if self.rate_limiter is not None:
                self.rate_limiter.acquire()
            try:
                resp = self._client.post(self.endpoint, json=payload, headers=self._headers())
            except httpx.TransportError as exc:
                failure = f"transport error: {exc}"
            else:
                if resp.status_code == 200:
                    return self._reply(resp, time.perf_counter() - started)
                if resp.status_code in (401, 403):
                    raise AuthRejected(resp.status_code, resp.text)
                if resp.status_code != 429 and resp.status_code < 500:
                    try:
                        body = resp.json()
                    except ValueError:
                        body = resp.text
                    raise ProviderError(resp.status_code, body)
                failure = f"HTTP {resp.status_code}"
            if attempt >= self.max_retries:
                raise BackendUnavailable(f"{failure} after {attempt} retries")
            delay = self.backoff_base * 2**attempt
            logger.warning("judge call failed (%s); retrying in %.1fs", failure, delay)
            self._sleep(delay)
            attempt += 1
            self.retries += 1

    @staticmethod
    def _reply(resp: httpx.Response, latency: float) -> JudgeReply:
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(resp.status_code, resp.text) from exc
        if isinstance(text, list):
            # some servers return content parts
            text = "".join(p.get("text", "") for p in text if isinstance(p, dict))
        usage = body.get("usage") or {}
        return JudgeReply(
            text=text or "",
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
            latency=latency,
        )


def http_backend(endpoint: Optional[str] = None, model_id: str = "", auth: Optional[str] = None,
                 resolution: Optional[int] = None, **kwargs) -> HttpBackend:
    """Build an HTTP backend; endpoint and key default to the environment."""
    endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
    if not endpoint:
        raise BackendUnavailable(f"no endpoint given and {ENDPOINT_ENV} is unset")
    if auth is None:
        auth = os.environ.get(API_KEY_ENV)
    return HttpBackend(endpoint, model_id, api_key=auth, resolution=resolution, **kwargs)
