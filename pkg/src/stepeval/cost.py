"""Cost and latency diagnostics.

Per-trajectory judging cost is ``alpha * tokens / 1000 + beta * images`` where
``alpha`` is the price per 1,000 prompt tokens and ``beta`` the price per
attached image. Completion tokens are tracked but never priced.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import BudgetExceeded, EmptyInput, FileMissing, MalformedDocument
from .prompt import PromptTemplate, RenderedPrompt, plan_prompts

if TYPE_CHECKING:
    from .config import EvalConfig
    from .rubric import SubgoalRubric
    from .trajectory import Trajectory

BYTES_PER_TOKEN = 4
_MICRO = Decimal("0.000001")


@dataclass(frozen=True)
class CostModel:
    alpha: float = 0.0
    beta: float = 0.0
    currency_code: str = "USD"

    def __post_init__(self):
        if not (self.alpha >= 0 and self.beta >= 0):
            raise ValueError("prices must be non-negative")

    @classmethod
    def from_dict(cls, doc: dict) -> "CostModel":
        return cls(
            alpha=float(doc.get("alpha_per_1k_tokens", 0.0)),
            beta=float(doc.get("beta_per_image", 0.0)),
            currency_code=str(doc.get("currency", "USD")),
        )

    def to_dict(self) -> dict:
        return {
            "currency": self.currency_code,
            "alpha_per_1k_tokens": self.alpha,
            "beta_per_image": self.beta,
        }


def load_pricing(path) -> CostModel:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(path)
    try:
        return CostModel.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, TypeError, ValueError, AttributeError) as exc:
        raise MalformedDocument(path, str(exc)) from exc


def trajectory_cost(model: CostModel, tokens: int, images: int) -> float:
    if tokens < 0 or images < 0:
        raise ValueError("token and image counts must be non-negative")
    return model.alpha * tokens / 1000 + model.beta * images


def estimate_tokens(prompt: RenderedPrompt | str) -> int:
    """Provider-agnostic estimate: one token per 4 UTF-8 bytes, rounded up.

    Few-shot examples are part of the rendered text and so are counted at the
    same rate.
    """
    text = prompt if isinstance(prompt, str) else prompt.text
    return -(-len(text.encode("utf-8")) // BYTES_PER_TOKEN)


@dataclass(frozen=True)
class CostRecord:
    trajectory_id: str
    tokens: int
    images: int
    cost: float
    latency: float
    token_source: str = "measured"
    completion_tokens: int = 0

    def to_dict(self) -> dict:
        return {
            "trajectory_id": self.trajectory_id,
            "tokens": self.tokens,
            "images": self.images,
            "cost": self.cost,
            "latency": self.latency,
            "token_source": self.token_source,
            "completion_tokens": self.completion_tokens,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CostRecord":
        return cls(**doc)


def cost_record(model: CostModel, trajectory_id: str, tokens: int, images: int,
                latency: float, token_source: str = "measured",
                completion_tokens: int = 0) -> CostRecord:
    return CostRecord(
        trajectory_id=trajectory_id,
        tokens=tokens,
        images=images,
        cost=trajectory_cost(model, tokens, images),
        latency=latency,
        token_source=token_source,
        completion_tokens=completion_tokens,
    )


@dataclass(frozen=True)
class CostSummary:
    count: int
    total_cost: float
    mean_cost: float
    total_latency: float
    mean_latency: float
    total_tokens: int
    total_images: int
    total_completion_tokens: int
    currency_code: str = "USD"

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "total_cost": self.total_cost,
            "mean_cost": self.mean_cost,
            "total_latency": self.total_latency,
            "mean_latency": self.mean_latency,
            "total_tokens": self.total_tokens,
            "total_images": self.total_images,
            "total_completion_tokens": self.total_completion_tokens,
            "currency": self.currency_code,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CostSummary":
        doc = dict(doc)
        doc["currency_code"] = doc.pop("currency", "USD")
        return cls(**doc)


def _money(values: Iterable[float]) -> Decimal:
    # each amount enters as its shortest repr so 100 x 0.05 sums to exactly 5
    return sum((Decimal(repr(v)) for v in values), Decimal(0)).quantize(_MICRO, ROUND_HALF_EVEN)


def batch_cost_summary(records: Sequence[CostRecord], currency_code: str = "USD") -> CostSummary:
    if not records:
        raise EmptyInput("cost record list")
    records = sorted(records, key=lambda r: r.trajectory_id)
    n = len(records)
    total = _money(r.cost for r in records)
    latency = math.fsum(r.latency for r in records)
    return CostSummary(
        count=n,
        total_cost=float(total),
        mean_cost=float((total / n).quantize(_MICRO, ROUND_HALF_EVEN)),
        total_latency=latency,
        mean_latency=latency / n,
        total_tokens=sum(r.tokens for r in records),
        total_images=sum(r.images for r in records),
        total_completion_tokens=sum(r.completion_tokens for r in records),
        currency_code=currency_code,
    )


@dataclass(frozen=True)
class Projection:
    calls: int
    tokens: int
    images: int
    cost: float


def project_budget(model: CostModel, config: "EvalConfig", rubric: "SubgoalRubric",
                   sample_trajectory: "Trajectory",
                   catalog: dict[str, PromptTemplate]) -> Projection:
    """Projected judging cost of one trajectory under ``config``, without calling a backend."""
    prompts = plan_prompts(config, rubric, sample_trajectory, catalog)
    tokens = sum(estimate_tokens(p) for p in prompts)
    images = sum(p.image_count for p in prompts)
    return Projection(calls=len(prompts), tokens=tokens, images=images,
                      cost=trajectory_cost(model, tokens, images))


class SpendGuard:
    """Thread-safe running spend with an optional ceiling.

    ``reserve`` is called before each backend call with the projected cost of
    that call and raises ``BudgetExceeded`` if it would pass the ceiling.
    """

    def __init__(self, model: CostModel, ceiling: float | None = None):
        self.model = model
        self.ceiling = ceiling
        self.spent = 0.0
        self._lock = threading.Lock()

    def reserve(self, prompt: RenderedPrompt) -> float:
        projected = trajectory_cost(self.model, estimate_tokens(prompt), prompt.image_count)
        with self._lock:
            if self.ceiling is not None and self.spent + projected > self.ceiling:
                raise BudgetExceeded(self.ceiling, self.spent + projected)
            self.spent += projected
        return projected

    def settle(self, reserved: float, actual: float) -> None:
        with self._lock:
            self.spent += actual - reserved


def format_money(amount: float, currency_code: str = "USD") -> str:
    if currency_code == "USD":
        return f"${amount:,.2f}"
    return f"{amount:,.2f} {currency_code}"


def format_duration(seconds: float) -> str:
    if seconds < 60:
        return f"{seconds:.1f} seconds"
    minutes = seconds / 60
    if abs(minutes - round(minutes)) < 1e-6:
        whole = int(round(minutes))
        return f"{whole} minute" if whole == 1 else f"{whole} minutes"
    return f"{minutes:.1f} minutes"
