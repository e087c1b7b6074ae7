"""Evaluation settings: one point in the configuration space."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .cost import CostModel
from .errors import FileMissing, MalformedDocument
from .prompt import PromptStrategy
from .trajectory import FramePolicy


@dataclass(frozen=True)
class EvalConfig:
    views: tuple[str, ...]
    frame_policy: FramePolicy = field(default_factory=FramePolicy.all)
    strategy: PromptStrategy = PromptStrategy.WHOLE_TRAJECTORY
    template_id: str = "whole_zero_shot"
    model_id: str = "mock"
    resolution: Optional[int] = None
    cost_model: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        object.__setattr__(self, "views", tuple(self.views))
        object.__setattr__(self, "strategy", PromptStrategy(self.strategy))
        object.__setattr__(self, "frame_policy", FramePolicy.parse(self.frame_policy))
        if not self.views:
            raise ValueError("config must select at least one view")
        if self.resolution is not None and self.resolution < 1:
            raise ValueError("resolution must be a positive pixel count")

    def _content(self) -> dict:
        return {
            "views": list(self.views),
            "frame_policy": self.frame_policy.to_dict(),
            "strategy": self.strategy.value,
            "template_id": self.template_id,
            "model_id": self.model_id,
            "resolution": self.resolution,
            "cost_model": self.cost_model.to_dict(),
        }

    @property
    def config_id(self) -> str:
        canon = json.dumps(self._content(), sort_keys=True, separators=(",", ":"))
        return "cfg-" + hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {"config_id": self.config_id, **self._content()}

    @classmethod
    def from_dict(cls, doc: dict, cost_model: Optional[CostModel] = None) -> "EvalConfig":
        cm = doc.get("cost_model")
        if cost_model is None:
            cost_model = CostModel.from_dict(cm) if cm else CostModel()
        return cls(
            views=tuple(doc["views"]),
            frame_policy=FramePolicy.parse(doc.get("frame_policy", "all")),
            strategy=PromptStrategy(doc.get("strategy", "whole_trajectory")),
            template_id=doc.get("template_id", "whole_zero_shot"),
            model_id=doc.get("model_id", "mock"),
            resolution=doc.get("resolution"),
            cost_model=cost_model,
        )


def load_config(path, cost_model: Optional[CostModel] = None) -> EvalConfig:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(path)
    try:
        doc: Any = json.loads(path.read_text(encoding="utf-8"))
        return EvalConfig.from_dict(doc, cost_model)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(path, str(exc)) from exc
