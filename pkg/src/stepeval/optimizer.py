"""Configuration search against a labeled validation set.

Every configuration in a (small) Cartesian space is evaluated exhaustively;
selection uses the accuracy/cost Pareto frontier and a per-trajectory budget.
The objective is exact-match task accuracy. Latency is reported only.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from .config import EvalConfig
from .cost import CostModel, batch_cost_summary, cost_record
from .errors import EmptyAxis, EmptyInput, FileMissing, MalformedDocument, MissingGroundTruth, NoFeasibleConfig
from .judge import JudgeBackend
from .metrics import diagnostics
from .pipeline import DEFAULT_PARALLEL, run_batch
from .prompt import PromptStrategy, PromptTemplate, lookup_template
from .rubric import SubgoalRubric
from .trajectory import FramePolicy, Trajectory

logger = logging.getLogger(__name__)

AXES = ("views", "frame_policies", "strategies", "templates", "models", "resolutions")


@dataclass(frozen=True)
class ConfigSpace:
    views: tuple[tuple[str, ...], ...]
    frame_policies: tuple[FramePolicy, ...] = (FramePolicy.all(),)
    strategies: tuple[PromptStrategy, ...] = (PromptStrategy.WHOLE_TRAJECTORY,)
    templates: tuple[str, ...] = ("whole_zero_shot",)
    models: tuple[str, ...] = ("mock",)
    resolutions: tuple[Optional[int], ...] = (None,)
    pricing: Mapping[str, CostModel] = field(default_factory=dict, hash=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "ConfigSpace":
        kwargs: dict[str, Any] = {}
        if "views" in doc:
            kwargs["views"] = tuple(tuple(v) for v in doc["views"])
        else:
            raise EmptyAxis("views")
        if "frame_policies" in doc:
            kwargs["frame_policies"] = tuple(FramePolicy.parse(p) for p in doc["frame_policies"])
        if "strategies" in doc:
            kwargs["strategies"] = tuple(PromptStrategy(s) for s in doc["strategies"])
        if "templates" in doc:
            kwargs["templates"] = tuple(doc["templates"])
        if "models" in doc:
            kwargs["models"] = tuple(doc["models"])
        if "resolutions" in doc:
            kwargs["resolutions"] = tuple(doc["resolutions"])
        if "pricing" in doc:
            kwargs["pricing"] = {m: CostModel.from_dict(p) for m, p in doc["pricing"].items()}
        return cls(**kwargs)


def load_config_space(path) -> ConfigSpace:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(path)
    try:
        return ConfigSpace.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(path, str(exc)) from exc


@dataclass(frozen=True)
class ConfigResult:
    config: EvalConfig
    task_accuracy: float
    per_subgoal_accuracy: tuple[float, ...]
    mean_cost: float
    mean_latency: float

    @property
    def config_id(self) -> str:
        return self.config.config_id

    def to_dict(self) -> dict:
        return {
            "config_id": self.config_id,
            "config": self.config.to_dict(),
            "task_accuracy": self.task_accuracy,
            "per_subgoal_accuracy": list(self.per_subgoal_accuracy),
            "mean_cost": self.mean_cost,
            "mean_latency": self.mean_latency,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ConfigResult":
        return cls(
            config=EvalConfig.from_dict(doc["config"]),
            task_accuracy=doc["task_accuracy"],
            per_subgoal_accuracy=tuple(doc["per_subgoal_accuracy"]),
            mean_cost=doc["mean_cost"],
            mean_latency=doc["mean_latency"],
        )


def enumerate_configs(space: ConfigSpace, catalog: Mapping[str, PromptTemplate],
                      cost_model: Optional[CostModel] = None) -> list[EvalConfig]:
    """Cartesian product of the axes, deduplicated and sorted by config id.

    Strategy/template pairs the template cannot render are skipped. Pricing
    comes from ``space.pricing`` per model, else ``cost_model``.
    """
    for axis in AXES:
        if not getattr(space, axis):
            raise EmptyAxis(axis)
    configs: dict[str, EvalConfig] = {}
    for views, policy, strategy, template_id, model_id, res in itertools.product(
        space.views, space.frame_policies, space.strategies, space.templates, space.models, space.resolutions
    ):
        if not lookup_template(dict(catalog), template_id).supports(strategy):
            continue
        cfg = EvalConfig(
            views=tuple(views),
            frame_policy=policy,
            strategy=strategy,
            template_id=template_id,
            model_id=model_id,
            resolution=res,
            cost_model=space.pricing.get(model_id, cost_model or CostModel()),
        )
        configs.setdefault(cfg.config_id, cfg)
    if not configs:
        raise EmptyAxis("templates (no template supports any listed strategy)")
    return [configs[k] for k in sorted(configs)]


def evaluate_config(config: EvalConfig, backend: JudgeBackend, rubric: SubgoalRubric,
                    labeled_trajectories: Sequence[Trajectory],
                    catalog: Mapping[str, PromptTemplate],
                    parallel: int = DEFAULT_PARALLEL) -> ConfigResult:
    if not labeled_trajectories:
        raise EmptyInput("labeled trajectory list")
    for t in labeled_trajectories:
        if t.ground_truth is None:
            raise MissingGroundTruth(t.id)
    verdicts = run_batch(backend, config, rubric, labeled_trajectories, dict(catalog), parallel=parallel)
    truth = {t.id: t.ground_truth for t in labeled_trajectories}
    diag = diagnostics([v.predictions for v in verdicts], [truth[v.trajectory_id] for v in verdicts])
    costs = batch_cost_summary([
        cost_record(config.cost_model, v.trajectory_id, v.prompt_tokens, v.image_count, v.latency, v.token_source)
        for v in verdicts
    ])
    return ConfigResult(
        config=config,
        task_accuracy=diag.task_eval_accuracy,
        per_subgoal_accuracy=diag.per_subgoal_accuracy,
        mean_cost=costs.mean_cost,
        mean_latency=costs.mean_latency,
    )


def pareto_frontier(results: Sequence[ConfigResult]) -> list[ConfigResult]:
    """Results not dominated in (accuracy up, cost down), sorted by cost then config id.

    Exact ties on both axes do not dominate each other, so all are kept.
    """
    if not results:
        raise EmptyInput("result list")
    by_cost = sorted(results, key=lambda r: (r.mean_cost, -r.task_accuracy, r.config_id))
    frontier: list[ConfigResult] = []
    best_cheaper = float("-inf")  # best accuracy among strictly cheaper results
    i = 0
    while i < len(by_cost):
        j = i
        while j < len(by_cost) and by_cost[j].mean_cost == by_cost[i].mean_cost:
            j += 1
        group = by_cost[i:j]
        top = group[0].task_accuracy
        if top > best_cheaper:
            frontier.extend(r for r in group if r.task_accuracy == top)
            best_cheaper = top
        i = j
    return sorted(frontier, key=lambda r: (r.mean_cost, r.config_id))


def best_under_budget(results: Sequence[ConfigResult], budget: float) -> ConfigResult:
    if not results:
        raise EmptyInput("result list")
    feasible = [r for r in results if r.mean_cost <= budget]
    if not feasible:
        raise NoFeasibleConfig(budget, min(r.mean_cost for r in results))
    return min(feasible, key=lambda r: (-r.task_accuracy, r.mean_cost, r.config_id))


def optimize(space: ConfigSpace, backend: JudgeBackend, rubric: SubgoalRubric,
             labeled_trajectories: Sequence[Trajectory], catalog: Mapping[str, PromptTemplate],
             cost_model: Optional[CostModel] = None,
             parallel: int = DEFAULT_PARALLEL) -> list[ConfigResult]:
    """Evaluate every config in ``space``; results in config-id order."""
    results = []
    for cfg in enumerate_configs(space, catalog, cost_model):
        logger.info("evaluating %s", cfg.config_id)
        results.append(evaluate_config(cfg, backend, rubric, labeled_trajectories, catalog, parallel))
    return results


def prompt_variant_search(base_template: PromptTemplate, variants: Sequence[PromptTemplate],
                          backend: JudgeBackend, rubric: SubgoalRubric,
                          labeled_trajectories: Sequence[Trajectory], base_config: EvalConfig,
                          catalog: Optional[Mapping[str, PromptTemplate]] = None,
                          parallel: int = DEFAULT_PARALLEL) -> list[tuple[PromptTemplate, float]]:
    """Rank the base template and its variants by task accuracy under ``base_config``.

    Only the template changes between candidates. Ties keep config-id order.
    """
    if not variants:
        raise EmptyInput("variant list")
    scored = []
    for template in (base_template, *variants):
        cat = dict(catalog or {})
        cat[template.id] = template
        cfg = replace(base_config, template_id=template.id)
        res = evaluate_config(cfg, backend, rubric, labeled_trajectories, cat, parallel)
        scored.append((template, res.task_accuracy, cfg.config_id))
    scored.sort(key=lambda s: (-s[1], s[2]))
    return [(t, acc) for t, acc, _ in scored]
