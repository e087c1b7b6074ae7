"""Command-line entry point: ``stepeval validate|run|estimate|optimize``.

Exit codes: 0 success, 2 validation error, 3 infeasible optimization,
4 backend failure, 5 verdict parse failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import EvalConfig, load_config
from .cost import CostModel, SpendGuard, format_money, load_pricing, project_budget
from .errors import NoFeasibleConfig, StepEvalError, ValidationError
from .judge import MockJudgeSpec, Verdict, mock_judge
from .judge.http import ENDPOINT_ENV, http_backend
from .judge.replay import RECORD, REPLAY, ReplayBackend
from .optimizer import (
    best_under_budget,
    enumerate_configs,
    load_config_space,
    optimize,
    pareto_frontier,
)
from .pipeline import DEFAULT_PARALLEL, run_batch
from .prompt import load_template, template_catalog
from .ratelimit import TokenBucket
from .report import build_report, export_leaderboard, headline, render_markdown, report_json
from .rubric import SubgoalRubric, load_rubric
from .trajectory import Trajectory, load_manifest

logger = logging.getLogger("stepeval")

PROGRESS_FILE = "verdicts.jsonl"
CACHE_FILE = "cache.jsonl"


@dataclass
class RunManifest:
    """Everything one ``run`` invocation needs, from flags or a run file."""

    rubric: Path
    manifest: Path
    config: Optional[Path]
    backend: str
    out: Path
    model: Optional[str] = None
    endpoint: Optional[str] = None
    pricing: Optional[Path] = None
    cache: Optional[Path] = None
    record: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunManifest":
        return cls(
            rubric=Path(args.rubric),
            manifest=Path(args.manifest),
            config=Path(args.config) if args.config else None,
            backend=args.backend,
            out=Path(args.out),
            model=args.model,
            endpoint=args.endpoint,
            pricing=Path(args.pricing) if args.pricing else None,
            cache=Path(args.cache) if args.cache else None,
            record=args.record,
        )


# -- shared helpers ----------------------------------------------------------


def _load_inputs(args) -> tuple[SubgoalRubric, list[Trajectory]]:
    rubric = load_rubric(args.rubric)
    trajectories = load_manifest(args.manifest, rubric)
    return rubric, trajectories


def _catalog(args):
    return template_catalog(load_template(p) for p in (getattr(args, "template", None) or []))


def _common_views(trajectories: Sequence[Trajectory]) -> tuple[str, ...]:
    first = trajectories[0].frames[0].views
    return tuple(v for v in first if all(v in f.images for t in trajectories for f in t.frames))


def _pricing(args) -> Optional[CostModel]:
    return load_pricing(args.pricing) if getattr(args, "pricing", None) else None


def _resolve_config(args, trajectories) -> EvalConfig:
    pricing = _pricing(args)
    if args.config:
        cfg = load_config(args.config, pricing)
    else:
        views = _common_views(trajectories)
        if not views:
            raise ValidationError("no camera view is present in every frame; pass --config")
        cfg = EvalConfig(views=views, cost_model=pricing or CostModel())
    if getattr(args, "model", None):
        cfg = replace(cfg, model_id=args.model)
    if getattr(args, "resolution", None):
        cfg = replace(cfg, resolution=args.resolution)
    return cfg


def _parse_epsilon(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _make_backend(args, out: Optional[Path], model_id: str = ""):
    cache = Path(args.cache) if args.cache else (out / CACHE_FILE if out else Path(CACHE_FILE))
    if args.backend == "replay":
        return ReplayBackend(cache, REPLAY)
    if args.backend == "mock":
        inner = mock_judge(MockJudgeSpec(
            flip_probabilities=_parse_epsilon(args.epsilon),
            seed=args.seed,
            synthetic_tokens_per_image=args.mock_tokens_per_image,
            synthetic_latency=args.mock_latency,
        ))
    else:
        limiter = TokenBucket(args.rps) if args.rps else None
        inner = http_backend(args.endpoint, model_id, rate_limiter=limiter)
    if args.record:
        return ReplayBackend(cache, RECORD, inner)
    return inner


# -- commands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    rubric, trajectories = _load_inputs(args)
    views = sorted({v for t in trajectories for f in t.frames for v in f.images})
    frames = sum(t.m for t in trajectories)
    labeled = sum(t.ground_truth is not None for t in trajectories)
    print(f"task={rubric.task_name} n={rubric.n} N={len(trajectories)} frames={frames} "
          f"views={','.join(views)} labeled={labeled}")
    common = set(_common_views(trajectories)) if trajectories else set()
    for v in views:
        if v not in common:
            print(f"warning: view {v!r} is missing from some frames", file=sys.stderr)
    if trajectories and labeled < len(trajectories):
        print(f"warning: {len(trajectories) - labeled} trajectories lack ground truth "
              "and will be excluded from diagnostics", file=sys.stderr)
    return 0


def _load_progress(path: Path, config_id: str, known: set[str]) -> dict[str, Verdict]:
    done: dict[str, Verdict] = {}
    if not path.exists():
        return done
    for line in path.read_text(encoding="utf-8").splitlines():
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            continue  # torn final line from an interrupted write
        if rec.get("config_id") == config_id and rec["verdict"]["trajectory_id"] in known:
            v = Verdict.from_dict(rec["verdict"])
            done[v.trajectory_id] = v
    return done


def cmd_run(args) -> int:
    run = RunManifest.from_args(args)
    rubric, trajectories = _load_inputs(args)
    if not trajectories:
        raise ValidationError("manifest lists no trajectories")
    catalog = _catalog(args)
    config = _resolve_config(args, trajectories)
    run.out.mkdir(parents=True, exist_ok=True)
    backend = _make_backend(args, run.out, config.model_id)

    progress = run.out / PROGRESS_FILE
    completed = {}
    if args.resume:
        completed = _load_progress(progress, config.config_id, {t.id for t in trajectories})
    # rewritten so a torn line from an interrupted run never prefixes new records
    progress.write_text("".join(
        json.dumps({"config_id": config.config_id, "verdict": v.to_dict()}, sort_keys=True) + "\n"
        for v in completed.values()
    ), encoding="utf-8")

    with open(progress, "a", encoding="utf-8") as fh:
        def persist(v: Verdict) -> None:
            fh.write(json.dumps({"config_id": config.config_id, "verdict": v.to_dict()}, sort_keys=True) + "\n")
            fh.flush()

        guard = SpendGuard(config.cost_model, args.max_cost) if args.max_cost is not None else None
        verdicts = run_batch(backend, config, rubric, trajectories, catalog,
                             parallel=args.parallel, guard=guard,
                             completed=completed, on_verdict=persist)

    report = build_report(rubric, config, verdicts, trajectories)
    (run.out / "report.json").write_text(report_json(report), encoding="utf-8")
    (run.out / "report.md").write_text(render_markdown(report), encoding="utf-8")
    if args.policy_name:
        (run.out / "leaderboard.jsonl").write_text(export_leaderboard(report, args.policy_name), encoding="utf-8")
    print(headline(report))
    return 0


def _estimate_configs(args, trajectories, catalog) -> list[EvalConfig]:
    pricing = _pricing(args)
    configs = []
    for path in args.config or []:
        configs.append(load_config(path, pricing))
    if args.space:
        configs.extend(enumerate_configs(load_config_space(args.space), catalog, pricing))
    if not configs:
        configs.append(_resolve_config(argparse.Namespace(config=None, pricing=args.pricing), trajectories))
    return configs


def cmd_estimate(args) -> int:
    rubric, trajectories = _load_inputs(args)
    if not trajectories:
        raise ValidationError("manifest lists no trajectories")
    catalog = _catalog(args)
    rows = []
    for cfg in _estimate_configs(args, trajectories, catalog):
        projections = [project_budget(cfg.cost_model, cfg, rubric, t, catalog) for t in trajectories]
        N = len(projections)
        tokens = sum(p.tokens for p in projections)
        images = sum(p.images for p in projections)
        batch = sum(p.cost for p in projections)
        rows.append({
            "config_id": cfg.config_id,
            "views": ",".join(cfg.views),
            "strategy": cfg.strategy.value,
            "template_id": cfg.template_id,
            "frame_policy": str(cfg.frame_policy),
            "calls_per_trajectory": projections[0].calls,
            "tokens_per_trajectory": tokens / N,
            "images_per_trajectory": images / N,
            "token_cost_per_trajectory": cfg.cost_model.alpha * tokens / 1000 / N,
            "image_cost_per_trajectory": cfg.cost_model.beta * images / N,
            "cost_per_trajectory": batch / N,
            "batch_cost": batch,
            "trajectories": N,
            "currency": cfg.cost_model.currency_code,
        })
    header = f"{'config_id':<22} {'views':<14} {'strategy':<21} {'template':<18} {'frames':<12} " \
             f"{'tokens/traj':>11} {'images/traj':>11} {'cost/traj':>10} {'batch':>10}"
    print(header)
    for r in rows:
        print(f"{r['config_id']:<22} {r['views']:<14} {r['strategy']:<21} {r['template_id']:<18} "
              f"{r['frame_policy']:<12} {r['tokens_per_trajectory']:>11.1f} {r['images_per_trajectory']:>11.1f} "
              f"{r['cost_per_trajectory']:>10.6f} {r['batch_cost']:>10.4f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "estimate.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def _print_results(title: str, results) -> None:
    print(title)
    print(f"  {'config_id':<22} {'A_task':>8} {'mean cost':>12} {'latency':>9}  views / strategy / template")
    for r in results:
        c = r.config
        print(f"  {r.config_id:<22} {r.task_accuracy:>8.4f} {r.mean_cost:>12.6f} {r.mean_latency:>9.3f}  "
              f"{','.join(c.views)} / {c.strategy.value} / {c.template_id} / {c.frame_policy}")


def cmd_optimize(args) -> int:
    rubric, trajectories = _load_inputs(args)
    labeled = [t for t in trajectories if t.ground_truth is not None]
    if not labeled:
        raise ValidationError("optimize needs trajectories with ground truth")
    catalog = _catalog(args)
    space = load_config_space(args.space)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    backend = _make_backend(args, out, args.model or "")
    results = optimize(space, backend, rubric, labeled, catalog, _pricing(args), parallel=args.parallel)
    frontier = pareto_frontier(results)
    if out:
        (out / "config_results.json").write_text(
            json.dumps([r.to_dict() for r in results], indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _print_results("Pareto frontier (accuracy up, cost down):", frontier)
    try:
        best = best_under_budget(results, args.budget)
    except NoFeasibleConfig as exc:
        print(f"no feasible configuration under budget {args.budget:g}; "
              f"minimum feasible budget is {exc.min_cost:.6f}", file=sys.stderr)
        raise
    currency = best.config.cost_model.currency_code
    print(f"selected {best.config_id}: A_task={best.task_accuracy:.4f} "
          f"mean cost={format_money(best.mean_cost, currency)} per trajectory (budget {args.budget:g})")
    if out:
        (out / "selection.json").write_text(
            json.dumps({"budget": args.budget if math.isfinite(args.budget) else "inf",
                        "selected": best.to_dict(),
                        "frontier": [r.config_id for r in frontier]}, indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    return 0


# -- argument parsing --------------------------------------------------------


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rubric", required=True, help="rubric JSON file")
    p.add_argument("--manifest", required=True, help="trajectory manifest JSON file")
    p.add_argument("--template", action="append", help="extra prompt template JSON file (repeatable)")


def _add_backend(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("http", "mock", "replay"), default="mock")
    p.add_argument("--endpoint", default=os.environ.get(ENDPOINT_ENV), help=f"chat-completion URL (or ${ENDPOINT_ENV})")
    p.add_argument("--model", help="model id override")
    p.add_argument("--cache", help=f"verdict cache file (default OUT/{CACHE_FILE})")
    p.add_argument("--record", action="store_true", help="record live replies into the cache")
    p.add_argument("--seed", type=int, default=0, help="mock judge seed")
    p.add_argument("--epsilon", default="0", help="mock flip probability, one value or comma list per subgoal")
    p.add_argument("--mock-tokens-per-image", type=int, default=0)
    p.add_argument("--mock-latency", type=float, default=0.0)
    p.add_argument("--rps", type=float, default=None, help="HTTP requests per second limit")
    p.add_argument("--parallel", type=int, default=DEFAULT_PARALLEL)
    p.add_argument("--pricing", help="pricing JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stepeval", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"stepeval {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a rubric and trajectory manifest")
    _add_inputs(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="judge every trajectory and write a report")
    _add_inputs(p)
    _add_backend(p)
    p.add_argument("--run-file", help="JSON file whose keys supply defaults for these flags")
    p.add_argument("--config", help="EvalConfig JSON file")
    p.add_argument("--resolution", type=int, help="longest image edge sent to the judge")
    p.add_argument("--max-cost", type=float, default=None, help="abort before spending more than this")
    p.add_argument("--resume", action="store_true", help="reuse verdicts already written to OUT")
    p.add_argument("--policy-name", help="also write a leaderboard record for this policy")
    p.add_argument("--out", default="stepeval-out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("estimate", help="project judging cost without calling a backend")
    _add_inputs(p)
    p.add_argument("--config", action="append", help="EvalConfig JSON file (repeatable)")
    p.add_argument("--space", help="config-space JSON file")
    p.add_argument("--pricing", help="pricing JSON file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("optimize", help="search a config space on labeled trajectories")
    _add_inputs(p)
    _add_backend(p)
    p.add_argument("--space", required=True, help="config-space JSON file")
    p.add_argument("--budget", type=float, default=math.inf, help="max mean cost per trajectory ('inf' allowed)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)
    return parser


def _apply_run_file(parser: argparse.ArgumentParser, run_file: str) -> None:
    """Install the run file's keys as defaults of the ``run`` subcommand."""
    doc = json.loads(Path(run_file).read_text(encoding="utf-8"))
    base = Path(run_file).resolve().parent
    run_parser = next(
        a.choices["run"] for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    defaults = {}
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest in ("rubric", "manifest", "config", "pricing", "cache", "out") and isinstance(value, str):
            value = str(base / value)
        defaults[dest] = value
    for action in run_parser._actions:
        if action.dest in defaults:
            action.required = False
    run_parser.set_defaults(**defaults)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--run-file")
    known, _ = pre.parse_known_args(argv)
    if known.run_file:
        _apply_run_file(parser, known.run_file)
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except StepEvalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
