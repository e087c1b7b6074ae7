"""Evaluation report assembly, Markdown rendering and leaderboard export."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import EvalConfig
from .cost import CostRecord, CostSummary, batch_cost_summary, cost_record, format_duration, format_money
from .errors import EmptyInput, UnresolvedTrajectory
from .judge import Verdict
from .metrics import DiagnosticsSummary, SuccessSummary, diagnostics, success_summary
from .rubric import SubgoalRubric, validate_outcome_vector
from .trajectory import Trajectory


@dataclass(frozen=True)
class EvalReport:
    rubric: SubgoalRubric
    config: EvalConfig
    predicted_summary: SuccessSummary
    ground_truth_summary: Optional[SuccessSummary]
    diagnostics: Optional[DiagnosticsSummary]
    cost_summary: CostSummary
    cost_records: tuple[CostRecord, ...]
    verdicts: tuple[Verdict, ...]
    excluded_from_diagnostics: int
    created_at: str
    tool_version: str = __version__

    def to_dict(self, include_timestamp: bool = True) -> dict:
        doc = {
            "rubric": self.rubric.to_dict(),
            "config": self.config.to_dict(),
            "predicted_summary": self.predicted_summary.to_dict(),
            "ground_truth_summary": self.ground_truth_summary.to_dict() if self.ground_truth_summary else None,
            "diagnostics": self.diagnostics.to_dict() if self.diagnostics else None,
            "cost_summary": self.cost_summary.to_dict(),
            "cost_records": [r.to_dict() for r in self.cost_records],
            "verdicts": [v.to_dict() for v in self.verdicts],
            "excluded_from_diagnostics": self.excluded_from_diagnostics,
            "created_at": self.created_at,
            "tool_version": self.tool_version,
        }
        if not include_timestamp:
            del doc["created_at"]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        gts = doc.get("ground_truth_summary")
        diag = doc.get("diagnostics")
        return cls(
            rubric=SubgoalRubric.from_dict(doc["rubric"]),
            config=EvalConfig.from_dict(doc["config"]),
            predicted_summary=SuccessSummary.from_dict(doc["predicted_summary"]),
            ground_truth_summary=SuccessSummary.from_dict(gts) if gts else None,
            diagnostics=DiagnosticsSummary.from_dict(diag) if diag else None,
            cost_summary=CostSummary.from_dict(doc["cost_summary"]),
            cost_records=tuple(CostRecord.from_dict(r) for r in doc["cost_records"]),
            verdicts=tuple(Verdict.from_dict(v) for v in doc["verdicts"]),
            excluded_from_diagnostics=doc["excluded_from_diagnostics"],
            created_at=doc.get("created_at", ""),
            tool_version=doc["tool_version"],
        )


def build_report(rubric: SubgoalRubric, config: EvalConfig, verdicts: Sequence[Verdict],
                 trajectories: Sequence[Trajectory], created_at: Optional[str] = None) -> EvalReport:
    if not verdicts:
        raise EmptyInput("verdict list")
    by_id = {t.id: t for t in trajectories}
    verdicts = sorted(verdicts, key=lambda v: v.trajectory_id)
    for v in verdicts:
        if v.trajectory_id not in by_id:
            raise UnresolvedTrajectory(v.trajectory_id)
        validate_outcome_vector(rubric, v.predictions)

    predicted = success_summary([v.predictions for v in verdicts], rubric.n)
    labeled = [v for v in verdicts if by_id[v.trajectory_id].ground_truth is not None]
    gt_summary = diag = None
    if labeled:
        truth = [by_id[v.trajectory_id].ground_truth for v in labeled]
        gt_summary = success_summary(truth, rubric.n)
        diag = diagnostics([v.predictions for v in labeled], truth)

    records = tuple(
        cost_record(config.cost_model, v.trajectory_id, v.prompt_tokens, v.image_count,
                    v.latency, v.token_source, v.completion_tokens)
        for v in verdicts
    )
    return EvalReport(
        rubric=rubric,
        config=config,
        predicted_summary=predicted,
        ground_truth_summary=gt_summary,
        diagnostics=diag,
        cost_summary=batch_cost_summary(records, config.cost_model.currency_code),
        cost_records=records,
        verdicts=tuple(verdicts),
        excluded_from_diagnostics=len(verdicts) - len(labeled),
        created_at=created_at or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def report_json(report: EvalReport, include_timestamp: bool = True) -> str:
    return json.dumps(report.to_dict(include_timestamp), sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def write_report_json(report: EvalReport, path) -> None:
    Path(path).write_text(report_json(report), encoding="utf-8")


def load_report(path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _pct(x: float) -> str:
    return f"{100 * x:.2f}%"


def headline(report: EvalReport) -> str:
    cfg = report.config
    views = cfg.views
    view_text = f"single-view ({views[0]})" if len(views) == 1 else f"multi-view ({', '.join(views)})"
    cs = report.cost_summary
    text = (
        f"Using model {cfg.model_id} with {view_text} input, evaluating "
        f"{report.predicted_summary.trajectory_count} trajectories cost "
        f"{format_money(cs.total_cost, cs.currency_code)} and took {format_duration(cs.total_latency)}"
    )
    if report.diagnostics is not None:
        text += f", achieving {_pct(report.diagnostics.mean_subgoal_accuracy)} subgoal classification accuracy"
    return text + "."


def render_markdown(report: EvalReport) -> str:
    r = report
    ps = r.predicted_summary
    N = ps.trajectory_count
    lines = [
        f"# StepEval report: {r.rubric.task_name}",
        "",
        headline(r),
        "",
        f"- config: `{r.config.config_id}` (strategy {r.config.strategy.value}, template "
        f"{r.config.template_id}, frames {r.config.frame_policy})",
        f"- tool version: {r.tool_version}",
        "",
        "## Subgoal success rates",
        "",
    ]
    gt = r.ground_truth_summary
    if gt is not None:
        lines += ["| k | subgoal | predicted SR | predicted count | ground-truth SR | ground-truth count |",
                  "|---|---|---|---|---|---|"]
    else:
        lines += ["| k | subgoal | predicted SR | predicted count |", "|---|---|---|---|"]
    for sg in r.rubric.subgoals:
        k = sg.index - 1
        row = f"| {sg.index} | {sg.name} | {_pct(ps.per_subgoal_sr[k])} | {ps.per_subgoal_successes[k]}/{N} |"
        if gt is not None:
            row += f" {_pct(gt.per_subgoal_sr[k])} | {gt.per_subgoal_successes[k]}/{gt.trajectory_count} |"
        lines.append(row)
    lines += ["", f"Overall task success (all subgoals): {_pct(ps.overall_sr)} ({ps.overall_successes}/{N})"]
    if gt is not None:
        lines.append(f"Ground-truth overall task success: {_pct(gt.overall_sr)} "
                     f"({gt.overall_successes}/{gt.trajectory_count})")

    d = r.diagnostics
    lines += ["", "## Judge accuracy", ""]
    if d is None:
        lines.append(f"No ground-truth labels; {r.excluded_from_diagnostics} trajectories excluded from diagnostics.")
    else:
        lines += [
            f"Labeled trajectories: {d.labeled_count} (excluded: {r.excluded_from_diagnostics})",
            f"Task evaluation accuracy (exact match): {_pct(d.task_eval_accuracy)} ({d.exact_matches}/{d.labeled_count})",
            f"Mean subgoal accuracy: {_pct(d.mean_subgoal_accuracy)}",
            "",
            "| k | subgoal | accuracy | TP | FP | FN | TN |",
            "|---|---|---|---|---|---|---|",
        ]
        for sg, acc, c in zip(r.rubric.subgoals, d.per_subgoal_accuracy, d.confusions):
            lines.append(f"| {sg.index} | {sg.name} | {_pct(acc)} | {c.tp} | {c.fp} | {c.fn} | {c.tn} |")

    cs = r.cost_summary
    lines += [
        "",
        "## Cost and latency",
        "",
        "| metric | total | mean per trajectory |",
        "|---|---|---|",
        f"| cost ({cs.currency_code}) | {cs.total_cost:.4f} | {cs.mean_cost:.4f} |",
        f"| latency (s) | {cs.total_latency:.4f} | {cs.mean_latency:.4f} |",
        f"| prompt tokens | {cs.total_tokens} | |",
        f"| images | {cs.total_images} | |",
        f"| completion tokens (unpriced) | {cs.total_completion_tokens} | |",
        "",
    ]
    return "\n".join(lines)


def export_leaderboard(report: EvalReport, policy_name: str) -> str:
    """One newline-terminated JSON record for (policy, task); no timestamp."""
    ps = report.predicted_summary
    record = {
        "policy_name": policy_name,
        "task_name": report.rubric.task_name,
        "n": report.rubric.n,
        "subgoal_names": report.rubric.names,
        "per_subgoal_sr": list(ps.per_subgoal_sr),
        "overall_sr": ps.overall_sr,
        "N": ps.trajectory_count,
        "model_id": report.config.model_id,
        "config_id": report.config.config_id,
        "tool_version": report.tool_version,
    }
    return json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n"
