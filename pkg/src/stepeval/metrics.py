"""Subgoal success rates and judge-accuracy diagnostics.

All rates are exact counts divided by the trajectory count; counts are kept
alongside so reports never lose information to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyInput, LengthMismatch

BitVector = Sequence[int]


@dataclass(frozen=True)
class SuccessSummary:
    per_subgoal_sr: tuple[float, ...]
    overall_sr: float
    trajectory_count: int
    per_subgoal_successes: tuple[int, ...]
    overall_successes: int

    def to_dict(self) -> dict:
        return {
            "per_subgoal_sr": list(self.per_subgoal_sr),
            "overall_sr": self.overall_sr,
            "trajectory_count": self.trajectory_count,
            "per_subgoal_successes": list(self.per_subgoal_successes),
            "overall_successes": self.overall_successes,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SuccessSummary":
        return cls(
            per_subgoal_sr=tuple(doc["per_subgoal_sr"]),
            overall_sr=doc["overall_sr"],
            trajectory_count=doc["trajectory_count"],
            per_subgoal_successes=tuple(doc["per_subgoal_successes"]),
            overall_successes=doc["overall_successes"],
        )


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(frozen=True)
class DiagnosticsSummary:
    per_subgoal_accuracy: tuple[float, ...]
    task_eval_accuracy: float
    confusions: tuple[ConfusionMatrix, ...]
    mean_subgoal_accuracy: float
    labeled_count: int
    exact_matches: int

    def to_dict(self) -> dict:
        return {
            "per_subgoal_accuracy": list(self.per_subgoal_accuracy),
            "task_eval_accuracy": self.task_eval_accuracy,
            "confusions": [c.to_dict() for c in self.confusions],
            "mean_subgoal_accuracy": self.mean_subgoal_accuracy,
            "labeled_count": self.labeled_count,
            "exact_matches": self.exact_matches,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DiagnosticsSummary":
        return cls(
            per_subgoal_accuracy=tuple(doc["per_subgoal_accuracy"]),
            task_eval_accuracy=doc["task_eval_accuracy"],
            confusions=tuple(ConfusionMatrix(**c) for c in doc["confusions"]),
            mean_subgoal_accuracy=doc["mean_subgoal_accuracy"],
            labeled_count=doc["labeled_count"],
            exact_matches=doc["exact_matches"],
        )


def _check_vectors(vectors: Sequence[BitVector], n: int) -> None:
    if not vectors:
        raise EmptyInput("vector list")
    for v in vectors:
        if len(v) != n:
            raise LengthMismatch(n, len(v))


def _check_pair(predicted: Sequence[BitVector], truth: Sequence[BitVector]) -> int:
    if not predicted or not truth:
        raise EmptyInput("prediction or truth list")
    if len(predicted) != len(truth):
        raise LengthMismatch(len(truth), len(predicted), "prediction list")
    n = len(truth[0])
    _check_vectors(truth, n)
    _check_vectors(predicted, n)
    return n


def success_summary(vectors: Sequence[BitVector], n: int) -> SuccessSummary:
    _check_vectors(vectors, n)
    N = len(vectors)
    counts = [0] * n
    all_ok = 0
    for v in vectors:
        for k in range(n):
            counts[k] += v[k]
        if all(v):
            all_ok += 1
    return SuccessSummary(
        per_subgoal_sr=tuple(c / N for c in counts),
        overall_sr=all_ok / N,
        trajectory_count=N,
        per_subgoal_successes=tuple(counts),
        overall_successes=all_ok,
    )


def confusion_matrices(predicted: Sequence[BitVector], truth: Sequence[BitVector]) -> list[ConfusionMatrix]:
    n = _check_pair(predicted, truth)
    cells = [[0, 0, 0, 0] for _ in range(n)]  # tp, fp, fn, tn
    for yhat, y in zip(predicted, truth):
        for k in range(n):
            # index: (pred=1,true=1)->0, (1,0)->1, (0,1)->2, (0,0)->3
            cells[k][(1 - yhat[k]) * 2 + (1 - y[k])] += 1
    return [ConfusionMatrix(*c) for c in cells]


def per_subgoal_accuracy(predicted: Sequence[BitVector], truth: Sequence[BitVector]) -> list[float]:
    n = _check_pair(predicted, truth)
    N = len(truth)
    hits = [0] * n
    for yhat, y in zip(predicted, truth):
        for k in range(n):
            hits[k] += yhat[k] == y[k]
    return [h / N for h in hits]


def task_eval_accuracy(predicted: Sequence[BitVector], truth: Sequence[BitVector]) -> float:
    _check_pair(predicted, truth)
    exact = sum(tuple(a) == tuple(b) for a, b in zip(predicted, truth))
    return exact / len(truth)


def diagnostics(predicted: Sequence[BitVector], truth: Sequence[BitVector]) -> DiagnosticsSummary:
    confusions = confusion_matrices(predicted, truth)
    N = len(truth)
    acc = per_subgoal_accuracy(predicted, truth)
    exact = sum(tuple(a) == tuple(b) for a, b in zip(predicted, truth))
    correct = sum(c.tp + c.tn for c in confusions)
    return DiagnosticsSummary(
        per_subgoal_accuracy=tuple(acc),
        task_eval_accuracy=exact / N,
        confusions=tuple(confusions),
        mean_subgoal_accuracy=correct / (N * len(confusions)),
        labeled_count=N,
        exact_matches=exact,
    )
