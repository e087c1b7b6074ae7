"""Batch judging over many trajectories with bounded concurrency."""

from __future__ import annotations

import logging
import threading
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .config import EvalConfig
from .cost import SpendGuard
from .judge import JudgeBackend, Verdict, judge_trajectory
from .prompt import PromptTemplate
from .rubric import SubgoalRubric
from .trajectory import Trajectory

logger = logging.getLogger(__name__)

DEFAULT_PARALLEL = 4


def run_batch(
    backend: JudgeBackend,
    config: EvalConfig,
    rubric: SubgoalRubric,
    trajectories: Sequence[Trajectory],
    catalog: dict[str, PromptTemplate],
    parallel: int = DEFAULT_PARALLEL,
    guard: Optional[SpendGuard] = None,
    completed: Optional[Mapping[str, Verdict]] = None,
    on_verdict: Optional[Callable[[Verdict], None]] = None,
) -> list[Verdict]:
    """Judge every trajectory and return verdicts sorted by trajectory id.

    Trajectories already present in ``completed`` are not judged again.
    ``on_verdict`` runs once per fresh verdict, serialized under a lock, so it
    can append to a progress file.
    """
    completed = dict(completed or {})
    todo = [t for t in trajectories if t.id not in completed]
    if completed:
        logger.info("resuming: %d of %d trajectories already judged", len(trajectories) - len(todo), len(trajectories))
    results: dict[str, Verdict] = {t.id: completed[t.id] for t in trajectories if t.id in completed}
    lock = threading.Lock()

    def work(traj: Trajectory) -> None:
        verdict = judge_trajectory(backend, config, rubric, traj, catalog, guard)
        with lock:
            results[traj.id] = verdict
            if on_verdict is not None:
                on_verdict(verdict)

    if parallel <= 1:
        for traj in todo:
            work(traj)
    else:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(work, t) for t in todo]
            done, pending = wait(futures, return_when=FIRST_EXCEPTION)
            failed = [f for f in futures if f.done() and f.exception() is not None]
            if failed:
                for f in pending:
                    f.cancel()
                raise failed[0].exception()
    return [results[k] for k in sorted(results)]


def sort_verdicts(verdicts: Iterable[Verdict]) -> list[Verdict]:
    return sorted(verdicts, key=lambda v: v.trajectory_id)
