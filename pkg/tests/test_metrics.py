import random

import pytest
from hypothesis import given, strategies as st

from stepeval.errors import EmptyInput, LengthMismatch
from stepeval.metrics import (
    confusion_matrices,
    diagnostics,
    per_subgoal_accuracy,
    success_summary,
    task_eval_accuracy,
)

from oracles import accuracy_oracle, confusion_oracle, sr_oracle, task_accuracy_oracle


def pancake_vectors():
    return [(1, 1, 1)] * 17 + [(1, 1, 0)] * 83


def test_pancake_summary():
    s = success_summary(pancake_vectors(), 3)
    assert s.per_subgoal_sr == (1.0, 1.0, 0.17)
    assert s.overall_sr == 0.17
    assert s.trajectory_count == 100
    assert s.per_subgoal_successes == (100, 100, 17)


def test_success_summary_small_cases():
    s = success_summary([(0, 0, 0)], 3)
    assert s.per_subgoal_sr == (0.0, 0.0, 0.0) and s.overall_sr == 0.0
    s = success_summary([(1, 1), (1, 0)], 2)
    assert s.per_subgoal_sr == (1.0, 0.5) and s.overall_sr == 0.5


def test_success_summary_errors():
    with pytest.raises(EmptyInput):
        success_summary([], 2)
    with pytest.raises(LengthMismatch):
        success_summary([(1, 1), (1,)], 2)


def test_accuracy_examples():
    assert per_subgoal_accuracy([(1,), (0,)], [(1,), (1,)]) == [0.5]
    truth = [(1, 0, 1), (0, 0, 1)]
    assert per_subgoal_accuracy(truth, truth) == [1.0, 1.0, 1.0]
    flipped = [tuple(1 - x for x in v) for v in truth]
    assert per_subgoal_accuracy(flipped, truth) == [0.0, 0.0, 0.0]


def test_task_accuracy_examples():
    truth = [(1, 1), (1, 0)]
    assert task_eval_accuracy([(1, 1), (1, 1)], truth) == 0.5
    assert task_eval_accuracy(truth, truth) == 1.0
    truth3 = [(1, 1, 1), (0, 1, 0), (1, 0, 0)]
    pred3 = [(1, 1, 1), (1, 1, 0), (1, 1, 0)]  # misses on subgoal 1 and subgoal 2
    a_task = task_eval_accuracy(pred3, truth3)
    assert a_task == pytest.approx(1 / 3)
    assert all(a_task < a for a in per_subgoal_accuracy(pred3, truth3))


def test_confusion_examples():
    pred = [(1,), (1,), (0,), (0,)]
    truth = [(1,), (0,), (1,), (0,)]
    (c,) = confusion_matrices(pred, truth)
    assert (c.tp, c.fp, c.fn, c.tn) == (1, 1, 1, 1)
    perfect = confusion_matrices(truth, truth)
    assert all(m.fp == 0 and m.fn == 0 for m in perfect)


def test_pair_errors():
    with pytest.raises(EmptyInput):
        per_subgoal_accuracy([], [])
    with pytest.raises(LengthMismatch):
        task_eval_accuracy([(1,)], [(1,), (0,)])
    with pytest.raises(LengthMismatch):
        confusion_matrices([(1, 0)], [(1,)])


def dataset(draw_n, draw_N, rng):
    n, N = draw_n, draw_N
    truth = [tuple(rng.randint(0, 1) for _ in range(n)) for _ in range(N)]
    pred = [tuple(rng.randint(0, 1) for _ in range(n)) for _ in range(N)]
    return pred, truth


@given(st.integers(1, 5), st.integers(1, 20), st.integers(0, 2**32))
def test_oracle_equivalence_and_structure(n, N, seed):
    pred, truth = dataset(n, N, random.Random(seed))
    per, overall = sr_oracle(truth, n)
    s = success_summary(truth, n)
    assert list(s.per_subgoal_sr) == per and s.overall_sr == overall
    assert s.overall_sr <= min(s.per_subgoal_sr)
    acc = per_subgoal_accuracy(pred, truth)
    assert acc == accuracy_oracle(pred, truth)
    assert task_eval_accuracy(pred, truth) == task_accuracy_oracle(pred, truth)
    cms = confusion_matrices(pred, truth)
    assert [c.to_dict() for c in cms] == confusion_oracle(pred, truth)
    for c, a in zip(cms, acc):
        assert c.total == N
        assert (c.tp + c.tn) / N == a
    d = diagnostics(pred, truth)
    assert d.task_eval_accuracy <= min(d.per_subgoal_accuracy)


@given(st.integers(1, 5), st.integers(2, 20), st.integers(0, 2**32))
def test_permutation_invariance(n, N, seed):
    rng = random.Random(seed)
    pred, truth = dataset(n, N, rng)
    order = list(range(N))
    rng.shuffle(order)
    p2 = [pred[i] for i in order]
    t2 = [truth[i] for i in order]
    assert diagnostics(p2, t2) == diagnostics(pred, truth)
    assert success_summary(p2, n) == success_summary(pred, n)
