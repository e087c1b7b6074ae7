"""Brute-force reference computations, written independently of the library."""

from __future__ import annotations

from fractions import Fraction


def column(vectors, k):
    return [v[k] for v in vectors]


def sr_oracle(vectors, n):
    N = len(vectors)
    per = [float(Fraction(sum(1 for x in column(vectors, k) if x == 1), N)) for k in range(n)]
    overall = float(Fraction(sum(1 for v in vectors if min(v) == 1), N))
    return per, overall


def accuracy_oracle(pred, truth):
    N, n = len(truth), len(truth[0])
    return [float(Fraction(sum(1 for j in range(N) if pred[j][k] == truth[j][k]), N)) for k in range(n)]


def task_accuracy_oracle(pred, truth):
    N, n = len(truth), len(truth[0])
    hits = 0
    for j in range(N):
        ok = True
        for k in range(n):
            ok = ok and pred[j][k] == truth[j][k]
        hits += ok
    return float(Fraction(hits, N))


def confusion_oracle(pred, truth):
    n = len(truth[0])
    out = []
    for k in range(n):
        pairs = list(zip(column(pred, k), column(truth, k)))
        out.append({
            "tp": pairs.count((1, 1)),
            "fp": pairs.count((1, 0)),
            "fn": pairs.count((0, 1)),
            "tn": pairs.count((0, 0)),
        })
    return out


def dominated(a, b):
    """True if b dominates a: b at least as accurate and at most as costly, one strictly."""
    return (b[0] >= a[0] and b[1] <= a[1]) and (b[0] > a[0] or b[1] < a[1])


def frontier_oracle(points):
    """Indices of points (accuracy, cost) not dominated by any other point."""
    return {i for i, p in enumerate(points) if not any(dominated(p, q) for j, q in enumerate(points) if j != i)}
