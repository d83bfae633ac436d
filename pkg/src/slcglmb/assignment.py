"""Murty's k-best ranked assignment on top of scipy's Hungarian solver."""
from __future__ import annotations

import heapq
from itertools import count

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["best_assignment", "murty_k_best", "association_cost_matrix"]


def best_assignment(cost):
    """Minimum-cost assignment of every row; ``None`` when no finite one exists."""
    cost = np.asarray(cost, dtype=float)
    if cost.shape[0] == 0:
        return np.zeros(0, dtype=np.int64), 0.0
    try:
        rows, cols = linear_sum_assignment(cost)
    except ValueError:
        return None
    total = cost[rows, cols].sum()
    if not np.isfinite(total):
        return None
    out = np.empty(cost.shape[0], dtype=np.int64)
    out[rows] = cols
    return out, float(total)


def murty_k_best(cost, k):
    """The ``k`` cheapest row-to-column assignments, in increasing cost.

    ``cost`` is ``(n, N)`` with ``n <= N``; ``inf`` marks forbidden pairs.
    Returns a list of ``(columns, total_cost)``.
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    first = best_assignment(cost)
    if first is None or k <= 0:
        return []
    tie = count()
    heap = [(first[1], next(tie), first[0], cost)]
    found = []
    while heap and len(found) < k:
        total, _, cols, C = heapq.heappop(heap)
        found.append((cols, total))
        # partition the remaining solution space of C around `cols`
        fixed = C.copy()
        for i in range(n):
            sub = fixed.copy()
            sub[i, cols[i]] = np.inf
            res = best_assignment(sub)
            if res is not None:
                heapq.heappush(heap, (res[1], next(tie), res[0], sub))
            # force (i, cols[i]) for the following subproblems
            keep = fixed[i, cols[i]]
            fixed[i, :] = np.inf
            fixed[:, cols[i]] = np.inf
            fixed[i, cols[i]] = keep
    return found


def association_cost_matrix(log_table):
    """Cost matrix for labels x (measurements + per-label missed slots).

    ``log_table[i, 0]`` is the missed-detection log score of label ``i`` and
    ``log_table[i, j]`` its score for measurement ``j``.  Column ``j - 1``
    stands for measurement ``j``; column ``m + i`` is label ``i``'s miss slot.
    """
    log_table = np.asarray(log_table, dtype=float)
    n, m1 = log_table.shape
    m = m1 - 1
    C = np.full((n, m + n), np.inf)
    with np.errstate(invalid="ignore"):
        C[:, :m] = -log_table[:, 1:]
        C[np.arange(n), m + np.arange(n)] = -log_table[:, 0]
    return C


def columns_to_mta(columns, m):
    """Map assignment columns back to measurement indices (0 = missed)."""
    columns = np.asarray(columns)
    return np.where(columns < m, columns + 1, 0)
