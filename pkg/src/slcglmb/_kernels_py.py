"""Pure-Python/numpy versions of the association kernels.

Used when the compiled ``_kernels`` extension is unavailable or when
``SLCGLMB_PURE_PYTHON=1`` is set.  Output order and dtype match the
compiled versions exactly.
"""
from math import comb, factorial

import numpy as np


def count_injective(n, m):
    return sum(comb(n, j) * comb(m, j) * factorial(j) for j in range(min(n, m) + 1))


def enumerate_injective(n, m):
    """All maps {0..n-1} -> {0..m} injective on nonzero values, lexicographic order."""
    out = np.zeros((count_injective(n, m), n), dtype=np.int64)
    row = [0] * n
    used = [False] * (m + 1)
    k = 0

    def rec(pos):
        nonlocal k
        if pos == n:
            out[k] = row
            k += 1
            return
        for v in range(m + 1):
            if v and used[v]:
                continue
            row[pos] = v
            if v:
                used[v] = True
            rec(pos + 1)
            if v:
                used[v] = False

    rec(0)
    return out


def mta_log_scores(table, mtas):
    """Sum ``table[i, mtas[r, i]]`` over ``i`` for each row ``r``."""
    table = np.asarray(table, dtype=np.float64)
    mtas = np.asarray(mtas, dtype=np.int64)
    if mtas.shape[1] == 0:
        return np.zeros(mtas.shape[0])
    return table[np.arange(table.shape[0])[None, :], mtas].sum(axis=1)
