import itertools

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from slcglmb.assignment import association_cost_matrix, best_assignment, columns_to_mta, murty_k_best
from slcglmb.kernels import enumerate_injective, mta_log_scores


def all_assignments(C):
    n, N = C.shape
    out = []
    for cols in itertools.permutations(range(N), n):
        c = C[np.arange(n), cols].sum()
        if np.isfinite(c):
            out.append(c)
    return sorted(out)


@given(st.integers(1, 3), st.integers(0, 2), st.integers(0, 10_000), st.integers(1, 12))
def test_murty_costs_match_exhaustive_ranking(n, extra, seed, k):
    rng = np.random.default_rng(seed)
    C = rng.uniform(0, 5, size=(n, n + extra))
    C[rng.random(C.shape) < 0.2] = np.inf
    found = murty_k_best(C, k)
    expected = all_assignments(C)[:k]
    np.testing.assert_allclose([c for _, c in found], expected, atol=1e-12)
    sols = {tuple(cols) for cols, _ in found}
    assert len(sols) == len(found)


def test_infeasible_returns_nothing():
    C = np.full((2, 2), np.inf)
    assert best_assignment(C) is None
    assert murty_k_best(C, 3) == []


@given(st.integers(1, 3), st.integers(0, 3), st.integers(0, 10_000))
def test_ranked_associations_cover_enumeration(n, m, seed):
    table = np.random.default_rng(seed).normal(size=(n, m + 1))
    mtas = enumerate_injective(n, m)
    scores = mta_log_scores(table, mtas)
    found = murty_k_best(association_cost_matrix(table), len(mtas))
    got = {tuple(columns_to_mta(c, m)) for c, _ in found}
    assert got == {tuple(r) for r in mtas}
    best = max(scores)
    assert abs(-found[0][1] - best) < 1e-12
