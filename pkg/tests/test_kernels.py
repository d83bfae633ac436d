import itertools
from math import comb, factorial

import numpy as np
import pytest

from slcglmb import _kernels_py, kernels

try:
    from slcglmb import _kernels
except ImportError:  # extension not built
    _kernels = None

SIZES = [(n, m) for n in range(5) for m in range(5)]


def brute(n, m):
    rows = []
    for row in itertools.product(range(m + 1), repeat=n):
        nz = [v for v in row if v]
        if len(nz) == len(set(nz)):
            rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(len(rows), n)


@pytest.mark.parametrize("n,m", SIZES)
def test_fallback_matches_bruteforce(n, m):
    got = _kernels_py.enumerate_injective(n, m)
    np.testing.assert_array_equal(got, brute(n, m))
    assert len(got) == sum(comb(n, j) * comb(m, j) * factorial(j) for j in range(min(n, m) + 1))


@pytest.mark.skipif(_kernels is None, reason="compiled kernels unavailable")
@pytest.mark.parametrize("n,m", SIZES)
def test_compiled_matches_fallback(n, m):
    a = _kernels.enumerate_injective(n, m)
    b = _kernels_py.enumerate_injective(n, m)
    assert a.dtype == b.dtype
    np.testing.assert_array_equal(a, b)
    table = np.random.default_rng(n * 10 + m).normal(size=(n, m + 1))
    if m == 2:
        table[:, 0] = -np.inf  # impossible misses must propagate
    np.testing.assert_array_equal(_kernels.mta_log_scores(table, a), _kernels_py.mta_log_scores(table, b))


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
