import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slcglmb.correlation import (
    CorrelationReport,
    _fd_table,
    correlation_report,
    default_probe_grid,
    factorial_covariance_pair,
    fcd_table,
    first_moment_density,
    independence_gap,
    marginalize,
)
from slcglmb.errors import UnsupportedDensity
from slcglmb.labels import Label, LabeledState
from slcglmb.slc import SlcBirthModel, SlcDensity, slc_birth_density

from conftest import L1, L2, L3, gauss


def swapped(alpha=(0.5, 0.5), q=(1.0, 1.0)):
    return slc_birth_density(
        SlcBirthModel(
            {L1: q[0], L2: q[1]},
            list(alpha),
            [{L1: gauss(-2.0, 0.5), L2: gauss(2.0, 0.5)}, {L1: gauss(2.0, 0.5), L2: gauss(-2.0, 0.5)}],
        )
    )


def lmb(q=(0.6, 0.7)):
    return slc_birth_density(SlcBirthModel({L1: q[0], L2: q[1]}, [1.0], [{L1: gauss(-1.0, 1.0), L2: gauss(1.5, 2.0)}]))


def st_(x, l):
    return LabeledState((x,), l)


def test_first_moment_examples():
    d = slc_birth_density(SlcBirthModel({L1: 0.3}, [1.0], [{L1: gauss(0.5, 2.0)}]))
    assert first_moment_density(d, st_(0.0, L2)) == 0.0
    assert first_moment_density(d, st_(1.2, L1)) == pytest.approx(0.3 * gauss(0.5, 2.0).pdf(np.array([1.2]))[0], rel=1e-14)


def test_first_moment_integrates_to_expected_cardinality():
    d = swapped(q=(0.6, 0.8))
    x = np.linspace(-10, 10, 801)
    dx = x[1] - x[0]
    total = sum(first_moment_density(d, st_(v, l)) for v in x for l in (L1, L2)) * dx
    assert total == pytest.approx(d.expected_cardinality(), abs=1e-10)


def test_lmb_like_pair_is_zero():
    d = lmb(q=(1.0, 1.0))
    xs = np.linspace(-4, 4, 9)
    assert np.all(fcd_table(d, L1, L2, xs, xs) == 0.0)


def test_mismatched_and_duplicate_labels_are_zero():
    d = swapped()
    assert factorial_covariance_pair(d, st_(-2.0, L1), st_(2.0, L3)) == 0.0
    assert factorial_covariance_pair(d, st_(-2.0, L1), st_(2.0, L1)) == 0.0


def test_sign_pattern_of_swapped_hypotheses():
    d = swapped()
    assert factorial_covariance_pair(d, st_(-2.0, L1), st_(2.0, L2)) > 0
    assert factorial_covariance_pair(d, st_(2.0, L1), st_(-2.0, L2)) > 0
    assert factorial_covariance_pair(d, st_(-2.0, L1), st_(-2.0, L2)) < 0
    assert factorial_covariance_pair(d, st_(2.0, L1), st_(2.0, L2)) < 0


def test_closed_form_matches_finite_differences():
    d = swapped(alpha=(0.3, 0.7))
    xs = np.linspace(-4.0, 4.0, 9)
    cf = fcd_table(d, L1, L2, xs, xs)
    for eps in (1e-4, 1e-5):
        fd = _fd_table(d, L1, L2, xs, xs, eps=eps)
        assert np.max(np.abs(fd - cf)) <= 1e-4 * np.max(np.abs(cf))


def test_symmetry_under_swap():
    d = swapped(alpha=(0.2, 0.8))
    for a, b in [(-2.0, 1.0), (0.5, 3.0), (-1.0, -2.5)]:
        assert factorial_covariance_pair(d, st_(a, L1), st_(b, L2)) == pytest.approx(
            factorial_covariance_pair(d, st_(b, L2), st_(a, L1)), abs=1e-16
        )


def test_unsupported_density():
    with pytest.raises(UnsupportedDensity):
        factorial_covariance_pair(lmb(), st_(0.0, L1), st_(0.0, L2))


def test_independence_gap_examples():
    grid = np.linspace(-6, 6, 21)
    assert independence_gap(lmb(), (L1, L2), grid) <= 1e-9
    assert independence_gap(swapped(alpha=(1.0, 0.0)), (L1, L2), grid) <= 1e-12
    assert independence_gap(swapped(), (L1, L2), grid) > 1e-3


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=2), st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_single_hypothesis_is_independent(means, v1, v2):
    d = slc_birth_density(SlcBirthModel({L1: 1.0, L2: 1.0}, [1.0], [{L1: gauss(means[0], v1), L2: gauss(means[1], v2)}]))
    assert independence_gap(d, (L1, L2)) <= 1e-12


def test_default_probe_grid_spans_four_sigma():
    g = default_probe_grid(swapped(), L1)
    assert len(g) == 21
    assert g[0, 0] == pytest.approx(-2.0 - 4 * np.sqrt(0.5))
    assert g[-1, 0] == pytest.approx(2.0 + 4 * np.sqrt(0.5))


def test_report_json_round_trip():
    rep = correlation_report(swapped(), st_(-2.0, L1), st_(2.0, L2), np.linspace(-4.0, 4.0, 21))
    data = json.loads(rep.to_json())
    assert CorrelationReport.from_dict(data) == rep
    assert rep.fcd_value > 0 and rep.independence_gap >= rep.fcd_value


def test_marginalize_projects_components():
    o = ()
    d = SlcDensity({(L1,): 1.0}, {(L1,): {o: 1.0}}, {(o, L1): gauss([1.0, 2.0], [[2.0, 0.3], [0.3, 0.5]])})
    m = marginalize(d, 1)
    s = m.spatial[(o, L1)]
    assert s.means[0, 0] == 2.0 and s.covs[0, 0, 0] == 0.5
