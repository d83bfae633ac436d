import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slcglmb.errors import DuplicateLabel, UnknownLabel
from slcglmb.labels import (
    Label,
    LabeledState,
    label_set,
    labels_of,
    lmb_weight,
    split_survivor_birth,
    subsets,
    validate_lfs,
)

a, b, c = Label(0, 1), Label(1, 1), Label(1, 2)


def test_label_order_is_lexicographic():
    assert sorted([Label(2, 1), Label(1, 5), Label(1, 2)]) == [Label(1, 2), Label(1, 5), Label(2, 1)]
    assert Label.parse(str(Label(3, 7))) == Label(3, 7)


def test_label_rejects_bad_fields():
    with pytest.raises(ValueError):
        Label(-1, 1)
    with pytest.raises(ValueError):
        Label(0, 0)


def test_empty_lfs_is_valid():
    X = validate_lfs([])
    assert len(X) == 0 and labels_of(X) == ()


def test_duplicate_label_rejected():
    with pytest.raises(DuplicateLabel):
        validate_lfs([LabeledState((1.0,), a), LabeledState((2.0,), a)])


def test_same_state_distinct_labels_is_valid():
    X = validate_lfs([LabeledState((1.0,), a), LabeledState((1.0,), b)])
    assert labels_of(X) == (a, b)


def test_labels_of_examples():
    assert labels_of(validate_lfs([LabeledState((0.0,), a)])) == (a,)
    X = validate_lfs([LabeledState((2.0,), b), LabeledState((0.0,), a)])
    assert labels_of(X) == (a, b)
    assert np.array_equal(X.state(b), [2.0])


def test_split_examples():
    empty = validate_lfs([])
    assert split_survivor_birth(empty, {a}, {b}) == (empty, empty)
    X = validate_lfs([LabeledState((0.0,), a), LabeledState((1.0,), b)])
    minus, plus = split_survivor_birth(X, {a}, {b})
    assert labels_of(minus) == (a,) and labels_of(plus) == (b,)
    with pytest.raises(UnknownLabel):
        split_survivor_birth(validate_lfs([LabeledState((0.0,), c)]), {a}, {b})


def test_lmb_weight_examples():
    assert lmb_weight([a], {a: 1.0}, [a]) == 1.0
    assert lmb_weight([a, b], {a: 0.5, b: 0.5}, [a]) == pytest.approx(0.25, abs=1e-15)
    assert lmb_weight([a, b], {a: 0.5, b: 0.5}, [c]) == 0.0


labels_strategy = st.lists(
    st.builds(Label, st.integers(0, 3), st.integers(1, 4)), min_size=0, max_size=6, unique=True
)


@given(labels_strategy, st.data())
def test_lmb_weights_sum_to_one(J, data):
    q = {l: data.draw(st.floats(0, 1)) for l in J}
    total = sum(lmb_weight(J, q, L) for L in subsets(J))
    assert abs(total - 1.0) < 1e-12


@given(labels_strategy)
def test_certain_existence_collapses_to_delta(J):
    q = {l: 1.0 for l in J}
    for L in subsets(J):
        assert lmb_weight(J, q, L) == (1.0 if label_set(L) == label_set(J) else 0.0)


@given(labels_strategy, st.data())
def test_split_is_partition(J, data):
    X = validate_lfs(LabeledState((float(i),), l) for i, l in enumerate(J))
    persist = set(data.draw(st.lists(st.sampled_from(J), unique=True))) if J else set()
    birth = set(J) - persist
    minus, plus = split_survivor_birth(X, persist, birth)
    assert set(labels_of(minus)).isdisjoint(labels_of(plus))
    assert set(minus) | set(plus) == set(X)
    assert len(labels_of(X)) == len(X)


def test_subsets_are_canonical():
    got = list(subsets([b, a]))
    assert got[0] == () and len(got) == 4
    assert all(L == tuple(sorted(L)) for L in got)
    assert set(got) == {L for n in range(3) for L in itertools.combinations((a, b), n)}
