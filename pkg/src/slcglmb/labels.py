"""Labels, labeled states and labeled finite sets.

Label sets are carried around as sorted tuples of :class:`Label`.  Sorted
tuples are hashable, compare lexicographically and make subset enumeration
deterministic, which is what every weight table in the package keys on.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DuplicateLabel, UnknownLabel

__all__ = [
    "Label",
    "LabeledState",
    "LabeledFiniteSet",
    "label_set",
    "subsets",
    "validate_lfs",
    "labels_of",
    "split_survivor_birth",
    "lmb_weight",
]


@dataclass(frozen=True, order=True)
class Label:
    """Track identity ``(birth_step, index)``, ordered lexicographically."""

    birth_step: int
    index: int

    def __post_init__(self):
        if self.birth_step < 0:
            raise ValueError(f"birth_step must be nonnegative, got {self.birth_step}")
        if self.index < 1:
            raise ValueError(f"index must be positive, got {self.index}")

    def __str__(self):
        return f"{self.birth_step}:{self.index}"

    @classmethod
    def parse(cls, text: str) -> "Label":
        k, i = text.split(":")
        return cls(int(k), int(i))


def label_set(labels: Iterable[Label]) -> tuple[Label, ...]:
    """Canonical (sorted, duplicate free) form of a collection of labels."""
    return tuple(sorted(set(labels)))


def subsets(labels: Iterable[Label]) -> Iterator[tuple[Label, ...]]:
    """All subsets of ``labels`` as canonical tuples, smallest first."""
    labels = label_set(labels)
    for n in range(len(labels) + 1):
        yield from combinations(labels, n)


@dataclass(frozen=True)
class LabeledState:
    kinematic: tuple[float, ...]
    label: Label

    def __post_init__(self):
        object.__setattr__(self, "kinematic", tuple(float(v) for v in np.ravel(self.kinematic)))

    @property
    def x(self) -> np.ndarray:
        return np.array(self.kinematic)


@dataclass(frozen=True)
class LabeledFiniteSet:
    """A finite set of labeled states with pairwise distinct labels.

    Build instances with :func:`validate_lfs`; the elements are stored in label
    order so two sets with the same content compare equal.
    """

    elements: tuple[LabeledState, ...] = ()

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def labels(self) -> tuple[Label, ...]:
        return tuple(e.label for e in self.elements)

    def state(self, label: Label) -> np.ndarray:
        for e in self.elements:
            if e.label == label:
                return e.x
        raise KeyError(label)


def validate_lfs(elements: Iterable[LabeledState]) -> LabeledFiniteSet:
    elements = list(elements)
    seen = set()
    for e in elements:
        if e.label in seen:
            raise DuplicateLabel(e.label)
        seen.add(e.label)
    return LabeledFiniteSet(tuple(sorted(elements, key=lambda e: e.label)))


def labels_of(X: LabeledFiniteSet) -> tuple[Label, ...]:
    return X.labels()


def split_survivor_birth(X: LabeledFiniteSet, persisting: Iterable[Label], birth: Iterable[Label]):
    """Partition ``X`` into the states of persisting targets and of new ones."""
    persisting, birth = set(persisting), set(birth)
    if persisting & birth:
        raise ValueError("persisting and birth label sets must be disjoint")
    minus, plus = [], []
    for e in X:
        if e.label in persisting:
            minus.append(e)
        elif e.label in birth:
            plus.append(e)
        else:
            raise UnknownLabel(e.label)
    return LabeledFiniteSet(tuple(minus)), LabeledFiniteSet(tuple(plus))


def lmb_weight(birth_labels: Iterable[Label], existence: Mapping[Label, float], L: Iterable[Label]) -> float:
    """Probability that exactly the labels ``L`` exist under an LMB law on ``birth_labels``."""
    J = set(birth_labels)
    L = set(L)
    if not L <= J:
        return 0.0
    w = 1.0
    for l in sorted(J):
        q = existence[l]
        w *= q if l in L else 1.0 - q
    return w
