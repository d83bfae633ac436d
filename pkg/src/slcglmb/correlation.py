"""Factorial-moment and factorial-covariance diagnostics.

The factorial covariance density (f.c.d.) is the second functional
derivative of ``log G[h]`` at ``h = 1``.  Closed forms are given for the
first-moment density of any SLC density and for the pair f.c.d. of a density
whose label weight sits on a single two-label set.  Anything richer is routed
through the finite-difference machinery in :mod:`slcglmb.oracle`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import UnsupportedDensity
from .labels import Label, LabeledState, label_set
from .models import SpatialPdf
from .slc import SlcDensity, from_glmb

__all__ = [
    "CorrelationReport",
    "first_moment_density",
    "factorial_covariance_pair",
    "fcd_table",
    "pair_support",
    "default_probe_grid",
    "independence_gap",
    "correlation_report",
    "marginalize",
]

CONCENTRATION_TOL = 1e-12


def _as_slc(d) -> SlcDensity:
    return d if isinstance(d, SlcDensity) else from_glmb(d)


@dataclass(frozen=True)
class CorrelationReport:
    pair: tuple
    fcd_value: float
    independence_gap: float

    def to_dict(self) -> dict:
        return {
            "pair": [{"label": str(p.label), "state": list(p.kinematic)} for p in self.pair],
            "fcd_value": self.fcd_value,
            "independence_gap": self.independence_gap,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "CorrelationReport":
        pair = tuple(LabeledState(tuple(p["state"]), Label.parse(p["label"])) for p in data["pair"])
        return cls(pair, float(data["fcd_value"]), float(data["independence_gap"]))


def first_moment_density(d, x: LabeledState) -> float:
    """``D(x, l) = sum over L containing l of omega(L) sum_o alpha_o^L s^o_l(x)``."""
    d = _as_slc(d)
    xv = x.x[None, :]
    total = 0.0
    for L, w in d.label_weight.items():
        if x.label not in L or w == 0:
            continue
        for o, a in d.correlation_weight[L].items():
            total += w * a * float(d.spatial[(o, x.label)].pdf(xv)[0])
    return total


def pair_support(d) -> tuple:
    """The two-label set carrying all label weight, else :class:`UnsupportedDensity`."""
    d = _as_slc(d)
    for L, w in d.label_weight.items():
        if len(L) == 2 and w >= 1.0 - CONCENTRATION_TOL:
            return L
    raise UnsupportedDensity("label weight is not concentrated on a single two-label set")


def _pdf_rows(d, L, label, xs):
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    alphas = d.correlation_weight[L]
    keys = sorted(alphas)
    a = np.array([alphas[o] for o in keys])
    S = np.array([d.spatial[(o, label)].pdf(xs) for o in keys])
    return a, S


def fcd_table(d, l1: Label, l2: Label, xs1, xs2) -> np.ndarray:
    """Closed-form pair f.c.d. on the product grid ``xs1 x xs2``."""
    d = _as_slc(d)
    L = pair_support(d)
    n1, n2 = len(xs1), len(xs2)
    if l1 == l2 or label_set((l1, l2)) != L:
        return np.zeros((n1, n2))
    a, S1 = _pdf_rows(d, L, l1, xs1)
    _, S2 = _pdf_rows(d, L, l2, xs2)
    joint = np.einsum("o,oi,oj->ij", a, S1, S2)
    return joint - np.outer(a @ S1, a @ S2)


def factorial_covariance_pair(d, x1: LabeledState, x2: LabeledState) -> float:
    """Pair f.c.d.: the joint density minus the product of its marginals.

    Zero when the two query labels coincide or do not form the support.
    """
    return float(fcd_table(d, x1.label, x2.label, x1.x[None, :], x2.x[None, :])[0, 0])


def default_probe_grid(d, label: Label, points_per_axis: int = 21, width: float = 4.0) -> np.ndarray:
    """Box spanning ``mean +- width * sigma`` of every component for ``label``."""
    d = _as_slc(d)
    lows, highs = [], []
    for (o, l), s in d.spatial.items():
        if l != label:
            continue
        sig = np.sqrt(np.einsum("nii->ni", s.covs))
        lows.append((s.means - width * sig).min(axis=0))
        highs.append((s.means + width * sig).max(axis=0))
    if not lows:
        raise UnsupportedDensity(f"no spatial pdf for label {label}")
    lo, hi = np.min(lows, axis=0), np.max(highs, axis=0)
    axes = [np.linspace(a, b, points_per_axis) for a, b in zip(lo, hi)]
    return np.array(list(product(*axes)))


def _fd_table(d, l1, l2, xs1, xs2, eps=1e-4):
    from .oracle import DiscreteScene, functional_derivative_fd

    xs1 = np.atleast_2d(np.asarray(xs1, dtype=float).reshape(len(xs1), -1))
    xs2 = np.atleast_2d(np.asarray(xs2, dtype=float).reshape(len(xs2), -1))
    grid = np.unique(np.vstack([xs1, xs2]), axis=0)
    # closed-form pdfs make the cell measure cancel, so any positive value works
    scene = DiscreteScene(grid, 1.0, label_set({l1, l2}), max_cardinality=2)
    out = np.empty((len(xs1), len(xs2)))
    for i, a in enumerate(xs1):
        for j, b in enumerate(xs2):
            pts = (LabeledState(tuple(a), l1), LabeledState(tuple(b), l2))
            out[i, j] = functional_derivative_fd(d, pts, scene, eps=eps, log=True)
    return out


def independence_gap(d, pair, probe_grid=None) -> float:
    """Largest ``|f.c.d.|`` over ``probe_grid x probe_grid``.

    ``probe_grid`` may be one array of kinematic points shared by both labels
    or a pair of arrays.  Densities without a two-label support are handled by
    finite differences of ``log G``.
    """
    d = _as_slc(d)
    l1, l2 = pair
    if probe_grid is None:
        xs1, xs2 = default_probe_grid(d, l1), default_probe_grid(d, l2)
    elif isinstance(probe_grid, tuple) and len(probe_grid) == 2:
        xs1, xs2 = probe_grid
    else:
        xs1 = xs2 = probe_grid
    xs1 = np.asarray(xs1, dtype=float)
    xs2 = np.asarray(xs2, dtype=float)
    try:
        table = fcd_table(d, l1, l2, xs1, xs2)
    except UnsupportedDensity:
        if l1 == l2:
            return 0.0
        table = _fd_table(d, l1, l2, xs1, xs2)
    return float(np.max(np.abs(table))) if table.size else 0.0


def correlation_report(d, x1: LabeledState, x2: LabeledState, probe_grid=None) -> CorrelationReport:
    d = _as_slc(d)
    try:
        value = factorial_covariance_pair(d, x1, x2)
    except UnsupportedDensity:
        value = 0.0 if x1.label == x2.label else float(_fd_table(d, x1.label, x2.label, x1.x[None], x2.x[None])[0, 0])
    gap = independence_gap(d, (x1.label, x2.label), probe_grid)
    return CorrelationReport((x1, x2), value, gap)


def marginalize(d, axis: int) -> SlcDensity:
    """Project every spatial pdf onto one kinematic coordinate.

    The f.c.d. of the projection is the projection of the f.c.d., so this
    gives a 1-D view of correlations in higher-dimensional states.
    """
    d = _as_slc(d)
    spatial = {}
    done = {}
    for key, s in d.spatial.items():
        if id(s) not in done:
            done[id(s)] = SpatialPdf(s.weights, s.means[:, [axis]], s.covs[:, [axis]][:, :, [axis]])
        spatial[key] = done[id(s)]
    return SlcDensity(dict(d.label_weight), {L: dict(a) for L, a in d.correlation_weight.items()}, spatial, d.label_universe)
