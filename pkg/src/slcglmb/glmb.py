"""Classical GLMB densities and their exact time and measurement updates.

A :class:`GlmbDensity` stores the positive weights ``w[(o, L)]`` and the
spatial densities ``spatial[(o, l)]``.  A hypothesis index ``o`` is a tuple of
atoms, one appended per event: ``("z", theta)`` for the association used at a
measurement update (``theta`` aligned with the label universe at that scan)
and ``("b", (i,))`` for a correlated birth component.  Atoms are plain
tuples, so indices sort lexicographically and tie-breaking is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .assignment import association_cost_matrix, columns_to_mta, murty_k_best
from .errors import CombinatorialCap, DegenerateNormalizer, EmptyDensity, LabelCollision
from .labels import Label, label_set, lmb_weight, subsets
from .models import (
    LOG_FLOOR,
    MotionModel,
    SensorModel,
    SpatialPdf,
    log_detection_functional,
    detection_update_pdf,
    predict_pdf,
    survival_mass,
)

__all__ = [
    "GlmbDensity",
    "Mta",
    "LmbBirth",
    "Truncation",
    "enumerate_mtas",
    "survivor_weights",
    "glmb_time_update",
    "glmb_measurement_update",
    "prune_truncate",
]

EMPTY_INDEX: tuple = ()


@dataclass(frozen=True, eq=False)
class GlmbDensity:
    weights: dict
    spatial: dict
    label_universe: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "label_universe", label_set(self.label_universe))

    @classmethod
    def empty(cls) -> "GlmbDensity":
        """The target-free density ``f(emptyset) = 1``."""
        return cls({(EMPTY_INDEX, ()): 1.0}, {}, ())

    @property
    def indices(self) -> list:
        return sorted({o for o, _ in self.weights})

    def total(self) -> float:
        return float(sum(self.weights.values()))

    def weight(self, o, L) -> float:
        return self.weights.get((o, label_set(L)), 0.0)

    def check(self, tol: float = 1e-9) -> None:
        if abs(self.total() - 1.0) > tol:
            raise AssertionError(f"weights sum to {self.total()!r}")
        for (o, L), w in self.weights.items():
            if w < 0:
                raise AssertionError(f"negative weight at {(o, L)}")
            for l in L:
                if (o, l) not in self.spatial:
                    raise AssertionError(f"missing spatial pdf for {(o, l)}")

    def density(self, X) -> float:
        """Multitarget p.d.f. value at a labeled finite set."""
        L = X.labels()
        val = 0.0
        for o in self.indices:
            w = self.weights.get((o, L), 0.0)
            if w:
                val += w * np.prod([self.spatial[(o, e.label)].pdf(e.x[None, :])[0] for e in X])
        return val


@dataclass(frozen=True)
class Mta:
    """Measurement-to-track association; 0 means missed detection."""

    labels: tuple
    values: tuple

    def __post_init__(self):
        if len(self.labels) != len(self.values):
            raise ValueError("labels and values must align")
        nz = [v for v in self.values if v]
        if len(nz) != len(set(nz)):
            raise ValueError(f"association is not injective: {self.values}")

    def __getitem__(self, label):
        return self.values[self.labels.index(label)]

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.values))


def enumerate_mtas(labels: Iterable[Label], num_measurements: int, cap: int | None = None) -> list[Mta]:
    labels = label_set(labels)
    n = kernels.count_injective(len(labels), num_measurements)
    if cap is not None and n > cap:
        raise CombinatorialCap(n, cap)
    rows = kernels.enumerate_injective(len(labels), num_measurements)
    return [Mta(labels, tuple(int(v) for v in r)) for r in rows]


@dataclass(frozen=True, eq=False)
class LmbBirth:
    """Independent (LMB) birth: existence ``q_l`` and spatial density per label."""

    existence: Mapping
    spatial: Mapping

    @property
    def labels(self) -> tuple:
        return label_set(self.existence)

    def glmb_terms(self):
        """Yield ``(index_atom, L, weight, spatial)`` for each positive birth term."""
        for L in subsets(self.labels):
            w = lmb_weight(self.labels, self.existence, L)
            if w > 0:
                yield None, L, w, self.spatial

    def slc_terms(self):
        """Yield ``(L, w_B(L), [(index_atom, alpha, spatial)])`` per positive birth set."""
        for L in subsets(self.labels):
            w = lmb_weight(self.labels, self.existence, L)
            if w > 0:
                yield L, w, [(None, 1.0, self.spatial)]


NO_BIRTH = LmbBirth({}, {})


@dataclass(frozen=True)
class Truncation:
    """How many associations the measurement update may generate.

    ``mode="exhaustive"`` enumerates every association (raising
    :class:`CombinatorialCap` above ``max_mtas`` per label set); ``"ranked"``
    keeps the ``k_best`` most likely associations per hypothesis.
    """

    mode: str = "exhaustive"
    max_mtas: int = 200_000
    k_best: int = 50


class _Cache(dict):
    """Per-update memo keyed on ``id`` of immutable spatial pdfs.

    Only valid while the keyed objects are alive, i.e. within one update.
    """

    def get_or(self, key, fn):
        if key not in self:
            self[key] = fn()
        return self[key]


def _survival_factor(o, L, Lminus, masses) -> float:
    """Probability that exactly ``Lminus`` of the targets ``L`` survive under hypothesis ``o``."""
    f = 1.0
    for l in L:
        ps = masses[(o, l)]
        f *= ps if l in Lminus else 1.0 - ps
    return f


def survivor_weights(prior: GlmbDensity, motion: MotionModel) -> dict:
    """Inner time-update weights ``{(o, J): w~^o(J)}`` (no beta factor).

    The values sum to one over all ``(o, J)`` whenever ``prior`` does.
    """
    masses = {}
    for (o, L) in prior.weights:
        for l in L:
            if (o, l) not in masses:
                masses[(o, l)] = survival_mass(prior.spatial[(o, l)], motion)
    out: dict = {}
    for (o, L) in sorted(prior.weights):
        w = prior.weights[(o, L)]
        for J in subsets(L):
            f = _survival_factor(o, L, set(J), masses)
            if f > 0:
                out[(o, J)] = out.get((o, J), 0.0) + w * f
    return out


def glmb_time_update(prior: GlmbDensity, motion: MotionModel, birth=None) -> GlmbDensity:
    """Predict a GLMB density one step and superpose the birth density."""
    birth = birth if birth is not None else NO_BIRTH
    clash = set(birth.labels) & set(prior.label_universe)
    if clash:
        raise LabelCollision(clash)
    tilde = survivor_weights(prior, motion)
    predicted = {}
    weights: dict = {}
    spatial: dict = {}
    cache = _Cache()
    terms = list(birth.glmb_terms()) or [(None, (), 1.0, {})]
    for (o, J) in sorted(tilde):
        wt = tilde[(o, J)]
        for l in J:
            if (o, l) not in predicted:
                s = prior.spatial[(o, l)]
                predicted[(o, l)] = cache.get_or((id(s),), lambda s=s: predict_pdf(s, motion))
        for atom, Lb, wb, sb in terms:
            o2 = o + (atom,) if atom is not None else o
            L = label_set(J + Lb)
            weights[(o2, L)] = weights.get((o2, L), 0.0) + wb * wt
            for l in J:
                spatial[(o2, l)] = predicted[(o, l)]
            for l in Lb:
                spatial[(o2, l)] = sb[l]
    universe = label_set(prior.label_universe + birth.labels)
    return GlmbDensity(_normalize(weights), spatial, universe)


def _normalize(weights: dict) -> dict:
    keys = sorted(k for k, w in weights.items() if w > 0)
    if not keys:
        raise DegenerateNormalizer("all hypotheses have zero weight")
    vals = np.array([weights[k] for k in keys])
    total = vals.sum()
    if total < 1e-300:
        raise DegenerateNormalizer(f"total weight {total!r} below floor")
    return {k: float(v / total) for k, v in zip(keys, vals)}


def _log_table(spatials, sensor, Z, cache):
    """Rows ``[log s[L^0], log s[L^z1], ...]`` for each spatial pdf."""
    rows = []
    for s in spatials:
        rows.append(cache.get_or((id(s),), lambda s=s: np.array(
            [log_detection_functional(s, sensor, None)]
            + [log_detection_functional(s, sensor, z) for z in Z]
        )))
    table = np.array(rows).reshape(len(spatials), len(Z) + 1)
    # below the floor an association is impossible, not merely unlikely
    table[table < LOG_FLOOR] = -np.inf
    return table


def _associations(table, m, truncation: Truncation):
    n = table.shape[0]
    if truncation.mode == "ranked":
        found = murty_k_best(association_cost_matrix(table), truncation.k_best)
        mtas = np.array([columns_to_mta(c, m) for c, _ in found], dtype=np.int64).reshape(len(found), n)
        return mtas, kernels.mta_log_scores(table, mtas)
    count = kernels.count_injective(n, m)
    if count > truncation.max_mtas:
        raise CombinatorialCap(count, truncation.max_mtas)
    mtas = kernels.enumerate_injective(n, m)
    return mtas, kernels.mta_log_scores(table, mtas)


def association_terms(spatial_of, o, L, universe_index, sensor, Z, truncation, table_cache):
    """Yield ``(theta_over_universe, log_score, assignment_per_label)`` with finite scores."""
    table = _log_table([spatial_of[(o, l)] for l in L], sensor, Z, table_cache)
    mtas, scores = _associations(table, len(Z), truncation)
    nu = len(universe_index)
    pos = [universe_index[l] for l in L]
    for row, sc in zip(mtas, scores):
        if not np.isfinite(sc):
            continue
        theta = [0] * nu
        for p, v in zip(pos, row):
            theta[p] = int(v)
        yield tuple(theta), float(sc), row


def glmb_measurement_update(predicted: GlmbDensity, sensor: SensorModel, Z, truncation: Truncation | None = None) -> GlmbDensity:
    """Bayes update of a GLMB density with the measurement list ``Z``."""
    truncation = truncation or Truncation()
    Z = [np.atleast_1d(np.asarray(z, dtype=float)) for z in Z]
    universe = predicted.label_universe
    uidx = {l: i for i, l in enumerate(universe)}
    table_cache, upd_cache = _Cache(), _Cache()
    keys, logw = [], []
    spatial: dict = {}
    for (o, L) in sorted(predicted.weights):
        lw0 = np.log(predicted.weights[(o, L)])
        for theta, sc, row in association_terms(predicted.spatial, o, L, uidx, sensor, Z, truncation, table_cache):
            o2 = o + (("z", theta),)
            keys.append((o2, L))
            logw.append(lw0 + sc)
            for l, j in zip(L, row):
                if (o2, l) not in spatial:
                    s = predicted.spatial[(o, l)]
                    spatial[(o2, l)] = upd_cache.get_or(
                        (id(s), int(j)), lambda s=s, j=j: detection_update_pdf(s, sensor, Z[j - 1] if j else None)
                    )
    weights = _exp_normalize(keys, logw)
    return GlmbDensity(weights, spatial, universe)


def _exp_normalize(keys, logw) -> dict:
    logw = np.asarray(logw, dtype=float)
    if len(logw) == 0 or not np.any(np.isfinite(logw)):
        raise DegenerateNormalizer("every hypothesis is impossible")
    lse = logsumexp(logw)
    if lse < -690.0:
        raise DegenerateNormalizer(f"log normalizer {lse!r} below floor")
    w = np.exp(logw - lse)
    out: dict = {}
    for k, v in zip(keys, w):
        if v > 0:
            out[k] = out.get(k, 0.0) + float(v)
    return out


def prune_truncate(d: GlmbDensity, min_weight: float = 0.0, max_hypotheses: int | None = None) -> GlmbDensity:
    """Drop light hypotheses, keep the heaviest ``max_hypotheses`` and renormalize."""
    kept = [(k, w) for k, w in d.weights.items() if w >= min_weight and w > 0]
    if not kept:
        raise EmptyDensity("pruning removed every hypothesis")
    kept.sort(key=lambda kw: (-kw[1], kw[0]))
    if max_hypotheses is not None:
        kept = kept[:max_hypotheses]
    total = sum(w for _, w in kept)
    weights = {k: w / total for k, w in sorted(kept)}
    needed = {(o, l) for (o, L) in weights for l in L}
    spatial = {k: v for k, v in d.spatial.items() if k in needed}
    return GlmbDensity(weights, spatial, d.label_universe)
