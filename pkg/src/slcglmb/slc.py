"""SLC-GLMB densities: label-set probabilities factored from correlation weights.

An :class:`SlcDensity` holds ``omega[L]`` (probability that exactly the
labels ``L`` exist) and, for each such ``L``, the correlation weights
``alpha[L][o]`` over hypothesis indices.  Its recursions never touch the
classical ``w^o(L)`` weights; :func:`to_glmb` and :func:`from_glmb` are
lossless conversions used to cross-check them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateNormalizer, LabelCollision
from .glmb import (
    NO_BIRTH,
    GlmbDensity,
    Truncation,
    _Cache,
    _survival_factor,
    association_terms,
)
from .labels import Label, label_set, lmb_weight, subsets
from .models import MotionModel, SensorModel, SpatialPdf, detection_update_pdf, log_sum_exp, predict_pdf, survival_mass

__all__ = [
    "SlcDensity",
    "SlcBirthModel",
    "from_glmb",
    "to_glmb",
    "slc_time_update",
    "slc_measurement_update",
    "slc_birth_density",
    "marginal_pdf",
    "estimate_states",
    "estimate_states_mht",
    "prune_slc",
]


@dataclass(frozen=True, eq=False)
class SlcDensity:
    label_weight: dict
    correlation_weight: dict
    spatial: dict
    label_universe: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "label_universe", label_set(self.label_universe))

    @classmethod
    def empty(cls) -> "SlcDensity":
        return cls({(): 1.0}, {(): {(): 1.0}}, {}, ())

    def alpha(self, o, L) -> float:
        return self.correlation_weight.get(label_set(L), {}).get(o, 0.0)

    def omega(self, L) -> float:
        return self.label_weight.get(label_set(L), 0.0)

    def pairs(self):
        """Yield ``(o, L, omega(L) * alpha_o^L)`` in sorted order."""
        for L in sorted(self.label_weight):
            w = self.label_weight[L]
            for o in sorted(self.correlation_weight[L]):
                yield o, L, w * self.correlation_weight[L][o]

    def check(self, tol: float = 1e-9) -> None:
        total = sum(self.label_weight.values())
        if abs(total - 1.0) > tol:
            raise AssertionError(f"label weights sum to {total!r}")
        for L, w in self.label_weight.items():
            alphas = self.correlation_weight[L]
            if w > 0 and abs(sum(alphas.values()) - 1.0) > tol:
                raise AssertionError(f"correlation weights for {L} sum to {sum(alphas.values())!r}")
            if any(a < 0 for a in alphas.values()):
                raise AssertionError(f"negative correlation weight for {L}")
            for o in alphas:
                for l in L:
                    if (o, l) not in self.spatial:
                        raise AssertionError(f"missing spatial pdf for {(o, l)}")

    def expected_cardinality(self) -> float:
        return float(sum(w * len(L) for L, w in self.label_weight.items()))


def _as_alpha_table(alpha, birth_labels, n_index):
    """Normalize the user's alpha spec into ``{L: array}`` over every subset."""
    table = {}
    for L in subsets(birth_labels):
        if isinstance(alpha, Mapping):
            a = alpha.get(L, alpha.get(tuple(L), None))
            if a is None:
                a = np.full(n_index, 1.0 / n_index)
        else:
            a = alpha
        a = np.asarray(a, dtype=float)
        if a.shape != (n_index,) or np.any(a < 0) or abs(a.sum() - 1.0) > 1e-12:
            raise ValueError(f"correlation weights for {L} must be {n_index} nonnegative values summing to 1")
        table[L] = a
    return table


@dataclass(frozen=True, eq=False)
class SlcBirthModel:
    """Birth of a cluster of possibly correlated targets.

    ``spatial_hypotheses[i][l]`` is hypothesis ``i``'s spatial pdf for label
    ``l``; ``alpha`` gives the hypothesis weights, either one vector shared by
    every label subset or a mapping from label subsets to vectors.
    """

    existence: Mapping
    alpha: object
    spatial_hypotheses: Sequence

    def __post_init__(self):
        n = len(self.spatial_hypotheses)
        if n == 0:
            raise ValueError("at least one spatial hypothesis is required")
        labels = label_set(self.existence)
        for i, hyp in enumerate(self.spatial_hypotheses):
            missing = set(labels) - set(hyp)
            if missing:
                raise ValueError(f"hypothesis {i} lacks spatial pdfs for {sorted(missing)}")
        object.__setattr__(self, "alpha", _as_alpha_table(self.alpha, labels, n))

    @property
    def labels(self) -> tuple:
        return label_set(self.existence)

    def _atom(self, i):
        return ("b", (i,)) if len(self.spatial_hypotheses) > 1 else None

    def slc_terms(self):
        for L in subsets(self.labels):
            w = lmb_weight(self.labels, self.existence, L)
            if w > 0:
                yield L, w, [
                    (self._atom(i), float(a), self.spatial_hypotheses[i])
                    for i, a in enumerate(self.alpha[L])
                    if a > 0
                ]

    def glmb_terms(self):
        for L, w, comps in self.slc_terms():
            for atom, a, sp in comps:
                yield atom, L, w * a, sp


def from_glmb(d: GlmbDensity) -> SlcDensity:
    omega: dict = {}
    for (o, L), w in d.weights.items():
        omega[L] = omega.get(L, 0.0) + w
    alpha: dict = {L: {} for L in omega}
    for (o, L) in sorted(d.weights):
        if omega[L] > 0:
            alpha[L][o] = d.weights[(o, L)] / omega[L]
    omega = {L: w for L, w in omega.items() if w > 0}
    alpha = {L: alpha[L] for L in omega}
    return SlcDensity(omega, alpha, dict(d.spatial), d.label_universe)


def to_glmb(d: SlcDensity) -> GlmbDensity:
    weights = {(o, L): w for o, L, w in d.pairs() if w > 0}
    total = sum(weights.values())
    weights = {k: v / total for k, v in weights.items()}
    return GlmbDensity(weights, dict(d.spatial), d.label_universe)


def slc_birth_density(model) -> SlcDensity:
    """The birth law on its own, in SLC form."""
    omega, alpha, spatial = {}, {}, {}
    for L, w, comps in model.slc_terms():
        omega[L] = w
        alpha[L] = {}
        for atom, a, sp in comps:
            o = (atom,) if atom is not None else ()
            alpha[L][o] = alpha[L].get(o, 0.0) + a
            for l in L:
                spatial[(o, l)] = sp[l]
    return SlcDensity(omega, alpha, spatial, model.labels)


def _normalized(omega: dict) -> dict:
    keys = sorted(k for k, v in omega.items() if v > 0)
    total = sum(omega[k] for k in keys)
    if not keys or total < 1e-300:
        raise DegenerateNormalizer("label weights vanish")
    return {k: omega[k] / total for k in keys}


def slc_time_update(prior: SlcDensity, motion: MotionModel, birth=None) -> SlcDensity:
    """Predict an SLC density and superpose (possibly correlated) births."""
    birth = birth if birth is not None else NO_BIRTH
    clash = set(birth.labels) & set(prior.label_universe)
    if clash:
        raise LabelCollision(clash)
    masses = {}
    for L, alphas in prior.correlation_weight.items():
        for o in alphas:
            for l in L:
                if (o, l) not in masses:
                    masses[(o, l)] = survival_mass(prior.spatial[(o, l)], motion)
    # num[L-][o] = sum_L w^{S,o}(L-|L) omega(L) alpha_o^L
    num: dict = {}
    for L in sorted(prior.label_weight):
        wL = prior.label_weight[L]
        for o in sorted(prior.correlation_weight[L]):
            a = prior.correlation_weight[L][o]
            total_s = 0.0
            for Lm in subsets(L):
                f = _survival_factor(o, L, set(Lm), masses)
                total_s += f
                if f > 0 and a > 0:
                    row = num.setdefault(Lm, {})
                    row[o] = row.get(o, 0.0) + f * wL * a
            if abs(total_s - 1.0) > 1e-12:
                raise AssertionError(f"survival factors for {L} sum to {total_s!r}")
    survivors = {}
    for Lm in sorted(num):
        total = sum(num[Lm].values())
        if total > 0:
            survivors[Lm] = (total, {o: v / total for o, v in sorted(num[Lm].items()) if v > 0})

    cache = _Cache()
    predicted = {}
    terms = list(birth.slc_terms()) or [((), 1.0, [(None, 1.0, {})])]
    omega, alpha, spatial = {}, {}, {}
    for Lm, (wt, alphas) in survivors.items():
        for o in alphas:
            for l in Lm:
                if (o, l) not in predicted:
                    s = prior.spatial[(o, l)]
                    predicted[(o, l)] = cache.get_or((id(s),), lambda s=s: predict_pdf(s, motion))
        for Lb, wb, comps in terms:
            L = label_set(Lm + Lb)
            omega[L] = omega.get(L, 0.0) + wb * wt
            row = alpha.setdefault(L, {})
            for o, a in alphas.items():
                for atom, ai, sb in comps:
                    o2 = o + (atom,) if atom is not None else o
                    row[o2] = row.get(o2, 0.0) + a * ai
                    for l in Lm:
                        spatial[(o2, l)] = predicted[(o, l)]
                    for l in Lb:
                        spatial[(o2, l)] = sb[l]
    omega = _normalized(omega)
    alpha = {L: alpha[L] for L in omega}
    universe = label_set(prior.label_universe + birth.labels)
    return SlcDensity(omega, alpha, spatial, universe)


def slc_measurement_update(predicted: SlcDensity, sensor: SensorModel, Z, truncation: Truncation | None = None) -> SlcDensity:
    """Bayes update in SLC form: label weights and correlation weights separately."""
    truncation = truncation or Truncation()
    Z = [np.atleast_1d(np.asarray(z, dtype=float)) for z in Z]
    universe = predicted.label_universe
    uidx = {l: i for i, l in enumerate(universe)}
    table_cache, upd_cache = _Cache(), _Cache()
    log_omega, alpha, spatial = {}, {}, {}
    for L in sorted(predicted.label_weight):
        keys, logr = [], []
        for o in sorted(predicted.correlation_weight[L]):
            la = np.log(predicted.correlation_weight[L][o])
            for theta, sc, row in association_terms(predicted.spatial, o, L, uidx, sensor, Z, truncation, table_cache):
                o2 = o + (("z", theta),)
                keys.append(o2)
                logr.append(la + sc)
                for l, j in zip(L, row):
                    if (o2, l) not in spatial:
                        s = predicted.spatial[(o, l)]
                        spatial[(o2, l)] = upd_cache.get_or(
                            (id(s), int(j)), lambda s=s, j=j: detection_update_pdf(s, sensor, Z[j - 1] if j else None)
                        )
        if not keys:
            continue
        logr = np.array(logr)
        lse = log_sum_exp(logr)
        if not np.isfinite(lse):
            continue
        log_omega[L] = np.log(predicted.label_weight[L]) + lse
        a = np.exp(logr - lse)
        alpha[L] = {o2: float(v) for o2, v in zip(keys, a) if v > 0}
    if not log_omega:
        raise DegenerateNormalizer("every label set is impossible")
    Ls = sorted(log_omega)
    lw = np.array([log_omega[L] for L in Ls])
    total = logsumexp(lw)
    if total < -690.0:
        raise DegenerateNormalizer(f"log normalizer {total!r} below floor")
    w = np.exp(lw - total)
    omega = {L: float(v) for L, v in zip(Ls, w) if v > 0}
    alpha = {L: alpha[L] for L in omega}
    needed = {(o, l) for L in omega for o in alpha[L] for l in L}
    spatial = {k: v for k, v in spatial.items() if k in needed}
    return SlcDensity(omega, alpha, spatial, universe)


def prune_slc(d: SlcDensity, min_weight: float = 0.0, max_hypotheses: int | None = None) -> SlcDensity:
    """Prune on the joint weights ``omega(L) alpha_o^L`` (same rule as the GLMB pruner)."""
    from .glmb import prune_truncate

    return from_glmb(prune_truncate(to_glmb(d), min_weight, max_hypotheses))


def marginal_pdf(d: SlcDensity, label: Label, L) -> SpatialPdf:
    """Marginal spatial pdf of ``label`` within cluster ``L``: the alpha-mixture over hypotheses."""
    L = label_set(L)
    ws, ms, Ps = [], [], []
    for o in sorted(d.correlation_weight[L]):
        a = d.correlation_weight[L][o]
        s = d.spatial[(o, label)]
        ws.append(a * s.weights)
        ms.append(s.means)
        Ps.append(s.covs)
    w = np.concatenate(ws)
    return SpatialPdf(w / w.sum(), np.concatenate(ms), np.concatenate(Ps))


def _map_label_set(d: SlcDensity):
    if not d.label_weight:
        return ()
    return min(d.label_weight, key=lambda L: (-d.label_weight[L], L))


def estimate_states(d: SlcDensity):
    """MAP label set, then the mode of each label's marginal pdf."""
    Lhat = _map_label_set(d)
    return Lhat, {l: marginal_pdf(d, l, Lhat).mode() for l in Lhat}


def estimate_states_mht(d: SlcDensity):
    """MAP label set, then the single most probable hypothesis for it.

    Approximates :func:`estimate_states`; adequate only when one hypothesis
    dominates the correlation weights.
    """
    Lhat = _map_label_set(d)
    if not Lhat:
        return Lhat, {}
    alphas = d.correlation_weight[Lhat]
    ohat = min(alphas, key=lambda o: (-alphas[o], o))
    return Lhat, {l: d.spatial[(ohat, l)].mode() for l in Lhat}
