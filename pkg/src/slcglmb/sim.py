"""Scenario configuration, synthetic data, and the filtering loop.

Random draws use numpy's Philox counter-based generator so a given seed
reproduces the same scenario on any platform.
"""
from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, DegenerateNormalizer, TrackingError
from .glmb import (
    GlmbDensity,
    LmbBirth,
    Truncation,
    glmb_measurement_update,
    glmb_time_update,
    prune_truncate,
    survivor_weights,
)
from .labels import Label, LabeledFiniteSet, LabeledState, validate_lfs
from .models import MotionModel, SensorModel, SpatialPdf
from .slc import (
    SlcBirthModel,
    SlcDensity,
    estimate_states,
    from_glmb,
    prune_slc,
    slc_measurement_update,
    slc_time_update,
)

__all__ = [
    "ScenarioConfig",
    "ScanRecord",
    "StepResult",
    "load_config",
    "parse_config",
    "make_rng",
    "generate_scenario",
    "run_filter",
    "ospa",
    "equivalence_gap",
]

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-9


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class BirthTarget:
    existence: float
    spatial: SpatialPdf


@dataclass(frozen=True)
class ClusterBirth:
    existence: tuple
    alpha: tuple
    hypotheses: tuple  # hypotheses[i][j] is the pdf of the j-th birth label under hypothesis i


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    motion: MotionModel
    sensor: SensorModel
    birth: object  # tuple[BirthTarget, ...] or ClusterBirth
    steps: int
    rng_seed: int
    truncation: Truncation = field(default_factory=Truncation)
    min_weight: float = 0.0
    max_hypotheses: int | None = None
    cluster_mode: bool = False
    ospa_cutoff: float = 10.0
    ospa_order: float = 1.0

    @property
    def state_dim(self) -> int:
        return self.motion.dim

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, rng_seed=int(seed))

    def birth_model(self, k: int):
        """Birth law at step ``k`` with labels ``(k, 1), (k, 2), ...``; ``None`` when absent."""
        if self.cluster_mode and k >= 2:
            return None
        if isinstance(self.birth, ClusterBirth):
            labels = [Label(k, i + 1) for i in range(len(self.birth.existence))]
            return SlcBirthModel(
                dict(zip(labels, self.birth.existence)),
                list(self.birth.alpha),
                [dict(zip(labels, hyp)) for hyp in self.birth.hypotheses],
            )
        if not self.birth:
            return None
        labels = [Label(k, i + 1) for i in range(len(self.birth))]
        return LmbBirth(
            {l: t.existence for l, t in zip(labels, self.birth)},
            {l: t.spatial for l, t in zip(labels, self.birth)},
        )


# config parsing -------------------------------------------------------------

def _get(table, key, path, kind=None, default=...):
    if key not in table:
        if default is ...:
            raise ConfigError(f"{path}.{key}".lstrip("."), "missing required field")
        return default
    val = table[key]
    if kind is not None and not isinstance(val, kind) or isinstance(val, bool) and kind is not bool and kind is not None:
        raise ConfigError(f"{path}.{key}".lstrip("."), f"expected {getattr(kind, '__name__', kind)}")
    return val


def _matrix(table, key, path, shape=None):
    p = f"{path}.{key}"
    raw = _get(table, key, path)
    try:
        a = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(p, "expected a numeric array") from None
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1 and shape is not None and len(shape) == 2:
        a = a.reshape(1, -1) if shape[0] == 1 else a
    if shape is not None and a.shape != shape:
        raise ConfigError(p, f"expected shape {shape}, got {a.shape}")
    return a


def _prob(table, key, path, default=...):
    v = _get(table, key, path, (int, float), default)
    if not 0.0 <= float(v) <= 1.0:
        raise ConfigError(f"{path}.{key}", "probability must lie in [0, 1]")
    return float(v)


def _gauss(table, path, n):
    mean = _matrix(table, "mean", path).ravel()
    if mean.shape != (n,):
        raise ConfigError(f"{path}.mean", f"expected {n} components")
    if "cov" in table:
        cov = _matrix(table, "cov", path, (n, n))
    elif "std" in table:
        std = _matrix(table, "std", path).ravel()
        if std.shape != (n,) or np.any(std <= 0):
            raise ConfigError(f"{path}.std", f"expected {n} positive values")
        cov = np.diag(std ** 2)
    else:
        raise ConfigError(f"{path}.cov", "missing required field (or give std)")
    try:
        return SpatialPdf.gaussian(mean, cov)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise ConfigError(f"{path}.cov", str(e)) from None


def parse_config(data: dict) -> ScenarioConfig:
    """Validate a decoded TOML document and build a :class:`ScenarioConfig`."""
    seed = _get(data, "seed", "", int)
    steps = _get(data, "steps", "", int)
    if steps < 0:
        raise ConfigError("steps", "must be nonnegative")

    mt = _get(data, "motion", "", dict)
    F = _matrix(mt, "transition", "motion")
    n = F.shape[0]
    if F.shape != (n, n):
        raise ConfigError("motion.transition", "must be square")
    Q = _matrix(mt, "process_noise", "motion", (n, n))
    try:
        motion = MotionModel(F, Q, _prob(mt, "survival_prob", "motion"))
    except (ValueError, np.linalg.LinAlgError) as e:
        raise ConfigError("motion", str(e)) from None

    sn = _get(data, "sensor", "", dict)
    H = np.atleast_2d(_matrix(sn, "observation", "sensor"))
    if H.ndim != 2 or H.shape[1] != n:
        raise ConfigError("sensor.observation", f"expected {n} columns")
    m = H.shape[0]
    R = _matrix(sn, "measurement_noise", "sensor", (m, m))
    region = _matrix(sn, "clutter_region", "sensor")
    if region.shape == (2,) or region.shape == (1, 2) and m == 1:
        region = region.reshape(1, 2)
    if region.shape != (m, 2) or np.any(region[:, 1] <= region[:, 0]):
        raise ConfigError("sensor.clutter_region", f"expected {m} rows of [low, high]")
    rate = float(_get(sn, "clutter_rate", "sensor", (int, float)))
    if rate < 0:
        raise ConfigError("sensor.clutter_rate", "must be nonnegative")
    try:
        sensor = SensorModel(H, R, _prob(sn, "detection_prob", "sensor"), rate, region)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise ConfigError("sensor", str(e)) from None

    bt = _get(data, "birth", "", dict)
    kind = _get(bt, "model", "birth", str, "lmb")
    if kind == "lmb":
        targets = _get(bt, "target", "birth", list, [])
        birth = tuple(
            BirthTarget(_prob(t, "existence", f"birth.target[{i}]"), _gauss(t, f"birth.target[{i}]", n))
            for i, t in enumerate(targets)
        )
    elif kind == "slc":
        q = _matrix(bt, "existence", "birth").ravel()
        if np.any(q < 0) or np.any(q > 1):
            raise ConfigError("birth.existence", "probabilities must lie in [0, 1]")
        hyps = _get(bt, "hypothesis", "birth", list)
        alpha = _matrix(bt, "alpha", "birth").ravel()
        if len(alpha) != len(hyps) or np.any(alpha < 0) or abs(alpha.sum() - 1) > 1e-12:
            raise ConfigError("birth.alpha", f"expected {len(hyps)} nonnegative weights summing to 1")
        hypotheses = []
        for i, h in enumerate(hyps):
            comps = _get(h, "target", f"birth.hypothesis[{i}]", list)
            if len(comps) != len(q):
                raise ConfigError(f"birth.hypothesis[{i}].target", f"expected {len(q)} entries")
            hypotheses.append(tuple(_gauss(c, f"birth.hypothesis[{i}].target[{j}]", n) for j, c in enumerate(comps)))
        birth = ClusterBirth(tuple(map(float, q)), tuple(map(float, alpha)), tuple(hypotheses))
    else:
        raise ConfigError("birth.model", "expected 'lmb' or 'slc'")

    tr = _get(data, "truncation", "", dict, {})
    mode = _get(tr, "mode", "truncation", str, "exhaustive")
    if mode not in ("exhaustive", "ranked"):
        raise ConfigError("truncation.mode", "expected 'exhaustive' or 'ranked'")
    truncation = Truncation(
        mode,
        int(_get(tr, "max_mtas", "truncation", int, 200_000)),
        int(_get(tr, "k_best", "truncation", int, 50)),
    )
    max_h = _get(tr, "max_hypotheses", "truncation", int, None)
    if max_h is not None and max_h < 1:
        raise ConfigError("truncation.max_hypotheses", "must be positive")
    min_w = float(_get(tr, "min_weight", "truncation", (int, float), 0.0))

    out = _get(data, "output", "", dict, {})
    c = float(_get(out, "ospa_cutoff", "output", (int, float), 10.0))
    p = float(_get(out, "ospa_order", "output", (int, float), 1.0))
    if c <= 0 or p < 1:
        raise ConfigError("output", "need ospa_cutoff > 0 and ospa_order >= 1")

    return ScenarioConfig(
        motion, sensor, birth, steps, seed, truncation, min_w, max_h,
        bool(_get(data, "cluster_mode", "", bool, False)), c, p,
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as e:
        raise ConfigError(str(path), e.strerror or str(e)) from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(str(path), f"invalid TOML: {e}") from None
    return parse_config(data)


# scenario generation --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScanRecord:
    k: int
    truth: LabeledFiniteSet
    measurements: tuple


def _sample_pdf(rng, s: SpatialPdf) -> np.ndarray:
    j = rng.choice(len(s), p=s.weights) if len(s) > 1 else 0
    return rng.multivariate_normal(s.means[j], s.covs[j])


def _sample_birth(rng, model) -> list:
    terms = list(model.slc_terms())
    w = np.array([t[1] for t in terms])
    L, _, comps = terms[rng.choice(len(terms), p=w / w.sum())]
    a = np.array([c[1] for c in comps])
    _, _, spatial = comps[rng.choice(len(comps), p=a / a.sum())]
    return [(l, _sample_pdf(rng, spatial[l])) for l in L]


def generate_scenario(cfg: ScenarioConfig) -> list[ScanRecord]:
    """Truth trajectories and measurement scans for steps ``1..K``."""
    rng = make_rng(cfg.rng_seed)
    F, Q, ps = cfg.motion.transition, cfg.motion.process_noise, cfg.motion.survival_prob
    sen = cfg.sensor
    alive: dict = {}
    scans = []
    for k in range(1, cfg.steps + 1):
        nxt = {}
        for l in sorted(alive):
            if rng.random() < ps:
                nxt[l] = F @ alive[l] + rng.multivariate_normal(np.zeros(len(F)), Q)
        model = cfg.birth_model(k)
        if model is not None:
            for l, x in _sample_birth(rng, model):
                nxt[l] = x
        alive = nxt
        Z = []
        for l in sorted(alive):
            if rng.random() < sen.detection_prob:
                Z.append(sen.observation @ alive[l] + rng.multivariate_normal(np.zeros(sen.meas_dim), sen.measurement_noise))
        lo, hi = sen.clutter_region[:, 0], sen.clutter_region[:, 1]
        for _ in range(rng.poisson(sen.clutter_rate)):
            Z.append(lo + (hi - lo) * rng.random(sen.meas_dim))
        order = rng.permutation(len(Z))
        truth = validate_lfs(LabeledState(tuple(alive[l]), l) for l in sorted(alive))
        scans.append(ScanRecord(k, truth, tuple(np.asarray(Z[i]) for i in order)))
    return scans


# filtering ------------------------------------------------------------------

@dataclass(eq=False)
class StepResult:
    k: int
    density: object
    labels: tuple
    states: dict
    residual_predict: float
    residual_update: float
    survivor_residual: float
    n_hypotheses: int
    ospa: float | None = None


def ospa(truth, estimate, c: float, p: float = 1.0) -> float:
    """OSPA distance between kinematic point sets (labels ignored)."""
    if c <= 0 or p < 1:
        raise ValueError("need c > 0 and p >= 1")
    X = np.array([e.x for e in truth]) if isinstance(truth, LabeledFiniteSet) else np.asarray(truth, dtype=float)
    if isinstance(estimate, tuple) and len(estimate) == 2 and isinstance(estimate[1], dict):
        Y = np.array([estimate[1][l] for l in estimate[0]])
    else:
        Y = np.asarray(estimate, dtype=float)
    X = X.reshape(len(X), -1) if len(X) else np.zeros((0, 1))
    Y = Y.reshape(len(Y), -1) if len(Y) else np.zeros((0, 1))
    m, n = len(X), len(Y)
    if m == 0 and n == 0:
        return 0.0
    if m == 0 or n == 0:
        return float(c)
    if m > n:
        X, Y, m, n = Y, X, n, m
    D = np.minimum(np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2), c) ** p
    r, col = linear_sum_assignment(D)
    return float(((D[r, col].sum() + c ** p * (n - m)) / n) ** (1.0 / p))


def _weight_total(d) -> float:
    if isinstance(d, SlcDensity):
        return sum(d.label_weight.values())
    return d.total()


def _n_hyp(d) -> int:
    if isinstance(d, SlcDensity):
        return sum(len(a) for a in d.correlation_weight.values())
    return len(d.weights)


def run_filter(cfg: ScenarioConfig, scans, which: str = "slc") -> list[StepResult]:
    """Alternate prediction and update from the target-free initial density.

    Returns one :class:`StepResult` per scan, preceded by the initial density
    (``k = 0``).
    """
    if which not in ("glmb", "slc"):
        raise ValueError("which must be 'glmb' or 'slc'")
    d = SlcDensity.empty() if which == "slc" else GlmbDensity.empty()
    results = [StepResult(0, d, (), {}, 0.0, 0.0, 0.0, 1)]
    for scan in scans:
        k = scan.k
        try:
            birth = cfg.birth_model(k)
            if which == "slc":
                pred = slc_time_update(d, cfg.motion, birth)
                surv = 0.0  # the SLC time update checks this sum itself
                upd = slc_measurement_update(pred, cfg.sensor, scan.measurements, cfg.truncation)
                post = prune_slc(upd, cfg.min_weight, cfg.max_hypotheses)
                est_src = post
            else:
                surv = abs(sum(survivor_weights(d, cfg.motion).values()) - 1.0)
                pred = glmb_time_update(d, cfg.motion, birth)
                upd = glmb_measurement_update(pred, cfg.sensor, scan.measurements, cfg.truncation)
                post = prune_truncate(upd, cfg.min_weight, cfg.max_hypotheses)
                est_src = from_glmb(post)
            r_pred = abs(_weight_total(pred) - 1.0)
            r_upd = abs(_weight_total(upd) - 1.0)
            worst = max(r_pred, r_upd, surv, abs(_weight_total(post) - 1.0))
            log.debug("step %d: residuals %.3g %.3g %.3g", k, r_pred, r_upd, surv)
            if worst > RESIDUAL_TOL:
                raise DegenerateNormalizer(f"normalization residual {worst!r}")
            Lhat, states = estimate_states(est_src)
        except TrackingError as e:
            e.step = k
            e.args = (f"step {k}: {e}",)
            raise
        dist = ospa(scan.truth, (Lhat, states), cfg.ospa_cutoff, cfg.ospa_order)
        results.append(StepResult(k, post, Lhat, states, r_pred, r_upd, surv, _n_hyp(post), dist))
        d = post
    return results


def equivalence_gap(slc: SlcDensity, glmb: GlmbDensity) -> tuple[float, float]:
    """Largest weight and spatial-parameter differences between two densities.

    Weights compare ``omega(L) alpha_o^L`` to ``w^o(L)`` over the union of
    supports; spatial pdfs compare every mixture parameter.  Mismatched
    mixture shapes count as ``inf``.
    """
    a = {(o, L): w for o, L, w in slc.pairs()}
    b = glmb.weights
    dw = max((abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in set(a) | set(b)), default=0.0)
    ds = 0.0
    keys = {(o, l) for (o, L) in set(a) | set(b) for l in L}
    for key in keys:
        s1, s2 = slc.spatial.get(key), glmb.spatial.get(key)
        if s1 is s2:
            continue
        if s1 is None or s2 is None:
            return dw, float("inf")
        if s1.weights.shape != s2.weights.shape or s1.means.shape != s2.means.shape:
            return dw, float("inf")
        ds = max(
            ds,
            abs(s1.weights - s2.weights).max(),
            abs(s1.means - s2.means).max(),
            abs(s1.covs - s2.covs).max(),
        )
    return dw, float(ds)
