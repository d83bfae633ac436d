"""Gaussian-mixture spatial densities and the single-target functionals.

Survival and detection probabilities are constants.  Everything that the
GLMB recursions need from a single target reduces to four calls:
:func:`survival_mass`, :func:`predict_pdf`, :func:`detection_functional`
(or its log form) and :func:`detection_update_pdf`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateNormalizer, ZeroClutterDensity

NORMALIZER_FLOOR = 1e-300
LOG_FLOOR = -690.0

__all__ = [
    "SpatialPdf",
    "MotionModel",
    "SensorModel",
    "gaussian_logpdf",
    "survival_mass",
    "predict_pdf",
    "detection_functional",
    "log_detection_functional",
    "detection_update_pdf",
    "NORMALIZER_FLOOR",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def log_sum_exp(a) -> float:
    """1-D log-sum-exp; scipy's version carries too much per-call overhead for the hot paths."""
    m = a.max()
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.exp(a - m).sum()))


def _symmetrize(P):
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def gaussian_logpdf(x, means, covs):
    """Log N(x; m_j, P_j) for every point/component pair.

    ``x`` is ``(N, d)``, ``means`` ``(n, d)`` and ``covs`` ``(n, d, d)``; the
    result has shape ``(N, n)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    means = np.atleast_2d(means)
    chol = np.linalg.cholesky(covs)
    d = means.shape[1]
    diff = x[:, None, :] - means[None, :, :]  # (N, n, d)
    # solve L y = diff for every component
    y = np.linalg.solve(chol[None, :, :, :], diff[..., None])[..., 0]
    maha = np.sum(y * y, axis=-1)
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1)), axis=-1)
    return -0.5 * (maha + logdet[None, :] + d * np.log(2.0 * np.pi))


@dataclass(frozen=True, eq=False)
class SpatialPdf:
    """Gaussian mixture ``sum_j w_j N(x; m_j, P_j)`` over the kinematic space."""

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        m = np.asarray(self.means, dtype=float)
        if m.ndim == 1:
            m = m[None, :] if len(w) == 1 else m[:, None]
        P = np.asarray(self.covs, dtype=float)
        d = m.shape[1]
        if P.ndim == 2 and P.shape == (d, d) and len(w) == 1:
            P = P[None]
        elif P.ndim == 1 and d == 1:
            P = P[:, None, None]
        if P.shape != (len(w), d, d) or m.shape[0] != len(w):
            raise ValueError(f"inconsistent mixture shapes: w{w.shape} m{m.shape} P{P.shape}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must be nonnegative and sum to 1, got {w.sum()!r}")
        if not np.allclose(P, np.swapaxes(P, -1, -2), rtol=1e-10, atol=1e-12):
            raise ValueError("covariances must be symmetric")
        np.linalg.cholesky(P)  # raises LinAlgError when not positive definite
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "means", _frozen(m))
        object.__setattr__(self, "covs", _frozen(P))

    @classmethod
    def gaussian(cls, mean, cov):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        return cls(np.ones(1), mean[None, :], cov[None])

    @classmethod
    def from_unnormalized(cls, log_weights, means, covs):
        log_weights = np.asarray(log_weights, dtype=float)
        w = np.exp(log_weights - log_sum_exp(log_weights))
        return cls(w / w.sum(), means, covs)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def __len__(self):
        return len(self.weights)

    def logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1 and self.dim == 1:
            x = x[:, None]
        with np.errstate(divide="ignore"):
            lw = np.log(self.weights)
        return logsumexp(gaussian_logpdf(x, self.means, self.covs) + lw[None, :], axis=1)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def mode(self, max_iter: int = 2000, tol: float = 1e-13) -> np.ndarray:
        """Highest-density point found by mean-shift started at every component mean."""
        if len(self) == 1:
            return self.means[0].copy()
        infos = np.linalg.inv(self.covs)
        info_means = np.einsum("nij,nj->ni", infos, self.means)
        best, best_val = None, -np.inf
        for start in self.means:
            x = start.copy()
            for _ in range(max_iter):
                r = gaussian_logpdf(x, self.means, self.covs)[0] + np.log(np.maximum(self.weights, 1e-320))
                r = np.exp(r - r.max())
                A = np.einsum("n,nij->ij", r, infos)
                b = r @ info_means
                x_new = np.linalg.solve(A, b)
                step = np.max(np.abs(x_new - x))
                x = x_new
                if step < tol:
                    break
            val = self.logpdf(x[None, :])[0]
            if val > best_val:
                best, best_val = x, val
        return best

    def allclose(self, other: "SpatialPdf", atol: float = 1e-10) -> bool:
        return (
            self.weights.shape == other.weights.shape
            and self.means.shape == other.means.shape
            and np.allclose(self.weights, other.weights, rtol=0, atol=atol)
            and np.allclose(self.means, other.means, rtol=0, atol=atol)
            and np.allclose(self.covs, other.covs, rtol=0, atol=atol)
        )

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covs": self.covs.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpatialPdf":
        return cls(data["weights"], data["means"], data["covs"])


@dataclass(frozen=True, eq=False)
class MotionModel:
    transition: np.ndarray
    process_noise: np.ndarray
    survival_prob: float

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.transition, dtype=float))
        Q = np.atleast_2d(np.asarray(self.process_noise, dtype=float))
        if F.shape[0] != F.shape[1] or Q.shape != F.shape:
            raise ValueError(f"transition {F.shape} and process noise {Q.shape} disagree")
        if not 0.0 <= self.survival_prob <= 1.0:
            raise ValueError("survival_prob must lie in [0, 1]")
        if np.any(np.linalg.eigvalsh(_symmetrize(Q)) < -1e-12):
            raise ValueError("process noise must be positive semidefinite")
        object.__setattr__(self, "transition", _frozen(F))
        object.__setattr__(self, "process_noise", _frozen(Q))
        object.__setattr__(self, "survival_prob", float(self.survival_prob))

    @property
    def dim(self) -> int:
        return self.transition.shape[0]


@dataclass(frozen=True, eq=False)
class SensorModel:
    """Linear-Gaussian sensor with Poisson clutter uniform over a box.

    ``clutter_region`` is a ``(dim_z, 2)`` array of ``[low, high]`` bounds;
    the clutter intensity inside it is ``clutter_rate / volume``.
    """

    observation: np.ndarray
    measurement_noise: np.ndarray
    detection_prob: float
    clutter_rate: float
    clutter_region: np.ndarray = field(default=None)

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.observation, dtype=float))
        R = np.atleast_2d(np.asarray(self.measurement_noise, dtype=float))
        if R.shape != (H.shape[0], H.shape[0]):
            raise ValueError(f"observation {H.shape} and noise {R.shape} disagree")
        np.linalg.cholesky(R)
        if not 0.0 <= self.detection_prob <= 1.0:
            raise ValueError("detection_prob must lie in [0, 1]")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be nonnegative")
        region = self.clutter_region
        if region is None:
            region = np.tile([-1.0, 1.0], (H.shape[0], 1))
        region = np.atleast_2d(np.asarray(region, dtype=float))
        if region.shape != (H.shape[0], 2) or np.any(region[:, 1] <= region[:, 0]):
            raise ValueError("clutter_region must be (dim_z, 2) with low < high")
        object.__setattr__(self, "observation", _frozen(H))
        object.__setattr__(self, "measurement_noise", _frozen(R))
        object.__setattr__(self, "clutter_region", _frozen(region))
        object.__setattr__(self, "detection_prob", float(self.detection_prob))
        object.__setattr__(self, "clutter_rate", float(self.clutter_rate))

    @property
    def meas_dim(self) -> int:
        return self.observation.shape[0]

    @property
    def volume(self) -> float:
        return float(np.prod(self.clutter_region[:, 1] - self.clutter_region[:, 0]))

    def clutter_intensity(self, z) -> float:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        inside = np.all((z >= self.clutter_region[:, 0]) & (z <= self.clutter_region[:, 1]))
        return self.clutter_rate / self.volume if inside else 0.0


def survival_mass(s: SpatialPdf, model: MotionModel) -> float:
    return model.survival_prob


def predict_pdf(s: SpatialPdf, model: MotionModel) -> SpatialPdf:
    if survival_mass(s, model) < NORMALIZER_FLOOR:
        raise DegenerateNormalizer("survival mass is zero; nothing to predict")
    F, Q = model.transition, model.process_noise
    means = s.means @ F.T
    covs = _symmetrize(F @ s.covs @ F.T + Q)
    return SpatialPdf(s.weights, means, covs)


def _innovation(s: SpatialPdf, sensor: SensorModel):
    H, R = sensor.observation, sensor.measurement_noise
    zhat = s.means @ H.T
    S = _symmetrize(H @ s.covs @ H.T + R)
    return zhat, S


def log_detection_functional(s: SpatialPdf, sensor: SensorModel, z=None) -> float:
    """``log s[L^theta]``: the missed-detection mass or the clutter-scaled likelihood of ``z``."""
    pd = sensor.detection_prob
    if z is None:
        return np.log(1.0 - pd) if pd < 1.0 else -np.inf
    kappa = sensor.clutter_intensity(z)
    if kappa <= 0.0:
        raise ZeroClutterDensity(f"clutter intensity is zero at z={np.ravel(z).tolist()}")
    if pd <= 0.0:
        return -np.inf
    zhat, S = _innovation(s, sensor)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    ll = gaussian_logpdf(z, zhat, S)[0]
    with np.errstate(divide="ignore"):
        lw = np.log(s.weights)
    return float(np.log(pd) - np.log(kappa) + log_sum_exp(ll + lw))


def detection_functional(s: SpatialPdf, sensor: SensorModel, z=None) -> float:
    return float(np.exp(log_detection_functional(s, sensor, z)))


def detection_update_pdf(s: SpatialPdf, sensor: SensorModel, z=None) -> SpatialPdf:
    """Posterior mixture after a missed detection (``z is None``) or a detection ``z``."""
    if log_detection_functional(s, sensor, z) < LOG_FLOOR:
        raise DegenerateNormalizer("detection functional below floor")
    if z is None:
        return s
    H, R = sensor.observation, sensor.measurement_noise
    z = np.atleast_1d(np.asarray(z, dtype=float))
    zhat, S = _innovation(s, sensor)
    n, d = s.means.shape
    means = np.empty_like(s.means)
    covs = np.empty_like(s.covs)
    logw = np.empty(n)
    eye = np.eye(d)
    with np.errstate(divide="ignore"):
        lw = np.log(s.weights)
    for j in range(n):
        P = s.covs[j]
        K = np.linalg.solve(S[j], H @ P).T  # P H' S^-1
        means[j] = s.means[j] + K @ (z - zhat[j])
        A = eye - K @ H
        covs[j] = _symmetrize(A @ P @ A.T + K @ R @ K.T)
        logw[j] = lw[j] + gaussian_logpdf(z, zhat[j:j + 1], S[j:j + 1])[0, 0]
    return SpatialPdf.from_unnormalized(logw, means, covs)
