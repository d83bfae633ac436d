"""Brute-force ground truth on a discretized single-target space.

Every labeled finite set of at most ``max_cardinality`` targets over a grid
is enumerated explicitly.  A :class:`DiscreteDensity` stores, for each label
set ``L`` (sorted), an array of shape ``(G,) * |L|`` with axis ``i`` holding
the kinematic coordinate of the ``i``-th label.  Nothing here calls the
closed-form recursions; the point is to check them.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import factorial

import numpy as np

from .errors import CardinalityOverflow, DegenerateNormalizer, StepUnderflow
from .labels import LabeledState, label_set, subsets

__all__ = [
    "DiscreteScene",
    "DiscreteDensity",
    "discretize",
    "set_integral",
    "tv_distance",
    "gaussian_likelihood",
    "bayes_update_bruteforce",
    "pgfl_eval",
    "functional_derivative_fd",
]


@dataclass(frozen=True, eq=False)
class DiscreteScene:
    grid: np.ndarray
    cell_measure: float
    labels: tuple
    max_cardinality: int = 2
    max_entries: int = 30_000_000

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim == 1:
            g = g[:, None]
        if len(np.unique(g, axis=0)) != len(g):
            raise ValueError("grid points must be distinct")
        if self.cell_measure <= 0:
            raise ValueError("cell measure must be positive")
        if len(self.labels) > 3 or self.max_cardinality > 3:
            raise ValueError("the oracle handles at most 3 labels and cardinality 3")
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "labels", label_set(self.labels))

    @classmethod
    def uniform(cls, low, high, n, labels, max_cardinality=2, **kw):
        """1-D grid of ``n`` cell centres covering ``[low, high]``."""
        edges = np.linspace(low, high, n + 1)
        return cls(0.5 * (edges[1:] + edges[:-1]), (high - low) / n, labels, max_cardinality, **kw)

    @property
    def size(self) -> int:
        return len(self.grid)

    def label_sets(self):
        for L in subsets(self.labels):
            if len(L) <= self.max_cardinality:
                yield L

    def check_size(self):
        entries = sum(self.size ** len(L) for L in self.label_sets())
        if entries > self.max_entries:
            raise CardinalityOverflow(f"{entries} grid entries exceed {self.max_entries}")

    def cell_of(self, x) -> int:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return int(np.argmin(np.sum((self.grid - x) ** 2, axis=1)))


@dataclass(frozen=True, eq=False)
class DiscreteDensity:
    values: dict
    scene: DiscreteScene

    def __mul__(self, other):
        if isinstance(other, DiscreteDensity):
            return DiscreteDensity({L: v * other.values[L] for L, v in self.values.items()}, self.scene)
        return DiscreteDensity({L: v * other for L, v in self.values.items()}, self.scene)

    __rmul__ = __mul__

    def __sub__(self, other):
        return DiscreteDensity({L: v - other.values[L] for L, v in self.values.items()}, self.scene)

    def __abs__(self):
        return DiscreteDensity({L: np.abs(v) for L, v in self.values.items()}, self.scene)

    def __call__(self, labels):
        """Array of values for an ordered label tuple (zero for repeated labels)."""
        if len(set(labels)) != len(labels):
            return 0.0
        key = label_set(labels)
        arr = self.values.get(key)
        if arr is None:
            return 0.0
        order = [key.index(l) for l in labels]
        return np.transpose(arr, order) if len(order) > 1 else arr


def _outer(vectors):
    out = np.ones(())
    for v in vectors:
        out = np.multiply.outer(out, v)
    return out


def discretize(d, scene: DiscreteScene) -> DiscreteDensity:
    """Tabulate a GLMB or SLC density on the scene grid."""
    scene.check_size()
    pairs = d.pairs() if hasattr(d, "pairs") else ((o, L, w) for (o, L), w in sorted(d.weights.items()))
    values = {L: np.zeros((scene.size,) * len(L)) for L in scene.label_sets()}
    cache = {}
    for o, L, w in pairs:
        if L not in values:
            if w > 0 and not set(L) <= set(scene.labels):
                raise ValueError(f"label set {L} is outside the scene")
            continue
        vecs = []
        for l in L:
            s = d.spatial[(o, l)]
            if id(s) not in cache:
                cache[id(s)] = s.pdf(scene.grid)
            vecs.append(cache[id(s)])
        values[L] = values[L] + w * _outer(vecs)
    return DiscreteDensity(values, scene)


def set_integral(f, scene: DiscreteScene) -> float:
    """Cardinality-stratified sum over ordered label tuples and grid tuples.

    ``f`` is a :class:`DiscreteDensity` or a callable mapping an ordered
    label tuple to an array over ``grid ** n``.  Tuples with a repeated label
    are not labeled finite sets and contribute nothing.
    """
    scene.check_size()
    total = 0.0
    for n in range(scene.max_cardinality + 1):
        stratum = 0.0
        for labels in product(scene.labels, repeat=n):
            if len(set(labels)) != n:
                continue
            val = f(labels)
            stratum += float(np.sum(val)) * scene.cell_measure ** n
        total += stratum / factorial(n)
    return total


def tv_distance(f1: DiscreteDensity, f2: DiscreteDensity) -> float:
    return 0.5 * set_integral(abs(f1 - f2), f1.scene)


def gaussian_likelihood(sensor):
    """Standard point-target multitarget likelihood, tabulated on the grid.

    ``f(Z|X) = exp(-lambda) prod_z kappa(z) * sum over injective
    target-to-measurement maps of prod(missed or p_D g(z|x) / kappa(z))``.
    """
    H, R, pd = sensor.observation, sensor.measurement_noise, sensor.detection_prob
    Rinv = np.linalg.inv(R)
    norm = 1.0 / np.sqrt(np.linalg.det(2 * np.pi * R))

    def lik(Z, labels, grid):
        Z = [np.atleast_1d(np.asarray(z, dtype=float)) for z in Z]
        G = len(grid)
        n = len(labels)
        kappas = [sensor.clutter_intensity(z) for z in Z]
        base = np.exp(-sensor.clutter_rate) * np.prod(kappas)
        hx = grid @ H.T
        g = []
        for z, kz in zip(Z, kappas):
            r = z[None, :] - hx
            gz = norm * np.exp(-0.5 * np.einsum("gi,ij,gj->g", r, Rinv, r))
            g.append(pd * gz / kz)
        total = np.zeros((G,) * n)
        # each target independently picks a distinct measurement or none
        for choice in product(range(len(Z) + 1), repeat=n):
            used = [c for c in choice if c]
            if len(used) != len(set(used)):
                continue
            factors = [g[c - 1] if c else np.full(G, 1.0 - pd) for c in choice]
            total = total + _outer(factors)
        return base * total

    return lik


def bayes_update_bruteforce(prior: DiscreteDensity, likelihood, Z, scene: DiscreteScene) -> DiscreteDensity:
    """Pointwise prior times likelihood, normalized by its set integral."""
    scene.check_size()
    post = {L: prior.values[L] * likelihood(Z, L, scene.grid) for L in prior.values}
    unnorm = DiscreteDensity(post, scene)
    mass = set_integral(unnorm, scene)
    if not mass > 1e-300:
        raise DegenerateNormalizer(f"posterior mass {mass!r}")
    return unnorm * (1.0 / mass)


def _h_array(h, scene):
    if callable(h):
        h = np.array([[h(x, l) for x in scene.grid] for l in scene.labels], dtype=float)
    h = np.asarray(h, dtype=float)
    if h.ndim == 0:
        h = np.full((len(scene.labels), scene.size), float(h))
    if h.shape != (len(scene.labels), scene.size):
        raise ValueError(f"test function must have shape {(len(scene.labels), scene.size)}")
    return h


def _pgfl_parts(d, dev, scene):
    """Return ``(G[1], G[h] - G[1])`` for ``h = 1 + dev``, without cancellation."""
    lidx = {l: i for i, l in enumerate(scene.labels)}
    dx = scene.cell_measure
    if isinstance(d, DiscreteDensity):
        mass, excess = 0.0, 0.0
        for L, arr in d.values.items():
            n = len(L)
            mass += float(arr.sum()) * dx ** n
            if n == 0:
                continue
            rows = [dev[lidx[l]] for l in L]
            ones = np.ones(scene.size)
            # prod(1 + dev_i) - 1 expanded over nonempty subsets of axes
            delta = np.zeros((scene.size,) * n)
            for mask in product((0, 1), repeat=n):
                if any(mask):
                    delta = delta + _outer([r if m else ones for r, m in zip(rows, mask)])
            excess += float(np.sum(arr * delta)) * dx ** n
        return mass, excess
    pairs = d.pairs() if hasattr(d, "pairs") else ((o, L, w) for (o, L), w in sorted(d.weights.items()))
    cache = {}
    mass, excess = 0.0, 0.0
    for o, L, w in pairs:
        mass += w
        if not L:
            continue
        us = []
        for l in L:
            s = d.spatial[(o, l)]
            key = (id(s), l)
            if key not in cache:
                if l in lidx:
                    cache[key] = float(s.pdf(scene.grid) @ dev[lidx[l]]) * dx
                else:
                    cache[key] = 0.0
            us.append(cache[key])
        us = np.array(us)
        if np.all(us > -0.5):
            term = np.expm1(np.sum(np.log1p(us)))
        else:
            term = np.prod(1.0 + us) - 1.0
        excess += w * term
    return mass, excess


def pgfl_eval(d, h, scene: DiscreteScene) -> float:
    """``G[h] = integral of h^X f(X) dX`` for a test function ``0 <= h <= 1``.

    For GLMB/SLC densities this is the product formula with each ``s_l[h]``
    computed by grid quadrature; for discrete densities it is the explicit
    sum over the enumerated sets.
    """
    h = _h_array(h, scene)
    if np.any(h < 0) or np.any(h > 1):
        raise ValueError("test function must lie in [0, 1]")
    mass, excess = _pgfl_parts(d, h - 1.0, scene)
    return mass + excess


def functional_derivative_fd(d, points, scene: DiscreteScene, h0=None, eps: float = 1e-4, log: bool = False, richardson: bool = True) -> float:
    """Central finite-difference functional derivative of ``G`` (or ``log G``).

    Each Dirac mass ``delta_(x, l)`` is realized as ``1 / cell_measure`` on the
    grid cell nearest ``x`` in label row ``l``.  At most two points.
    """
    points = list(points)
    if len(points) > 2:
        raise ValueError("at most second-order derivatives are supported")
    if eps < 1e-10:
        raise StepUnderflow(f"step {eps!r} is below the supported resolution")
    dev0 = (np.ones((len(scene.labels), scene.size)) if h0 is None else _h_array(h0, scene)) - 1.0
    bumps = []
    for p in points:
        if not isinstance(p, LabeledState):
            raise TypeError("points must be LabeledState instances")
        b = np.zeros_like(dev0)
        if p.label in scene.labels:
            b[scene.labels.index(p.label), scene.cell_of(p.x)] = 1.0 / scene.cell_measure
        bumps.append(b)

    mass0, excess0 = _pgfl_parts(d, dev0, scene)

    def F(shifts):
        dev = dev0 + sum((e * b for e, b in zip(shifts, bumps)), np.zeros_like(dev0))
        mass, excess = _pgfl_parts(d, dev, scene)
        if log:
            # log G - log G[h0], formed from differences to keep precision
            return np.log1p((excess - excess0) / (mass0 + excess0))
        return excess - excess0

    def D(e):
        if len(points) == 0:
            return F(())
        if len(points) == 1:
            return (F((e,)) - F((-e,))) / (2 * e)
        return (F((e, e)) - F((e, -e)) - F((-e, e)) + F((-e, -e))) / (4 * e * e)

    if len(points) == 0:
        G0 = mass0 + excess0
        return float(np.log(G0) if log else G0)
    if not richardson:
        return float(D(eps))
    return float((4.0 * D(eps / 2) - D(eps)) / 3.0)
