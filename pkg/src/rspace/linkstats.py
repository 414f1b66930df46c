"""Statistics for probabilistic intersection-link placement.

A coordinate is summarised by a weight vector (relative level, resources
under it).  The Mahalanobis distance between two coordinates' vectors is fed
into a link-probability function; all probability variants belong to one
family indexed by an exponent ``a``::

    P_a(x) = sigmoid(x) / (a * softplus(x) ** (1 - 1/a))
    E_a(n) = softplus(n) ** (1/a) - ln(2) ** (1/a)      # integral of P_a over [0, n]

``a = 1`` is the logistic function, ``a = 2`` the bounded variant whose
expected link count grows like sqrt(n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .space import CoordinatePath, Dimension

LOGISTIC = "logistic"
BOUNDED = "bounded"
GENERAL = "general"

PROB_EPS = 1e-12
SINGULAR_DET = 1e-12
RIDGE_SCALE = 1e-6
FULL_SAMPLE_LIMIT = 1024


@dataclass(frozen=True)
class LinkPolicy:
    variant: str = BOUNDED
    a: Optional[float] = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.variant not in (LOGISTIC, BOUNDED, GENERAL):
            raise ValueError(f"unknown link policy {self.variant!r}")
        if self.variant == GENERAL and (self.a is None or not self.a > 1):
            raise ValueError("GENERAL link policy needs a > 1")

    @property
    def exponent(self) -> float:
        if self.variant == LOGISTIC:
            return 1.0
        if self.variant == BOUNDED:
            return 2.0
        return float(self.a)

    @classmethod
    def parse(cls, text: str, rng_seed: int = 0) -> "LinkPolicy":
        """Parse ``logistic``, ``bounded`` or ``general:<a>``."""
        text = text.strip().lower()
        if text.startswith(GENERAL):
            _, _, a = text.partition(":")
            try:
                return cls(GENERAL, float(a), rng_seed)
            except ValueError:
                raise ValueError(f"bad policy {text!r}; use general:<a> with a > 1") from None
        return cls(text, None, rng_seed)

    def __str__(self) -> str:
        if self.variant == GENERAL:
            return f"{GENERAL}:{self.a:g}"
        return self.variant


@dataclass(frozen=True)
class WeightVector:
    rel_level: float
    res_count: float

    def __post_init__(self):
        if not 0.0 <= self.rel_level <= 1.0:
            raise ValueError(f"relative level {self.rel_level} outside [0, 1]")
        if self.res_count < 0:
            raise ValueError("resource count must be non-negative")

    def as_tuple(self) -> Tuple[float, float]:
        return (self.rel_level, self.res_count)


@dataclass(frozen=True)
class Covariance2:
    entries: np.ndarray
    inverse: np.ndarray
    ridge: float = 0.0

    @classmethod
    def from_matrix(cls, s: np.ndarray) -> "Covariance2":
        s = np.asarray(s, dtype=float)
        s = (s + s.T) / 2.0
        ridge = 0.0
        if abs(np.linalg.det(s)) < SINGULAR_DET:
            tr = float(np.trace(s))
            ridge = RIDGE_SCALE * tr if tr > 0 else RIDGE_SCALE
            s = s + ridge * np.eye(2)
        return cls(s, np.linalg.inv(s), ridge)


def weight_vector(dim: Dimension, c: CoordinatePath, store) -> WeightVector:
    level = dim.level_of(c)
    rel = level / dim.max_level if dim.max_level > 0 else 0.0
    return WeightVector(rel, float(store.count_under(dim, c)))


def covariance_inverse(samples: Sequence[WeightVector]) -> Covariance2:
    if len(samples) < 2:
        raise ValueError("covariance needs at least two samples")
    data = np.array([w.as_tuple() for w in samples], dtype=float)
    centered = data - data.mean(axis=0)
    s = centered.T @ centered / (len(data) - 1)
    return Covariance2.from_matrix(s)


def mahalanobis(w1: WeightVector, w2: WeightVector, cov: Covariance2) -> float:
    dx = w1.rel_level - w2.rel_level
    dy = w1.res_count - w2.res_count
    inv = cov.inverse
    q = float(inv[0, 0]) * dx * dx + float(inv[0, 1] + inv[1, 0]) * dx * dy + float(inv[1, 1]) * dy * dy
    return math.sqrt(q) if q > 0 else 0.0


def _softplus(x: float) -> float:
    # ln(e^x + 1) without overflow
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def link_probability(x: float, policy: LinkPolicy, clamp: Optional[Tuple[float, float]] = None) -> float:
    """Probability of adding an intersection link at distance ``x``.

    ``clamp`` overrides the default ``(PROB_EPS, 1 - PROB_EPS)`` bounds.
    """
    if x < 0:
        raise ValueError("distance must be non-negative")
    a = policy.exponent
    if a == 1.0:
        p = _sigmoid(x)
    else:
        p = _sigmoid(x) / (a * _softplus(x) ** (1.0 - 1.0 / a))
    lo, hi = clamp if clamp is not None else (PROB_EPS, 1.0 - PROB_EPS)
    return min(max(p, lo), hi)


def expected_links(n: float, policy: LinkPolicy) -> float:
    """Expected number of links over distances [0, n] (integral of the probability)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    inv_a = 1.0 / policy.exponent
    return _softplus(n) ** inv_a - math.log(2.0) ** inv_a


def chi2_threshold(d: int, alpha: float) -> float:
    """Upper ``alpha`` critical value of the chi-square distribution with ``d`` dof."""
    from scipy.stats import chi2

    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if int(d) != d or d < 1:
        raise ValueError("degrees of freedom must be a positive integer")
    return float(chi2.ppf(1.0 - alpha, d))


def sample_link(x: float, policy: LinkPolicy, rng, clamp: Optional[Tuple[float, float]] = None) -> bool:
    """Bernoulli draw with success probability ``link_probability(x)``.

    ``rng`` is anything with a ``random()`` method returning a uniform [0, 1) float.
    """
    return rng.random() < link_probability(x, policy, clamp)


# -- sample selection ------------------------------------------------------------


def path_samples(dim: Dimension, store) -> List[WeightVector]:
    """Weight vectors along the heaviest and the lightest root-to-leaf paths.

    Heaviest = largest total resource count over the path's coordinates (ties:
    longer path, then path order); lightest = smallest total (ties: shorter
    path, then path order).
    """
    best_max = best_min = None
    for leaf in dim.leaves():
        path = list(reversed(list(leaf.ancestors())))
        total = sum(store.count_under(dim, c) for c in path)
        kmax = (-total, -len(path), leaf.segments)
        kmin = (total, len(path), leaf.segments)
        if best_max is None or kmax < best_max[0]:
            best_max = (kmax, path)
        if best_min is None or kmin < best_min[0]:
            best_min = (kmin, path)
    coords = list(dict.fromkeys(best_max[1] + best_min[1]))
    return [weight_vector(dim, c, store) for c in coords]


def covariance_samples(dims: Iterable[Dimension], store, limit: int = FULL_SAMPLE_LIMIT) -> List[WeightVector]:
    dims = list(dims)
    if sum(len(d) for d in dims) <= limit:
        return [weight_vector(d, c, store) for d in dims for c in d.coordinates]
    out: List[WeightVector] = []
    for d in dims:
        out.extend(path_samples(d, store))
    return out


class RunningMoments:
    """Incrementally maintained first and second moments of one dimension's weight vectors.

    Updating a coordinate's resource count is O(1), and the covariance of the
    union of several dimensions' samples is assembled from their moments.
    """

    def __init__(self, dim: Dimension, store=None):
        self.n = 0
        self.sx = self.sy = self.sxx = self.syy = self.sxy = 0.0
        self._x = {}
        self._y = {}
        for c in dim.coordinates:
            rel = dim.level_of(c) / dim.max_level if dim.max_level > 0 else 0.0
            y = float(store.count_under(dim, c)) if store is not None else 0.0
            self._x[c] = rel
            self._y[c] = y
            self.n += 1
            self.sx += rel
            self.sxx += rel * rel
            self.sy += y
            self.syy += y * y
            self.sxy += rel * y

    def bump(self, c: CoordinatePath, delta: float = 1.0) -> None:
        x, y = self._x[c], self._y[c]
        self._y[c] = y + delta
        self.sy += delta
        self.syy += 2 * y * delta + delta * delta
        self.sxy += x * delta

    @staticmethod
    def covariance(parts: Sequence["RunningMoments"]) -> Covariance2:
        n = sum(p.n for p in parts)
        if n < 2:
            raise ValueError("covariance needs at least two samples")
        sx = sum(p.sx for p in parts)
        sy = sum(p.sy for p in parts)
        sxx = sum(p.sxx for p in parts)
        syy = sum(p.syy for p in parts)
        sxy = sum(p.sxy for p in parts)
        cxx = (sxx - sx * sx / n) / (n - 1)
        cyy = (syy - sy * sy / n) / (n - 1)
        cxy = (sxy - sx * sy / n) / (n - 1)
        return Covariance2.from_matrix(np.array([[cxx, cxy], [cxy, cyy]]))
