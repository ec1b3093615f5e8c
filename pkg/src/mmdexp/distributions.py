"""Probability models, seeded samplers and KL divergence.

Samples are plain ``(n, d)`` float arrays; :func:`as_sample` validates and
reshapes anything array-like into that form.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

PMF_TOL = 1e-12


def as_sample(data, name: str = "sample") -> np.ndarray:
    """Return ``data`` as a finite ``(n, d)`` float64 array.

    One-dimensional input is read as ``n`` scalar observations.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name} must have at least one row")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finite pmf over distinct points of R^d."""

    support: np.ndarray
    pmf: np.ndarray

    def __post_init__(self):
        support = as_sample(self.support, "support")
        pmf = np.asarray(self.pmf, dtype=np.float64).ravel()
        if pmf.shape[0] != support.shape[0]:
            raise ValueError("support and pmf lengths differ")
        if np.any(pmf < 0):
            raise ValueError("pmf has negative entries")
        if abs(pmf.sum() - 1.0) > PMF_TOL:
            raise ValueError(f"pmf sums to {pmf.sum()!r}, not 1")
        if len(np.unique(support, axis=0)) != len(support):
            raise ValueError("support points must be pairwise distinct")
        support.setflags(write=False)
        pmf.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "pmf", pmf)

    @classmethod
    def on_alphabet(cls, pmf, points=None) -> "DiscreteDistribution":
        """Distribution over symbols embedded at ``0, 1, ..., t-1`` (or ``points``)."""
        pmf = np.asarray(pmf, dtype=np.float64)
        if points is None:
            points = np.arange(len(pmf), dtype=np.float64)
        return cls(points, pmf)

    @property
    def size(self) -> int:
        return self.pmf.shape[0]

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        if self.dim != other.dim:
            return False
        _, p, q = align(self, other)
        return bool(np.array_equal(p, q))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GaussianSpec:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise ValueError(f"mean shape {mean.shape} incompatible with cov shape {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise ValueError("covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise ValueError("covariance is not positive definite")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def isotropic(cls, mean, var: float = 1.0) -> "GaussianSpec":
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        return cls(mean, var * np.eye(mean.shape[0]))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GaussianSpec):
            return NotImplemented
        return bool(np.array_equal(self.mean, other.mean) and np.array_equal(self.cov, other.cov))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    components: tuple
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        if len({c.dim for c in comps}) != 1:
            raise ValueError("mixture components differ in dimension")
        w = (np.full(len(comps), 1.0 / len(comps)) if self.weights is None
             else np.asarray(self.weights, dtype=np.float64).ravel())
        if w.shape[0] != len(comps) or np.any(w < 0) or abs(w.sum() - 1) > PMF_TOL:
            raise ValueError("mixture weights must be a pmf over the components")
        w.setflags(write=False)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def __eq__(self, other):
        if not isinstance(other, GaussianMixture):
            return NotImplemented
        return (len(self.components) == len(other.components)
                and np.array_equal(self.weights, other.weights)
                and all(a == b for a, b in zip(self.components, other.components)))

    __hash__ = None


Distribution = Union[DiscreteDistribution, GaussianSpec, GaussianMixture]


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _gaussian_draw(g: GaussianSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    chol = np.linalg.cholesky(g.cov)
    return g.mean + rng.standard_normal((n, g.dim)) @ chol.T


def sample(dist: Distribution, n: int, seed) -> np.ndarray:
    """Draw ``n`` i.i.d. rows from ``dist``.

    ``seed`` is anything ``numpy.random.default_rng`` accepts, or a Generator.
    The same ``(dist, n, seed)`` always gives the same array.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    if isinstance(dist, DiscreteDistribution):
        idx = rng.choice(dist.size, size=n, p=dist.pmf)
        return dist.support[idx].copy()
    if isinstance(dist, GaussianSpec):
        return _gaussian_draw(dist, n, rng)
    if isinstance(dist, GaussianMixture):
        labels = rng.choice(len(dist.components), size=n, p=dist.weights)
        out = np.empty((n, dist.dim))
        for j, comp in enumerate(dist.components):
            mask = labels == j
            out[mask] = _gaussian_draw(comp, int(mask.sum()), rng)
        return out
    raise TypeError(f"cannot sample from {type(dist).__name__}")


def empirical(x) -> DiscreteDistribution:
    """Empirical measure of a sample, as a pmf over its distinct rows."""
    x = as_sample(x)
    points, counts = np.unique(x, axis=0, return_counts=True)
    return DiscreteDistribution(points, counts / counts.sum())


def align(p: DiscreteDistribution, q: DiscreteDistribution):
    """Put ``p`` and ``q`` on the union of their supports.

    Returns ``(support, p_pmf, q_pmf)``; points absent from one side get
    mass 0 there. Point order follows ``p`` then the new points of ``q``.
    """
    if p.dim != q.dim:
        raise ValueError("distributions live in different dimensions")
    index = {tuple(row): i for i, row in enumerate(p.support)}
    extra = []
    q_pos = np.empty(q.size, dtype=np.intp)
    for j, row in enumerate(q.support):
        key = tuple(row)
        if key not in index:
            index[key] = p.size + len(extra)
            extra.append(row)
        q_pos[j] = index[key]
    support = np.vstack([p.support] + [np.asarray(extra)] if extra else [p.support])
    pp = np.zeros(len(support))
    qq = np.zeros(len(support))
    pp[: p.size] = p.pmf
    qq[q_pos] = q.pmf
    return support, pp, qq


def kld_vec(p, q) -> float:
    """KL divergence in nats between two aligned pmf vectors."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    pos = p > 0
    if np.any(q[pos] == 0):
        return np.inf
    return float(np.sum(p[pos] * (np.log(p[pos]) - np.log(q[pos]))))


def kld_gaussian(p: GaussianSpec, q: GaussianSpec) -> float:
    d = p.dim
    q_inv = np.linalg.inv(q.cov)
    diff = q.mean - p.mean
    _, logdet_p = np.linalg.slogdet(p.cov)
    _, logdet_q = np.linalg.slogdet(q.cov)
    return 0.5 * float(np.trace(q_inv @ p.cov) + diff @ q_inv @ diff - d + logdet_q - logdet_p)


def kld(p, q) -> float:
    """D(p || q) in nats; ``inf`` when p is not absolutely continuous w.r.t. q."""
    if isinstance(p, GaussianSpec) and isinstance(q, GaussianSpec):
        return kld_gaussian(p, q)
    _, pp, qq = align(p, q)
    return kld_vec(pp, qq)


# -- JSON ---------------------------------------------------------------------

def to_dict(dist: Distribution) -> dict:
    if isinstance(dist, DiscreteDistribution):
        return {"type": "discrete", "support": dist.support.tolist(), "pmf": dist.pmf.tolist()}
    if isinstance(dist, GaussianSpec):
        return {"type": "gaussian", "mean": dist.mean.tolist(), "cov": dist.cov.tolist()}
    if isinstance(dist, GaussianMixture):
        return {"type": "mixture", "weights": dist.weights.tolist(),
                "components": [to_dict(c) for c in dist.components]}
    raise TypeError(f"cannot serialize {type(dist).__name__}")


def from_dict(obj: dict) -> Distribution:
    kind = obj.get("type")
    if kind == "discrete":
        return DiscreteDistribution(obj["support"], obj["pmf"])
    if kind == "gaussian":
        return GaussianSpec(obj["mean"], obj["cov"])
    if kind == "mixture":
        return GaussianMixture(tuple(from_dict(c) for c in obj["components"]), obj.get("weights"))
    raise ValueError(f"unknown distribution type {kind!r}")


def dumps(dist: Distribution) -> str:
    return json.dumps(to_dict(dist))


def loads(text: str) -> Distribution:
    return from_dict(json.loads(text))
