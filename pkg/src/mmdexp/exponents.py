"""Optimal type-II error exponent D* and sample-ratio regime reports.

D*(P, Q; c) = inf_R c D(R||P) + (1-c) D(R||Q). For finite alphabets the
infimum is attained at the normalized geometric mixture R* ~ P^c Q^(1-c),
giving D* = -log sum_x P(x)^c Q(x)^(1-c). ``dstar_oracle`` minimizes the
objective directly and is the independent check of that closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp, roots_hermite
from scipy.stats import multivariate_normal

from .distributions import (DiscreteDistribution, GaussianSpec, align, kld,
                            kld_vec, to_dict)


class OracleNotCertified(RuntimeError):
    """The brute-force minimizer stopped before its optimality gap met the resolution."""


def _check_c(c):
    if not 0 < c < 1:
        raise ValueError(f"c must lie strictly between 0 and 1, got {c!r}")


def _log_geometric_terms(p: np.ndarray, q: np.ndarray, c: float):
    both = (p > 0) & (q > 0)
    terms = np.full(p.shape, -np.inf)
    terms[both] = c * np.log(p[both]) + (1 - c) * np.log(q[both])
    return terms, both


def geometric_mixture(P: DiscreteDistribution, Q: DiscreteDistribution, c: float) -> Optional[DiscreteDistribution]:
    """Minimizer R* ~ P^c Q^(1-c) on the common support; None if the supports are disjoint."""
    _check_c(c)
    support, p, q = align(P, Q)
    terms, both = _log_geometric_terms(p, q, c)
    if not both.any():
        return None
    r = np.exp(terms - logsumexp(terms[both]))
    r /= r.sum()
    return DiscreteDistribution(support, r)


def dstar_discrete(P: DiscreteDistribution, Q: DiscreteDistribution, c: float) -> float:
    _check_c(c)
    _, p, q = align(P, Q)
    terms, both = _log_geometric_terms(p, q, c)
    if not both.any():
        return math.inf
    return max(0.0, -float(logsumexp(terms[both])))


def dstar_gaussian(P: GaussianSpec, Q: GaussianSpec, c: float) -> float:
    """Closed form c(1-c)/2 * dmu' Sigma^-1 dmu; needs a shared covariance."""
    _check_c(c)
    if not np.allclose(P.cov, Q.cov, rtol=0, atol=1e-12):
        raise ValueError("closed form needs equal covariances; use dstar_gaussian_numeric")
    diff = P.mean - Q.mean
    return 0.5 * c * (1 - c) * float(diff @ np.linalg.solve(P.cov, diff))


def dstar_gaussian_numeric(P: GaussianSpec, Q: GaussianSpec, c: float, nodes: int = 80) -> float:
    """-log of the integral of p^c q^(1-c), by tensor Gauss-Hermite quadrature (d <= 3).

    The quadrature is centred on the midpoint of the means with the summed
    covariance as scale, which keeps it independent of the closed form.
    """
    _check_c(c)
    d = P.dim
    if Q.dim != d:
        raise ValueError("dimension mismatch")
    if d > 3:
        raise ValueError("numeric integration is limited to d <= 3")
    u1, w1 = roots_hermite(nodes)
    grids = np.meshgrid(*([u1] * d), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    logw = sum(np.log(g.ravel()) for g in np.meshgrid(*([w1] * d), indexing="ij"))
    center = 0.5 * (P.mean + Q.mean)
    chol = np.linalg.cholesky(P.cov + Q.cov)
    x = center + math.sqrt(2.0) * u @ chol.T
    logf = (c * multivariate_normal(P.mean, P.cov).logpdf(x)
            + (1 - c) * multivariate_normal(Q.mean, Q.cov).logpdf(x))
    logf = np.atleast_1d(logf)
    log_jac = 0.5 * d * math.log(2.0) + float(np.log(np.diag(chol)).sum())
    log_integral = float(logsumexp(logw + (u**2).sum(axis=1) + logf)) + log_jac
    return max(0.0, -log_integral)


def dstar(P, Q, c: float) -> float:
    """Optimal type-II exponent (nats, per total sample) for sample ratio c = n/(n+m)."""
    if isinstance(P, GaussianSpec) and isinstance(Q, GaussianSpec):
        if np.allclose(P.cov, Q.cov, rtol=0, atol=1e-12):
            return dstar_gaussian(P, Q, c)
        return dstar_gaussian_numeric(P, Q, c)
    if isinstance(P, DiscreteDistribution) and isinstance(Q, DiscreteDistribution):
        return dstar_discrete(P, Q, c)
    raise TypeError("dstar needs two DiscreteDistributions or two GaussianSpecs")


# -- brute-force oracle -------------------------------------------------------

def dstar_oracle(P: DiscreteDistribution, Q: DiscreteDistribution, c: float,
                 resolution: float = 1e-9, max_iter: int = 500) -> float:
    """Minimize c D(R||P) + (1-c) D(R||Q) over the simplex by damped Newton descent.

    Iterates from the uniform distribution inside the simplex's affine hull,
    backtracking to keep R strictly positive. Stops once the Frank-Wolfe
    duality gap, which bounds the objective's distance from its minimum,
    drops below ``resolution``; raises :class:`OracleNotCertified` when
    ``max_iter`` runs out first.
    """
    _check_c(c)
    _, p, q = align(P, Q)
    if len(p) > 6:
        raise ValueError("oracle is limited to alphabets of size <= 6")
    live = (p > 0) & (q > 0)
    if not live.any():
        return math.inf
    target = c * np.log(p[live]) + (1 - c) * np.log(q[live])

    def objective(r):
        return float(np.sum(r * (np.log(r) - target)))

    r = np.full(int(live.sum()), 1.0 / live.sum())
    f = objective(r)
    gap = math.inf
    for _ in range(max_iter):
        g = np.log(r) + 1.0 - target
        gap = float(g @ r - g.min())
        if gap <= resolution:
            break
        # Newton direction for the Hessian diag(1/r) restricted to sum(d) = 0
        d = -r * (g - g @ r)
        slope = float(g @ d)
        if -slope < 0.25 and np.all(r + d > 0):
            # quadratic-convergence region: undamped step, objective changes below rounding
            r = (r + d) / (r + d).sum()
            f = objective(r)
            continue
        t = 1.0
        while True:
            cand = r + t * d
            if np.all(cand > 0):
                cand /= cand.sum()
                fc = objective(cand)
                if fc <= f + 0.25 * t * slope or t < 1e-12:
                    break
            t *= 0.5
        if fc >= f and t < 1e-12:
            break
        r, f = cand, fc
    if gap > resolution:
        raise OracleNotCertified(f"duality gap {gap:.3e} above resolution {resolution:.1e}")
    full = np.zeros(len(p))
    full[live] = r
    return c * kld_vec(full, p) + (1 - c) * kld_vec(full, q)


# -- regime report ------------------------------------------------------------

@dataclass(frozen=True)
class ExponentReport:
    c: float
    regime: str          # "balanced" | "degenerate"
    exponent: float
    normalization: str   # "per_total_samples" | "per_smaller_sample"
    minimizer: Optional[DiscreteDistribution] = None

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "regime": self.regime,
            "exponent": self.exponent if math.isfinite(self.exponent) else "inf",
            "normalization": self.normalization,
            "minimizer": None if self.minimizer is None else to_dict(self.minimizer),
        }


def report_for_ratio(P, Q, c: float, degenerate: bool = False) -> ExponentReport:
    """Exponent for an asymptotic ratio c = lim n/(n+m).

    ``degenerate`` declares n/m -> infinity: the exponent is then D(P||Q)
    per sample of the smaller set, and the per-total-sample exponent is 0.
    """
    if degenerate:
        return ExponentReport(c, "degenerate", kld(P, Q), "per_smaller_sample",
                              P if isinstance(P, DiscreteDistribution) else None)
    value = dstar(P, Q, c)
    mix = geometric_mixture(P, Q, c) if isinstance(P, DiscreteDistribution) else None
    return ExponentReport(c, "balanced", value, "per_total_samples", mix)


def exponent_report(P, Q, n: int, m: int, degenerate: bool = False) -> ExponentReport:
    if n < 1 or m < 1:
        raise ValueError("sample sizes must be >= 1")
    return report_for_ratio(P, Q, n / (n + m), degenerate)
