"""Gauss-Hermite rules and the marginal likelihood of fuzzy ratings.

The ability is integrated out with the change of variable
``eta = sigma * sqrt(2) * gamma_h + x @ beta`` so that the physicists' rule
(weight ``exp(-x**2)``) applies directly.  All constants are kept, so the
returned log-likelihood is absolute.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import logsumexp

from .fuzzymix import FuzzyRating, check_rating, log_conditional
from .irtree import TreeSpec, expand_alpha
from .params import ParamVector

DEFAULT_H = 30
PROB_FLOOR = 1e-300
LOG_FLOOR = np.log(PROB_FLOOR)


class UnderflowWarning(RuntimeWarning):
    """Some observations had marginal probability below the floor and were clamped."""


@dataclass(frozen=True)
class GHRule:
    gamma: np.ndarray
    omega: np.ndarray

    @property
    def H(self) -> int:
        return self.gamma.size

    @property
    def log_omega(self) -> np.ndarray:
        return np.log(self.omega)


def _hermite_tail(x, n):
    """Orthonormal Hermite recurrence (weight exp(-x^2)) up to degree ``n``, rescaled.

    Returns ``(p_{n-1}, p_n, sum_{k<n} p_k^2, log_scale)`` where the true
    values are the returned ones times ``exp(log_scale)`` (squared for the sum).
    Rescaling keeps large H and outer nodes from overflowing.
    """
    prev = np.zeros_like(x)
    cur = np.full_like(x, np.pi ** -0.25)
    acc = cur * cur
    log_scale = np.zeros_like(x)
    for k in range(1, n + 1):
        prev, cur = cur, np.sqrt(2.0 / k) * x * cur - np.sqrt((k - 1) / k) * prev
        if k < n:
            acc = acc + cur * cur
        big = np.abs(cur) > 1e100
        if big.any():
            f = np.where(big, np.abs(cur), 1.0)
            cur, prev, acc = cur / f, prev / f, acc / (f * f)
            log_scale = log_scale + np.log(f)
    return prev, cur, acc, log_scale


@lru_cache(maxsize=64)
def _gauss_hermite(H: int):
    if H == 1:
        return np.zeros(1), np.array([np.sqrt(np.pi)])
    # Golub-Welsch: eigenvalues of the Jacobi matrix of the Hermite recurrence
    k = np.arange(1, H)
    x = eigh_tridiagonal(np.zeros(H), np.sqrt(k / 2.0), eigvals_only=True)
    # one Newton step on p_H refines the nodes; p_H' = sqrt(2H) p_{H-1}
    pm1, pH, _, _ = _hermite_tail(x, H)
    x = x - pH / (np.sqrt(2.0 * H) * pm1)
    # Christoffel weights keep full relative accuracy for the small outer weights,
    # which the squared first eigenvector components lose beyond H ~ 40
    _, _, acc, log_scale = _hermite_tail(x, H)
    w = np.exp(-2.0 * log_scale) / acc
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    w *= np.sqrt(np.pi) / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_hermite(H: int) -> GHRule:
    """H-point Gauss-Hermite rule for the weight ``exp(-x**2)``.

    Beyond roughly H = 350 the outermost weights fall below the smallest
    double and are returned as 0.
    """
    if int(H) != H or H < 1:
        raise ValueError(f"H must be a positive integer, got {H!r}")
    x, w = _gauss_hermite(int(H))
    return GHRule(x, w)


def log_marginal_terms(tree: TreeSpec, c, l, r, X, alpha, beta, sigma, rule: GHRule):
    """Per-observation log marginal probabilities (no floor applied).

    ``X`` is the (I, K) design; ``alpha`` must already have N entries.  The
    marginal is even in ``sigma`` because the rule is symmetric, so callers
    doing finite differences may step across zero.
    """
    c = np.asarray(c)[:, None]
    l = np.asarray(l)[:, None]
    r = np.asarray(r)[:, None]
    X = np.asarray(X, dtype=float).reshape(c.shape[0], -1)
    mu = X @ np.asarray(beta, dtype=float) if X.shape[1] else np.zeros(c.shape[0])
    eta = mu[:, None] + sigma * np.sqrt(2.0) * rule.gamma[None, :]
    logc = log_conditional(tree, c, l, r, eta, alpha)
    with np.errstate(divide="ignore"):
        return logsumexp(logc + rule.log_omega, axis=1) - 0.5 * np.log(np.pi)


def marginal_pmf(y, theta: ParamVector, x, tree: TreeSpec, rule: GHRule | None = None) -> float:
    """Probability of ``y = (c, l, r)`` with the ability integrated out."""
    rule = rule or gauss_hermite(DEFAULT_H)
    c, l, r = (y.c, y.l, y.r) if isinstance(y, FuzzyRating) else y
    check_rating(c, l, r, tree.M)
    theta.check()
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    if x.shape[1] != theta.n_beta:
        raise ValueError(f"covariate row has {x.shape[1]} entries; beta has {theta.n_beta}")
    alpha = expand_alpha(theta.alpha, tree.N)
    out = log_marginal_terms(tree, [c], [l], [r], x, alpha, theta.beta, theta.sigma, rule)
    return float(np.exp(out[0]))


def log_likelihood_terms(ratings, X, theta: ParamVector, tree: TreeSpec,
                         rule: GHRule | None = None, warn: bool = True):
    """Floored per-observation log marginals and the count of clamped rows."""
    rule = rule or gauss_hermite(DEFAULT_H)
    alpha = expand_alpha(theta.alpha, tree.N)
    terms = log_marginal_terms(tree, ratings.c, ratings.l, ratings.r, X,
                               alpha, theta.beta, theta.sigma, rule)
    low = ~(terms > LOG_FLOOR)
    n_low = int(low.sum())
    if n_low:
        terms = np.where(low, LOG_FLOOR, terms)
        if warn:
            warnings.warn(f"{n_low} observation(s) clamped at probability {PROB_FLOOR:g}",
                          UnderflowWarning, stacklevel=2)
    return terms, n_low


def log_likelihood(ratings, X, theta: ParamVector, tree: TreeSpec,
                   rule: GHRule | None = None) -> float:
    """Marginal log-likelihood of a dataset.

    ``ratings`` is anything with integer arrays ``c``, ``l``, ``r`` (for
    instance a :class:`~fuzzyirtree.data.Dataset`); ``X`` is the design
    matrix matching ``theta.beta``.  Terms are summed with ``math.fsum``
    (exactly rounded, so independent of order).
    """
    theta.check()
    terms, _ = log_likelihood_terms(ratings, X, theta, tree, rule)
    return math.fsum(terms)
