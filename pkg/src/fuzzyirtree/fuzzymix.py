"""Spread stage of the fuzzy response: entropy mixture weight and Binomial spreads.

Given the category probabilities ``pi_y`` and the chosen core ``c``, the left
and right spreads are either both zero (no decision uncertainty) or drawn as
independent Binomials whose success probabilities come from the share of the
non-chosen mass lying below ``c``.  The weight of the uncertain branch is the
normalized Shannon entropy of ``pi_y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from .irtree import TreeSpec, log_category_probs


@dataclass(frozen=True)
class FuzzyRating:
    """Triangular fuzzy response with integer core ``c`` and spreads ``l``, ``r``."""

    c: int
    l: int
    r: int

    def check(self, M: int) -> "FuzzyRating":
        check_rating(self.c, self.l, self.r, M)
        return self


def check_rating(c, l, r, M: int) -> None:
    if not 1 <= c <= M:
        raise ValueError(f"core c={c} outside 1..{M}")
    if l < 0 or r < 0:
        raise ValueError(f"spreads must be non-negative, got l={l}, r={r}")
    if l > c - 1:
        raise ValueError(f"l exceeds c-1 (l={l}, c={c})")
    if r > M - c:
        raise ValueError(f"r exceeds M-c (r={r}, c={c}, M={M})")


def valid_ratings(M: int):
    """All (c, l, r) triples allowed on an M-point scale, in lexicographic order."""
    return [
        (c, l, r)
        for c in range(1, M + 1)
        for l in range(c)
        for r in range(M - c + 1)
    ]


@dataclass(frozen=True)
class MixtureState:
    xi: float
    pi_s: float
    pi_y: np.ndarray


def _check_probs(pi_y) -> np.ndarray:
    pi = np.asarray(pi_y, dtype=float)
    if pi.ndim != 1 or pi.size < 2:
        raise ValueError("pi_y must be a vector of at least two probabilities")
    if np.any(pi < 0):
        raise ValueError("pi_y has negative entries")
    if abs(pi.sum() - 1.0) > 1e-8:
        raise ValueError(f"pi_y sums to {pi.sum():.12g}, not 1")
    return pi


def _entropy_weight(pi, logpi=None):
    # 0 * log 0 := 0 is handled by xlogy; the clip absorbs last-ulp overshoot
    M = pi.shape[-1]
    terms = xlogy(pi, pi) if logpi is None else np.where(pi > 0, pi * logpi, 0.0)
    return np.clip(-terms.sum(axis=-1) / np.log(M), 0.0, 1.0)


def entropy_weight(pi_y) -> float:
    """Normalized Shannon entropy of a probability vector, in [0, 1]."""
    return float(_entropy_weight(_check_probs(pi_y)))


def _split_mass(pi, c):
    """Probability mass strictly below and strictly above core ``c`` (1-based)."""
    M = pi.shape[-1]
    cats = np.arange(1, M + 1)
    c = np.asarray(c)[..., None]
    below = np.where(cats < c, pi, 0.0).sum(axis=-1)
    above = np.where(cats > c, pi, 0.0).sum(axis=-1)
    return below, above


def _lower_share(pi, c):
    # below / (1 - pi_c) written as below / (below + above) to avoid cancellation
    below, above = _split_mass(pi, c)
    rest = below + above
    safe = np.where(rest > 0, rest, 1.0)
    ps = np.where(rest > 0, below / safe, 0.0)
    qs = np.where(rest > 0, above / safe, 1.0)
    return ps, qs


def lower_share(pi_y, c: int) -> float:
    """Share of the non-chosen mass that lies below the core ``c``.

    Zero when ``c`` is the first category, and zero by convention when the
    core carries all the mass.
    """
    pi = _check_probs(pi_y)
    if not 1 <= c <= pi.size:
        raise ValueError(f"core c={c} outside 1..{pi.size}")
    ps, _ = _lower_share(pi, c)
    return float(ps)


def log_binom_pmf(k, n, p, q=None):
    """Binomial log-pmf via log-gamma; ``p`` in {0, 1} gives the exact degenerate mass.

    ``q`` may be passed as an accurately computed ``1 - p``.
    """
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    logc = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    tail = xlog1py(n - k, -p) if q is None else xlogy(n - k, q)
    return logc + xlogy(k, p) + tail


def binom_pmf(k, n, p) -> float:
    return float(np.exp(log_binom_pmf(k, n, p)))


def _log_spread_bracket(l, r, c, M, xi, ps, qs):
    logb = (log_binom_pmf(l, c - 1, ps, qs)
            + log_binom_pmf(r, M - c, qs, ps))
    with np.errstate(divide="ignore"):
        log_xi = np.log(xi)
        log_1m = np.log1p(-xi)
    uncertain = log_xi + logb
    zero_spread = (np.asarray(l) == 0) & (np.asarray(r) == 0)
    return np.where(zero_spread, np.logaddexp(uncertain, log_1m), uncertain)


def spread_bracket(l: int, r: int, c: int, M: int, xi: float, pi_s: float) -> float:
    """Mixture probability of the spreads ``(l, r)`` given the core.

    ``xi * Bin(l; c-1, pi_s) * Bin(r; M-c, 1-pi_s) + (1 - xi) * [l == r == 0]``
    """
    check_rating(c, l, r, M)
    if not (0.0 <= xi <= 1.0 and 0.0 <= pi_s <= 1.0):
        raise ValueError("xi and pi_s must lie in [0, 1]")
    return float(np.exp(_log_spread_bracket(l, r, c, M, xi, pi_s, 1.0 - pi_s)))


def mixture_state(pi_y, c: int) -> MixtureState:
    pi = _check_probs(pi_y)
    return MixtureState(xi=entropy_weight(pi), pi_s=lower_share(pi, c), pi_y=pi)


def log_conditional(tree: TreeSpec, c, l, r, eta, alphas):
    """Vectorized log P(c, l, r | eta); rating arrays broadcast against ``eta``.

    This is the engine behind the likelihood: ``c, l, r`` typically have
    shape (I, 1) and ``eta`` shape (I, H).
    """
    M = tree.M
    c = np.asarray(c)
    l = np.asarray(l)
    r = np.asarray(r)
    logpi = log_category_probs(tree, eta, alphas)
    pi = np.exp(logpi)
    xi = _entropy_weight(pi, logpi)
    shape = np.broadcast_shapes(c.shape, xi.shape)
    cb = np.broadcast_to(c, shape)
    log_pc = np.take_along_axis(
        np.broadcast_to(logpi, shape + (M,)), (cb - 1)[..., None], axis=-1
    )[..., 0]
    ps, qs = _lower_share(pi, cb)
    return log_pc + _log_spread_bracket(l, r, cb, M, xi, ps, qs)


def log_conditional_pmf(y, eta: float, alphas, tree: TreeSpec) -> float:
    c, l, r = (y.c, y.l, y.r) if isinstance(y, FuzzyRating) else y
    check_rating(c, l, r, tree.M)
    return float(log_conditional(tree, c, l, r, float(eta), alphas))


def conditional_pmf(y, eta: float, alphas, tree: TreeSpec) -> float:
    """Probability of the fuzzy response ``y = (c, l, r)`` at a fixed ability."""
    return float(np.exp(log_conditional_pmf(y, eta, alphas, tree)))
