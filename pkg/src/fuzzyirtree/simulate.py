"""Generative sampler for fuzzy ratings.

Draws are made in blocks over all rows: abilities, core uniforms (inverse
CDF over categories 1..M in order), indicator uniforms, then left and right
spreads.  A dataset depends only on the seed, the design and
:data:`RNG_VERSION`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .fuzzymix import _entropy_weight, _lower_share
from .irtree import TreeSpec, expand_alpha, log_category_probs
from .params import ParamVector

RNG_VERSION = f"numpy-{np.__version__}/Philox4x64/fuzzyirtree-sampler-1"


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator used for all simulation."""
    return np.random.Generator(np.random.Philox(seed))


def _sample(theta: ParamVector, tree: TreeSpec, X: np.ndarray, rng: np.random.Generator):
    I = X.shape[0]
    mu = X @ theta.beta if X.shape[1] else np.zeros(I)
    eta = mu + theta.sigma * rng.standard_normal(I)
    logpi = log_category_probs(tree, eta, expand_alpha(theta.alpha, tree.N))
    pi = np.exp(logpi)
    cdf = np.cumsum(pi, axis=1)
    u = rng.random(I)
    c = 1 + np.sum(u[:, None] >= cdf[:, :-1], axis=1)
    xi = _entropy_weight(pi, logpi)
    z = (rng.random(I) < xi).astype(np.int64)
    ps, qs = _lower_share(pi, c)
    M = tree.M
    l = rng.binomial(c - 1, ps)
    r = rng.binomial(M - c, qs)
    l = np.where(z == 1, l, 0)
    r = np.where(z == 1, r, 0)
    return c.astype(np.int64), l.astype(np.int64), r.astype(np.int64), eta, z


def sample_one(theta: ParamVector, tree: TreeSpec, x, rng: np.random.Generator):
    """One draw: returns ``((c, l, r), eta, z)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    if x.shape[1] != theta.n_beta:
        raise ValueError(f"covariate row has {x.shape[1]} entries; beta has {theta.n_beta}")
    c, l, r, eta, z = _sample(theta, tree, x, rng)
    return (int(c[0]), int(l[0]), int(r[0])), float(eta[0]), int(z[0])


@dataclass
class SimConfig:
    theta: ParamVector
    tree: TreeSpec
    design: np.ndarray
    seed: int = 0
    covariates: dict = field(default_factory=dict)

    def __post_init__(self):
        self.design = np.asarray(self.design, dtype=float)
        if self.design.ndim != 2:
            raise ValueError("design must be an (I, K) matrix")
        if self.design.shape[0] < 1:
            raise ValueError("I must be >= 1")
        if self.design.shape[1] != self.theta.n_beta:
            raise ValueError(f"design has {self.design.shape[1]} columns; beta has {self.theta.n_beta}")
        if self.theta.sigma < 0:
            raise ValueError("sigma must be non-negative")


def sample_dataset(cfg: SimConfig, return_latent: bool = False):
    """Draw ``I`` independent ratings; covariates in ``cfg.covariates`` are attached as columns."""
    rng = make_rng(cfg.seed)
    c, l, r, eta, z = _sample(cfg.theta, cfg.tree, cfg.design, rng)
    ds = Dataset(c, l, r, cfg.tree.M, dict(cfg.covariates))
    if return_latent:
        return ds, eta, z
    return ds


def simulate_covariates(I: int, spec: dict, seed: int) -> dict:
    """Generate covariate columns from ``{name: (kind, args)}``.

    Kinds: ``normal`` (mean, sd), ``uniform`` (low, high), ``categorical``
    (levels...; equal probabilities).  Uses its own substream of ``seed``.
    """
    rng = np.random.Generator(np.random.Philox(key=seed + 0x5EED))
    out = {}
    for name, (kind, args) in spec.items():
        if kind == "normal":
            mean, sd = (list(map(float, args)) + [0.0, 1.0][len(args):])[:2]
            out[name] = mean + sd * rng.standard_normal(I)
        elif kind == "uniform":
            lo, hi = (list(map(float, args)) + [0.0, 1.0][len(args):])[:2]
            out[name] = rng.uniform(lo, hi, size=I)
        elif kind == "categorical":
            levels = list(args) or ["A", "B"]
            out[name] = np.array(levels, dtype=str)[rng.integers(0, len(levels), size=I)]
        else:
            raise ValueError(f"unknown covariate kind {kind!r}")
    return out


def parse_covariate_spec(text: str):
    """``"das=uniform:0,1.4"`` -> ``("das", ("uniform", ["0", "1.4"]))``."""
    try:
        name, rest = text.split("=", 1)
    except ValueError:
        raise ValueError(f"covariate spec {text!r} must look like name=kind:args")
    kind, _, args = rest.partition(":")
    return name.strip(), (kind.strip(), [a.strip() for a in args.split(",") if a.strip()])
