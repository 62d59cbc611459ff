"""Binary decision trees for the category stage of the rating process.

A tree is declared only through its mapping matrix: one row per response
category, one column per internal node.  A cell holds 0 or 1 (the branch the
category takes at that node) or ``None`` when the node is not on the
category's path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

NA = None
Cell = Optional[int]

_NA_TOKENS = {"NA", "na", "N/A", ""}


class TreeError(ValueError):
    """Raised when a mapping matrix does not describe a valid tree."""


def parse_cell(token) -> Cell:
    """Convert a raw token (``0``, ``1``, ``"NA"``, ``None``) to a tree cell."""
    if token is None:
        return NA
    if isinstance(token, float) and np.isnan(token):
        return NA
    if isinstance(token, str):
        s = token.strip()
        if s in _NA_TOKENS:
            return NA
        if s in ("0", "1"):
            return int(s)
        raise TreeError(f"invalid tree cell {token!r}; expected 0, 1 or NA")
    if isinstance(token, (bool, np.bool_)):
        return int(token)
    if isinstance(token, (int, np.integer)) and int(token) in (0, 1):
        return int(token)
    raise TreeError(f"invalid tree cell {token!r}; expected 0, 1 or NA")


def parse_row(text: str) -> tuple:
    """Parse one comma-separated matrix row such as ``"1,0,NA"``."""
    return tuple(parse_cell(tok) for tok in text.split(","))


@dataclass(frozen=True)
class TreeSpec:
    """Validated mapping matrix of an IRTree.

    Use :func:`validate_tree` (or the builtin constructors) rather than
    instantiating this directly.
    """

    rows: tuple
    name: str = "custom"
    ones: np.ndarray = field(init=False, repr=False, compare=False)
    zeros: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cells = np.array([[c == 1 for c in row] for row in self.rows], dtype=float)
        zeros = np.array([[c == 0 for c in row] for row in self.rows], dtype=float)
        cells.setflags(write=False)
        zeros.setflags(write=False)
        object.__setattr__(self, "ones", cells)
        object.__setattr__(self, "zeros", zeros)

    @property
    def M(self) -> int:
        return len(self.rows)

    @property
    def N(self) -> int:
        return len(self.rows[0])

    @property
    def delta(self) -> np.ndarray:
        """Indicator of the nodes lying on each category's path."""
        return self.ones + self.zeros

    def to_strings(self) -> list:
        return [",".join("NA" if c is NA else str(c) for c in row) for row in self.rows]


def validate_tree(raw_matrix, name: str = "custom", probe_seed: int = 0) -> TreeSpec:
    """Build a :class:`TreeSpec` from an M x N matrix of 0/1/NA cells.

    Besides the structural checks, the matrix is probed numerically: for a
    handful of random abilities and node easiness values the category
    probabilities must sum to one.  A matrix that passes is a tree in the only
    sense the model needs.
    """
    if isinstance(raw_matrix, str):
        raw_matrix = [line for line in raw_matrix.strip().splitlines() if line.strip()]
    rows = []
    for row in raw_matrix:
        if isinstance(row, str):
            rows.append(parse_row(row))
        else:
            rows.append(tuple(parse_cell(c) for c in row))
    if len(rows) < 2:
        raise TreeError(f"a tree needs at least 2 categories, got M={len(rows)}")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise TreeError("mapping matrix rows have unequal lengths")
    if widths.pop() < 1:
        raise TreeError("a tree needs at least one node")
    for m, row in enumerate(rows, start=1):
        if all(c is NA for c in row):
            raise TreeError(f"category {m} has an all-NA row")
    seen = {}
    for m, row in enumerate(rows, start=1):
        if row in seen:
            raise TreeError(f"duplicate rows: categories {seen[row]} and {m} share one path")
        seen[row] = m

    tree = TreeSpec(tuple(rows), name=name)
    rng = np.random.default_rng(probe_seed)
    eta = rng.uniform(-3.0, 3.0, size=8)
    for _ in range(4):
        alpha = rng.uniform(-2.0, 2.0, size=tree.N)
        total = category_probs(tree, eta, alpha).sum(axis=-1)
        if np.max(np.abs(total - 1.0)) > 1e-10:
            raise TreeError(
                "normalization probe failed: category probabilities sum to "
                f"{total.min():.6g}..{total.max():.6g}; the matrix does not encode a tree"
            )
    return tree


def linear_tree(M: int) -> TreeSpec:
    """Chain tree with N = M - 1 nodes; the 0-branch of node n stops at category n."""
    if M < 2:
        raise TreeError("linear tree needs M >= 2")
    N = M - 1
    rows = []
    for m in range(1, M + 1):
        row = [NA] * N
        for n in range(1, N + 1):
            if n < m:
                row[n - 1] = 1
            elif n == m:
                row[n - 1] = 0
        rows.append(row)
    return validate_tree(rows, name="linear")


NESTED_5 = (
    (1, 0, 0, NA),
    (1, 0, 1, NA),
    (0, NA, NA, NA),
    (1, 1, NA, 0),
    (1, 1, NA, 1),
)


def nested_tree(M: int = 5) -> TreeSpec:
    """Five-category tree whose root separates the midpoint from the two sides."""
    if M != 5:
        raise TreeError(f"the builtin nested tree is defined for M=5 only, got M={M}")
    return validate_tree(NESTED_5, name="nested")


BUILTIN_TREES = {"linear": linear_tree, "nested": nested_tree}


def builtin_tree(name: str, M: int) -> TreeSpec:
    try:
        factory = BUILTIN_TREES[name]
    except KeyError:
        raise TreeError(f"unknown builtin tree {name!r}; choose from {sorted(BUILTIN_TREES)}")
    return factory(M)


def node_prob(eta, alpha):
    """Logistic probability of taking the 1-branch at a node."""
    z = np.asarray(eta, dtype=float) + np.asarray(alpha, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out[()] if out.ndim == 0 else out


def log_node_probs(z):
    """Return (log p, log(1 - p)) for logits ``z`` without overflow."""
    z = np.asarray(z, dtype=float)
    # log sigmoid(z) = -log1p(exp(-z)) = min(z, 0) - log1p(exp(-|z|))
    soft = np.log1p(np.exp(-np.abs(z)))
    return np.minimum(z, 0.0) - soft, np.minimum(-z, 0.0) - soft


def log_category_probs(tree: TreeSpec, eta, alphas) -> np.ndarray:
    """Log of :func:`category_probs`; shape ``eta.shape + (M,)``."""
    eta = np.asarray(eta, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape[-1:] != (tree.N,):
        raise ValueError(f"expected {tree.N} node easiness values, got shape {alphas.shape}")
    logp, logq = log_node_probs(eta[..., None] + alphas)
    return logp @ tree.ones.T + logq @ tree.zeros.T


def category_probs(tree: TreeSpec, eta, alphas) -> np.ndarray:
    """Category probabilities as products of branch probabilities along each path.

    Parameters
    ----------
    tree : TreeSpec
    eta : float or array
        Latent ability; arrays broadcast and gain a trailing category axis.
    alphas : array of shape (N,)
        Node easiness, already expanded to one value per node.
    """
    return np.exp(log_category_probs(tree, eta, alphas))


@dataclass(frozen=True)
class NodeEasiness:
    """Node easiness values under a sharing scheme (``shared`` or ``per-node``)."""

    values: tuple
    sharing: str = "shared"

    def __post_init__(self):
        if self.sharing not in ("shared", "per-node"):
            raise ValueError(f"unknown alpha sharing {self.sharing!r}")
        if self.sharing == "shared" and len(self.values) != 1:
            raise ValueError("shared sharing takes exactly one alpha")

    def expand(self, n_nodes: int) -> np.ndarray:
        return expand_alpha(self.values, n_nodes)


def expand_alpha(alpha: Sequence[float], n_nodes: int) -> np.ndarray:
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.shape == (1,):
        return np.repeat(alpha, n_nodes)
    if alpha.shape != (n_nodes,):
        raise ValueError(f"alpha has {alpha.size} values; expected 1 or {n_nodes}")
    return alpha
