"""Marginal effects of covariates on category probabilities, lower share and mixture weight."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Formula
from .estimate import FitResult
from .fuzzymix import _entropy_weight, _lower_share
from .irtree import expand_alpha, log_category_probs
from .quadrature import gauss_hermite

REFERENCE_POINTS = ("0", "min", "mean", "max")


@dataclass
class EffectsGrid:
    """One row per grid point; arrays are aligned with ``points``."""

    variables: list
    points: list                      # list of {variable: (label, value)}
    eta: np.ndarray                   # (P,) plug-in ability means
    pi_y: np.ndarray                  # (P, M)
    pi_s: np.ndarray                  # (P, M); column c-1 is the lower share given core c
    xi: np.ndarray                    # (P,)
    mode: str = "plugin"
    meta: dict = field(default_factory=dict)

    def to_long(self) -> list:
        """Tidy rows: grid coordinates, ``quantity``, ``category`` and ``value``."""
        rows = []
        M = self.pi_y.shape[1]
        for k, point in enumerate(self.points):
            base = {}
            for v in self.variables:
                label, value = point[v]
                base[v] = value
                base[f"{v}_ref"] = label
            base["eta"] = float(self.eta[k])
            for m in range(M):
                rows.append({**base, "quantity": "pi_y", "category": m + 1, "value": float(self.pi_y[k, m])})
            for m in range(M):
                rows.append({**base, "quantity": "pi_s", "category": m + 1, "value": float(self.pi_s[k, m])})
            rows.append({**base, "quantity": "xi", "category": "", "value": float(self.xi[k])})
        return rows

    def write_csv(self, path_or_file) -> None:
        rows = [{k: repr(v) if isinstance(v, float) else v for k, v in row.items()}
                for row in self.to_long()]
        if hasattr(path_or_file, "write"):
            _write_long(rows, path_or_file)
            return
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            _write_long(rows, fh)


def _write_long(rows, fh):
    w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def reference_values(col: np.ndarray, which=REFERENCE_POINTS) -> list:
    """``(label, value)`` pairs for a numeric column: 0, min, mean, max by default."""
    col = np.asarray(col, dtype=float)
    table = {"0": 0.0, "min": float(col.min()), "mean": float(col.mean()), "max": float(col.max())}
    out = []
    for w in which:
        if isinstance(w, str) and w in table:
            out.append((w, table[w]))
        else:
            out.append((str(w), float(w)))
    return out


def _grid_axes(fit: FitResult, data: Dataset, grid) -> dict:
    formula = fit.spec.formula if fit.spec else Formula(())
    variables = formula.variables
    grid = dict(grid or {})
    for name in grid:
        if name not in data.covariates:
            raise KeyError(f"unknown covariate {name!r}")
    axes = {}
    for v in variables:
        spec = grid.get(v)
        if v in fit.levels:
            levels = fit.levels[v] if spec is None else [str(s) for s in spec]
            for lev in levels:
                if lev not in fit.levels[v]:
                    raise KeyError(f"unknown level {lev!r} for covariate {v!r}")
            axes[v] = [(lev, lev) for lev in levels]
        else:
            axes[v] = reference_values(data.covariates[v], spec if spec is not None else REFERENCE_POINTS)
    for name in grid:
        if name not in axes:
            raise KeyError(f"covariate {name!r} is not in the fitted formula")
    return axes


def marginal_effects(fit: FitResult, data: Dataset, grid=None, mode: str = "plugin",
                     H: int = 30) -> EffectsGrid:
    """Evaluate pi_y, pi_s (for every core) and xi over a covariate grid.

    ``grid`` maps covariate names to reference values: for numeric variables
    labels from ``("0", "min", "mean", "max")`` or numbers, for categorical
    variables a list of levels.  Variables of the fitted formula missing from
    ``grid`` get the defaults (the four reference points, or every level).

    In ``plugin`` mode the ability is fixed at its mean ``x @ beta``; in
    ``integrated`` mode the quantities are averaged over the fitted ability
    distribution with an H-point Gauss-Hermite rule.
    """
    if mode not in ("plugin", "integrated"):
        raise ValueError(f"mode must be 'plugin' or 'integrated', got {mode!r}")
    tree = fit.spec.tree
    axes = _grid_axes(fit, data, grid)
    variables = list(axes)
    points = [dict(zip(variables, combo)) for combo in itertools.product(*axes.values())] \
        if variables else [{}]
    cov = {v: np.array([p[v][1] for p in points]) for v in variables}
    if variables:
        X, _ = fit.spec.formula.design(cov, fit.levels)
    else:
        X = np.zeros((1, 0))
    theta = fit.theta
    mu = X @ theta.beta if X.shape[1] else np.zeros(len(points))
    alpha = expand_alpha(theta.alpha, tree.N)
    M = tree.M
    cores = np.arange(1, M + 1)

    if mode == "plugin":
        eta = mu[:, None]
        weights = np.ones((1, 1))
    else:
        rule = gauss_hermite(H)
        eta = mu[:, None] + theta.sigma * np.sqrt(2.0) * rule.gamma[None, :]
        weights = (rule.omega / np.sqrt(np.pi))[None, :]

    logpi = log_category_probs(tree, eta, alpha)            # (P, Q, M)
    pi = np.exp(logpi)
    xi = _entropy_weight(pi, logpi)                          # (P, Q)
    ps = np.stack([_lower_share(pi, np.full(pi.shape[:-1], c))[0] for c in cores], axis=-1)
    w = weights[..., None]
    return EffectsGrid(
        variables=variables,
        points=points,
        eta=mu,
        pi_y=np.sum(pi * w, axis=1),
        pi_s=np.sum(ps * w, axis=1),
        xi=np.sum(xi * weights, axis=1),
        mode=mode,
        meta={"tree": tree.name, "formula": str(fit.spec.formula), "M": M},
    )
