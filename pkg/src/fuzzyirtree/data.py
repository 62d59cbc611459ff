"""Datasets of fuzzy ratings, covariate formulas, and model specifications."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .irtree import TreeSpec, builtin_tree, validate_tree
from .quadrature import DEFAULT_H

RATING_COLUMNS = ("c", "l", "r")


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    """Fuzzy ratings ``(c, l, r)`` with named covariate columns.

    Numeric covariates are float arrays; categorical ones are arrays of str.
    """

    c: np.ndarray
    l: np.ndarray
    r: np.ndarray
    M: int
    covariates: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.int64)
        self.l = np.asarray(self.l, dtype=np.int64)
        self.r = np.asarray(self.r, dtype=np.int64)
        if not (self.c.shape == self.l.shape == self.r.shape) or self.c.ndim != 1:
            raise DataError("c, l, r must be 1-d arrays of equal length")
        for name, col in list(self.covariates.items()):
            col = np.asarray(col)
            if col.dtype.kind not in "fiub":
                col = col.astype(str)
            else:
                col = col.astype(float)
            if col.shape != self.c.shape:
                raise DataError(f"covariate {name!r} has {col.size} rows, expected {self.I}")
            self.covariates[name] = col
        bad = _first_bound_violation(self.c, self.l, self.r, self.M)
        if bad is not None:
            raise DataError(f"{bad[1]} at row {bad[0] + 1}")

    @property
    def I(self) -> int:
        return self.c.size

    def __len__(self):
        return self.I

    def is_categorical(self, name: str) -> bool:
        return self.covariates[name].dtype.kind == "U"

    def levels(self, name: str) -> list:
        """Sorted levels of a categorical covariate; the first is the reference."""
        return sorted(set(self.covariates[name].tolist()))

    def all_levels(self) -> dict:
        return {k: self.levels(k) for k in self.covariates if self.is_categorical(k)}

    def ratings(self) -> np.ndarray:
        return np.column_stack([self.c, self.l, self.r])

    def subset(self, idx) -> "Dataset":
        return Dataset(self.c[idx], self.l[idx], self.r[idx], self.M,
                       {k: v[idx] for k, v in self.covariates.items()})

    def is_degenerate(self) -> bool:
        """True when every row carries the same rating triple."""
        rat = self.ratings()
        return bool(np.all(rat == rat[0]))

    def equals(self, other: "Dataset") -> bool:
        if self.M != other.M or self.I != other.I:
            return False
        if not all(np.array_equal(a, b) for a, b in zip(self.ratings().T, other.ratings().T)):
            return False
        if list(self.covariates) != list(other.covariates):
            return False
        return all(np.array_equal(self.covariates[k], other.covariates[k]) for k in self.covariates)


def _first_bound_violation(c, l, r, M):
    checks = (
        ((c < 1) | (c > M), f"c outside 1..{M}"),
        (l < 0, "l is negative"),
        (r < 0, "r is negative"),
        (l > c - 1, "l exceeds c-1"),
        (r > M - c, "r exceeds M-c"),
    )
    first = None
    for mask, msg in checks:
        hits = np.flatnonzero(mask)
        if hits.size and (first is None or hits[0] < first[0]):
            first = (int(hits[0]), msg)
    return first


def _parse_int(token, name, rownum):
    try:
        return int(token)
    except ValueError:
        raise DataError(f"column {name!r} is not an integer ({token!r}) at row {rownum}")


def _as_number(token):
    try:
        v = float(token)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def read_dataset(path, M: int) -> Dataset:
    """Read a CSV with header; ``c,l,r`` are ratings, other columns covariates.

    A covariate column is numeric when every cell parses as a finite float,
    otherwise categorical.  Row numbers in errors count data rows from 1.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row expected")
        missing = [col for col in RATING_COLUMNS if col not in header]
        if missing:
            raise DataError(f"{path}: missing rating column(s) {', '.join(missing)}")
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names in header")
        rows = []
        for k, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {k} has {len(row)} fields, header has {len(header)}")
            rows.append([cell.strip() for cell in row])
    if not rows:
        raise DataError(f"{path}: no data rows")
    idx = {name: j for j, name in enumerate(header)}
    rat = {}
    for name in RATING_COLUMNS:
        rat[name] = np.array([_parse_int(row[idx[name]], name, k)
                              for k, row in enumerate(rows, start=1)], dtype=np.int64)
    covariates = {}
    for name in header:
        if name in RATING_COLUMNS:
            continue
        cells = [row[idx[name]] for row in rows]
        for k, cell in enumerate(cells, start=1):
            if cell == "" or cell.upper() == "NA":
                raise DataError(f"{path}: missing value in covariate {name!r} at row {k}")
        nums = [_as_number(cell) for cell in cells]
        if all(v is not None for v in nums):
            covariates[name] = np.array(nums, dtype=float)
        else:
            covariates[name] = np.array(cells, dtype=str)
    return Dataset(rat["c"], rat["l"], rat["r"], M, covariates)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_dataset(ds: Dataset, path_or_file) -> None:
    """Write a dataset CSV to a path or open text file; floats use ``repr`` so reading back is exact."""
    if hasattr(path_or_file, "write"):
        _write_rows(ds, path_or_file)
        return
    with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
        _write_rows(ds, fh)


def _write_rows(ds, fh):
    names = list(ds.covariates)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(list(RATING_COLUMNS) + names)
    for i in range(ds.I):
        w.writerow([int(ds.c[i]), int(ds.l[i]), int(ds.r[i])]
                   + [_fmt(ds.covariates[k][i]) for k in names])


# -- covariate formulas ---------------------------------------------------


@dataclass(frozen=True)
class Formula:
    """Main effects and pairwise interactions, e.g. ``sex+das+sex:das``.

    There is no intercept column: the node easiness plays that role.
    """

    terms: tuple = ()

    @classmethod
    def parse(cls, text: Optional[str]) -> "Formula":
        text = (text or "").strip()
        if text in ("", "-", "1", "0", "none"):
            return cls(())
        terms = []
        for raw in text.replace(" ", "").split("+"):
            if not raw:
                raise DataError(f"empty term in formula {text!r}")
            parts = tuple(raw.split(":"))
            if len(parts) > 2 or any(not p for p in parts):
                raise DataError(f"term {raw!r}: only main effects and pairwise interactions")
            if len(set(parts)) != len(parts):
                raise DataError(f"term {raw!r} repeats a variable")
            if parts in terms:
                raise DataError(f"term {raw!r} appears twice")
            terms.append(parts)
        mains = {t[0] for t in terms if len(t) == 1}
        for t in terms:
            if len(t) == 2 and not set(t) <= mains:
                raise DataError(f"interaction {':'.join(t)} needs both main effects in the formula")
        return cls(tuple(terms))

    def __str__(self):
        return "+".join(":".join(t) for t in self.terms)

    @property
    def variables(self) -> list:
        seen = []
        for t in self.terms:
            for v in t:
                if v not in seen:
                    seen.append(v)
        return seen

    def design(self, covariates: dict, levels: dict):
        """Return ``(X, column_names)`` for the given covariate columns.

        ``levels`` maps each categorical variable to its level list; the
        first level is the reference and gets no dummy.
        """
        for v in self.variables:
            if v not in covariates:
                raise DataError(f"formula variable {v!r} is not a dataset column")
        n = None
        coded = {}
        for v in self.variables:
            col = np.asarray(covariates[v])
            n = col.shape[0]
            if v in levels:
                col = col.astype(str)
                unknown = set(col.tolist()) - set(levels[v])
                if unknown:
                    raise DataError(f"unknown level(s) {sorted(unknown)} for {v!r}")
                coded[v] = [(f"{v}[{lev}]", (col == lev).astype(float)) for lev in levels[v][1:]]
            else:
                coded[v] = [(v, col.astype(float))]
        names, cols = [], []
        for t in self.terms:
            if len(t) == 1:
                parts = coded[t[0]]
            else:
                parts = [(f"{a}:{b}", x * y) for a, x in coded[t[0]] for b, y in coded[t[1]]]
            for name, col in parts:
                names.append(name)
                cols.append(col)
        if not cols:
            size = n if n is not None else _nrows(covariates)
            return np.zeros((size, 0)), []
        return np.column_stack(cols), names


def _nrows(covariates):
    for col in covariates.values():
        return len(col)
    return 0


def design_matrix(ds: Dataset, formula: Formula):
    return formula.design(ds.covariates, ds.all_levels())


# -- model specification ---------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """Tree, covariate formula and alpha sharing: everything that fixes the parameter space."""

    tree: TreeSpec
    formula: Formula = Formula(())
    alpha_sharing: str = "shared"
    H: int = DEFAULT_H
    name: str = ""

    def __post_init__(self):
        if self.alpha_sharing not in ("shared", "per-node"):
            raise DataError(f"alpha sharing must be 'shared' or 'per-node', got {self.alpha_sharing!r}")
        if isinstance(self.formula, str):
            object.__setattr__(self, "formula", Formula.parse(self.formula))

    @property
    def n_alpha(self) -> int:
        return 1 if self.alpha_sharing == "shared" else self.tree.N

    @classmethod
    def build(cls, tree="linear", M: int = 4, formula="", alpha_sharing="shared",
              H: int = DEFAULT_H, name: str = "") -> "ModelSpec":
        return cls(resolve_tree(tree, M), Formula.parse(formula) if isinstance(formula, str) else formula,
                   alpha_sharing, int(H), name)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "tree": self.tree.name,
            "tree_matrix": self.tree.to_strings(),
            "M": self.tree.M,
            "N": self.tree.N,
            "formula": str(self.formula),
            "alpha_sharing": self.alpha_sharing,
            "H": self.H,
        }


def resolve_tree(tree, M: int) -> TreeSpec:
    """A builtin name, a TreeSpec, or an explicit matrix (list of rows or row strings)."""
    if isinstance(tree, TreeSpec):
        spec = tree
    elif isinstance(tree, str) and "," not in tree:
        spec = builtin_tree(tree, M)
    else:
        spec = validate_tree(tree)
    if spec.M != M:
        raise DataError(f"tree has {spec.M} categories but the scale has M={M}")
    return spec


def load_config(path) -> dict:
    """Read a YAML model configuration.

    Top-level keys: ``M``, optional ``H`` and ``alpha_sharing`` defaults, and
    ``models``: a list of entries with ``name``, ``tree`` (builtin name or a
    list of ``"0,1,NA"`` row strings), ``formula`` and optional overrides.
    Returns ``{"M": int, "models": [ModelSpec, ...], "raw": dict}``.
    """
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or "models" not in raw:
        raise DataError(f"{path}: config needs a 'models' list")
    M = raw.get("M")
    if not isinstance(M, int) or M < 2:
        raise DataError(f"{path}: config needs an integer M >= 2")
    H = raw.get("H", DEFAULT_H)
    sharing = raw.get("alpha_sharing", "shared")
    models = []
    for k, entry in enumerate(raw["models"], start=1):
        if not isinstance(entry, dict):
            raise DataError(f"{path}: model entry {k} is not a mapping")
        formula = entry.get("formula") or ""
        if isinstance(formula, list):
            formula = "+".join(formula)
        models.append(ModelSpec.build(
            tree=entry.get("tree", "linear"), M=M, formula=str(formula),
            alpha_sharing=entry.get("alpha_sharing", sharing),
            H=entry.get("H", H), name=str(entry.get("name", f"model{k}")),
        ))
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise DataError(f"{path}: model names must be unique")
    return {"M": M, "models": models, "raw": raw}
