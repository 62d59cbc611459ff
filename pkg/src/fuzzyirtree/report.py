"""Machine-readable reports (JSON) for fits and model comparisons."""

from __future__ import annotations

import json
import math

import numpy as np

from .estimate import FitResult, FitOptions, summary_table
from .params import ParamVector
from .simulate import RNG_VERSION

SCHEMA_VERSION = "fuzzyirtree.report/1"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def fit_report(fit: FitResult, *, data_path=None, extra=None) -> dict:
    opts = fit.options or FitOptions()
    est = fit.estimates()
    rows = []
    for k, name in enumerate(fit.param_names):
        rows.append({
            "name": name,
            "estimate": est[k],
            "std_error": None if fit.std_errors is None else fit.std_errors[k],
            "se_reliable": None if fit.se_reliable is None else bool(fit.se_reliable[k]),
            "se_note": fit.se_reasons[k] if fit.se_reasons else "",
        })
    doc = {
        "schema": SCHEMA_VERSION,
        "kind": "fit",
        "model": fit.spec.describe() if fit.spec else {},
        "reference_levels": {k: v[0] for k, v in fit.levels.items()},
        "levels": fit.levels,
        "design_columns": fit.design_names,
        "data": {"path": str(data_path) if data_path else None, "I": fit.n_obs,
                 "degenerate": fit.degenerate_data},
        "options": {"optimizer": opts.optimizer, "starts": opts.starts, "seed": opts.seed,
                    "tol": opts.tol, "ftol": opts.ftol, "max_iter": opts.max_iter},
        "rng_version": RNG_VERSION,
        "theta": {"alpha": fit.theta.alpha, "beta": fit.theta.beta, "sigma": fit.theta.sigma},
        "estimates": rows,
        "loglik": fit.loglik,
        "n_params": fit.n_params,
        "bic": fit.bic,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "gradient_norm": fit.gradient_norm,
        "constraints": fit.constraints,
        "floored_observations": fit.n_floored,
        "start_logliks": fit.start_logliks,
        "best_start": fit.best_start,
    }
    if extra:
        doc.update(extra)
    return _clean(doc)


def compare_report(fits, labels=None, *, data_path=None) -> dict:
    table = summary_table(fits, labels)
    return _clean({
        "schema": SCHEMA_VERSION,
        "kind": "compare",
        "data": {"path": str(data_path) if data_path else None, "I": fits[0].n_obs},
        "tie_break": "lowest BIC, then fewer parameters, then config order",
        "selected": table[0]["model"],
        "ranking": table,
        "fits": [fit_report(f) for f in fits],
    })


def format_table(rows, columns=("rank", "model", "covariates", "p", "lnL", "BIC")) -> str:
    def cell(v):
        return f"{v:.3f}" if isinstance(v, float) else str(v)
    body = [[cell(r[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(b[k]) for b in body)) for k, c in enumerate(columns)]
    line = lambda vals: "  ".join(v.ljust(w) for v, w in zip(vals, widths))
    return "\n".join([line(columns), line(["-" * w for w in widths])] + [line(b) for b in body])


def dump(doc: dict, path=None) -> str:
    text = json.dumps(doc, indent=2, sort_keys=False)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text


def load_fit_theta(path) -> tuple:
    """Read back ``(theta, report)`` from a fit report."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != SCHEMA_VERSION or doc.get("kind") != "fit":
        raise ValueError(f"{path}: not a {SCHEMA_VERSION} fit report")
    t = doc["theta"]
    return ParamVector(t["alpha"], t["beta"], t["sigma"]), doc
