"""Command line interface: ``fuzzyirtree {fit,simulate,compare,effects,quadcheck}``."""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np
import yaml

from . import __version__
from .data import ModelSpec, load_config, read_dataset, write_dataset
from .effects import marginal_effects
from .estimate import FitOptions, FitResult, fit, param_names
from .params import ParamVector
from .quadrature import gauss_hermite, log_likelihood
from .report import compare_report, dump, fit_report, format_table, load_fit_theta
from .simulate import (RNG_VERSION, SimConfig, parse_covariate_spec, sample_dataset,
                       simulate_covariates)


class CLIError(Exception):
    pass


def _floats(text):
    if text is None or str(text).strip() == "":
        return []
    return [float(t) for t in str(text).split(",")]


def _model_args(p, need_data=True):
    if need_data:
        p.add_argument("--data", required=True, help="dataset CSV with columns c,l,r,<covariates>")
    p.add_argument("--M", type=int, default=4, help="number of scale points")
    p.add_argument("--tree", default="linear",
                   help="builtin tree (linear, nested) or a YAML file with a 'tree' list of rows")
    p.add_argument("--formula", default="", help="covariate terms, e.g. sex+das+sex:das")
    p.add_argument("--alpha-sharing", choices=("shared", "per-node"), default="shared")
    p.add_argument("--H", type=int, default=30, help="Gauss-Hermite nodes")


def _fit_args(p):
    p.add_argument("--optimizer", choices=("quasi-newton", "auglag"), default="quasi-newton")
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=500)


def _tree_arg(value):
    if value.endswith((".yml", ".yaml")):
        with open(value, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
        rows = doc.get("tree") if isinstance(doc, dict) else doc
        if not isinstance(rows, list):
            raise CLIError(f"{value}: expected a 'tree' list of rows")
        return [str(r) if not isinstance(r, list) else r for r in rows]
    return value


def _spec(args) -> ModelSpec:
    return ModelSpec.build(_tree_arg(args.tree), args.M, args.formula, args.alpha_sharing, args.H)


def _opts(args) -> FitOptions:
    return FitOptions(optimizer=args.optimizer, starts=args.starts, seed=args.seed,
                      tol=args.tol, max_iter=args.max_iter)


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_fit(args):
    data = read_dataset(args.data, args.M)
    result = fit(data, _spec(args), _opts(args))
    _emit(dump(fit_report(result, data_path=args.data)), args.out)


def cmd_simulate(args):
    spec = _spec(args)
    if args.design:
        src = read_dataset(args.design, args.M)
        covariates = dict(src.covariates)
        I = src.I
    else:
        if args.I is None or args.I < 1:
            raise CLIError("--I (>= 1) is required unless --design is given")
        I = args.I
        cov_spec = dict(parse_covariate_spec(s) for s in args.covariate)
        covariates = simulate_covariates(I, cov_spec, args.seed)
    levels = {k: sorted(set(v.tolist())) for k, v in covariates.items() if v.dtype.kind == "U"}
    X, names = spec.formula.design(covariates, levels) if spec.formula.terms else (np.zeros((I, 0)), [])
    alpha = _floats(args.alpha)
    if len(alpha) not in (1, spec.tree.N):
        raise CLIError(f"--alpha needs 1 or {spec.tree.N} values")
    beta = _floats(args.beta)
    if len(beta) != X.shape[1]:
        raise CLIError(f"--beta needs {X.shape[1]} values for design columns {names}")
    if args.sigma < 0:
        raise CLIError("--sigma must be >= 0")
    theta = ParamVector(alpha, beta, args.sigma)
    ds = sample_dataset(SimConfig(theta, spec.tree, X, args.seed, covariates))
    write_dataset(ds, args.out or sys.stdout)
    meta = {"rng_version": RNG_VERSION, "seed": args.seed, "I": I, "design_columns": names}
    sys.stderr.write(json.dumps(meta) + "\n")


def cmd_compare(args):
    cfg = load_config(args.config)
    data = read_dataset(args.data, cfg["M"])
    opts = _opts(args)
    fits = [fit(data, spec, opts) for spec in cfg["models"]]
    labels = [spec.name for spec in cfg["models"]]
    doc = compare_report(fits, labels, data_path=args.data)
    if args.out:
        dump(doc, args.out)
        sys.stdout.write(format_table(doc["ranking"]) + "\n")
    else:
        _emit(dump(doc), None)


def _fit_from_report(path, M) -> FitResult:
    theta, doc = load_fit_theta(path)
    model = doc["model"]
    tree = model["tree_matrix"] if model["tree"] == "custom" else model["tree"]
    spec = ModelSpec.build(tree, M, model["formula"], model["alpha_sharing"], model["H"])
    return FitResult(theta=theta, loglik=doc["loglik"], n_obs=doc["data"]["I"],
                     param_names=param_names(spec, doc["design_columns"]),
                     spec=spec, design_names=doc["design_columns"], levels=doc["levels"])


def _parse_grid(items):
    grid = {}
    for item in items:
        name, _, values = item.partition("=")
        if not values:
            raise CLIError(f"grid entry {item!r} must look like name=v1,v2,...")
        grid[name.strip()] = [v.strip() for v in values.split(",")]
    return grid


def cmd_effects(args):
    data = read_dataset(args.data, args.M)
    if args.report:
        result = _fit_from_report(args.report, args.M)
    else:
        result = fit(data, _spec(args), _opts(args))
    grid = marginal_effects(result, data, _parse_grid(args.grid), mode=args.mode, H=args.H)
    grid.write_csv(args.out or sys.stdout)


def cmd_quadcheck(args):
    from scipy.special import gammaln
    Hs = [int(h) for h in args.Hs.split(",")]
    href = max(Hs)
    out = {"schema": "fuzzyirtree.quadcheck/1", "moments": [], "loglik": []}
    for H in Hs:
        rule = gauss_hermite(H)
        worst = 0.0
        logx = np.log(np.abs(rule.gamma), where=rule.gamma != 0, out=np.full(H, -np.inf))
        for k in range(0, 2 * H, 2):
            rel = np.exp(rule.log_omega + (k * logx if k else 0.0) - gammaln((k + 1) / 2))
            worst = max(worst, abs(math.fsum(rel) - 1.0))
        out["moments"].append({"H": H, "max_rel_err_even_moments": worst,
                               "weight_sum_err": abs(rule.omega.sum() - np.sqrt(np.pi))})
    if args.data:
        data = read_dataset(args.data, args.M)
        spec = _spec(args)
        if args.report:
            theta, _ = load_fit_theta(args.report)
        else:
            theta = ParamVector(_floats(args.alpha), _floats(args.beta), args.sigma)
        X, _ = spec.formula.design(data.covariates, data.all_levels())
        ref = log_likelihood(data, X, theta, spec.tree, gauss_hermite(href))
        for H in Hs:
            ll = log_likelihood(data, X, theta, spec.tree, gauss_hermite(H))
            out["loglik"].append({"H": H, "loglik": ll, "diff_vs_H%d" % href: ll - ref})
    _emit(json.dumps(out, indent=2), args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fuzzyirtree", description=__doc__)
    ap.add_argument("--version", action="version", version=f"fuzzyirtree {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model and write a JSON report")
    _model_args(p)
    _fit_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="draw a dataset CSV from given parameters")
    _model_args(p, need_data=False)
    p.add_argument("--alpha", default="-1", help="comma list: 1 value or one per node")
    p.add_argument("--beta", default="", help="comma list matching the design columns")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--I", type=int)
    p.add_argument("--covariate", action="append", default=[],
                   help="name=normal:mean,sd | name=uniform:lo,hi | name=categorical:A,B (repeatable)")
    p.add_argument("--design", help="take covariate columns from this CSV instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="fit every model of a YAML config and rank by BIC")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    _fit_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("effects", help="marginal effects table (long format CSV)")
    _model_args(p)
    _fit_args(p)
    p.add_argument("--report", help="use estimates from this fit report instead of refitting")
    p.add_argument("--grid", action="append", default=[],
                   help="name=v1,v2 (numeric values or 0,min,mean,max; levels for categorical)")
    p.add_argument("--mode", choices=("plugin", "integrated"), default="plugin")
    p.add_argument("--out")
    p.set_defaults(func=cmd_effects)

    p = sub.add_parser("quadcheck", help="Gauss-Hermite convergence diagnostics")
    _model_args(p, need_data=False)
    p.add_argument("--data")
    p.add_argument("--report")
    p.add_argument("--Hs", default="10,20,30,61")
    p.add_argument("--alpha", default="-1")
    p.add_argument("--beta", default="")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_quadcheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CLIError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(msg)}) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
