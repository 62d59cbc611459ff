"""Constrained marginal maximum likelihood, standard errors and BIC model choice.

Two optimizer paths are available:

``quasi-newton``
    BFGS on ``(alpha, beta, log sigma)``; the ``sum|alpha, beta| <= 5`` budget
    and ``sigma <= 3.5`` are enforced by a quadratic penalty that is zero on
    the feasible set and tightened until the iterate is feasible, followed by
    a final projection.
``auglag``
    Augmented Lagrangian on ``(alpha, beta, sigma)`` with the budget as an
    explicit inequality and ``sigma`` boxed; the inner solver is L-BFGS-B.

Gradients are central finite differences throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .data import Dataset, ModelSpec, design_matrix
from .irtree import expand_alpha
from .params import BUDGET, SIGMA_MAX, ParamVector, pack, project, unpack
from .quadrature import LOG_FLOOR, gauss_hermite, log_marginal_terms

SIGMA_MIN = 1e-6
WALD_Z = 1.959963984540054


@dataclass
class FitOptions:
    optimizer: str = "quasi-newton"
    starts: int = 5
    seed: int = 0
    tol: float = 1e-5
    ftol: float = 1e-8
    max_iter: int = 500

    def __post_init__(self):
        if self.optimizer not in ("quasi-newton", "auglag"):
            raise ValueError(f"optimizer must be 'quasi-newton' or 'auglag', got {self.optimizer!r}")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")


@dataclass
class StdErrors:
    se: np.ndarray
    reliable: np.ndarray
    reasons: list
    hessian: np.ndarray


@dataclass
class FitResult:
    theta: ParamVector
    loglik: float
    n_obs: int
    param_names: list = field(default_factory=list)
    std_errors: Optional[np.ndarray] = None
    se_reliable: Optional[np.ndarray] = None
    se_reasons: list = field(default_factory=list)
    converged: bool = True
    iterations: int = 0
    gradient_norm: float = 0.0
    constraints: dict = field(default_factory=dict)
    degenerate_data: bool = False
    n_floored: int = 0
    start_logliks: list = field(default_factory=list)
    best_start: int = 0
    spec: Optional[ModelSpec] = None
    design_names: list = field(default_factory=list)
    levels: dict = field(default_factory=dict)
    options: Optional[FitOptions] = None
    label: str = ""

    @property
    def n_params(self) -> int:
        return self.theta.size

    @property
    def bic(self) -> float:
        return bic(self.loglik, self.n_params, self.n_obs)

    def estimates(self) -> np.ndarray:
        return pack(self.theta, "constrained")


def bic(loglik: float, p: int, I: int) -> float:
    """Bayesian information criterion ``-2 lnL + p ln I``."""
    if I < 1:
        raise ValueError("I must be >= 1")
    return -2.0 * loglik + p * math.log(I)


def compare(fits) -> list:
    """Indices of ``fits`` ordered by BIC, then fewer parameters, then input order."""
    fits = list(fits)
    if not fits:
        raise ValueError("compare needs at least one fit")
    sizes = {f.n_obs for f in fits}
    if len(sizes) > 1:
        raise ValueError(f"fits were computed on datasets of different size {sorted(sizes)}")
    return sorted(range(len(fits)), key=lambda k: (fits[k].bic, fits[k].n_params, k))


# -- finite differences -----------------------------------------------------


def fd_steps(x, rel: float = 1e-5, floor: float = 1e-5) -> np.ndarray:
    return np.maximum(floor, rel * np.abs(x))


def numeric_gradient(f: Callable, x, steps=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = fd_steps(x) if steps is None else steps
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h[j]
        g[j] = (f(x + e) - f(x - e)) / (2.0 * h[j])
    return g


def numeric_hessian(f: Callable, x, steps=None) -> np.ndarray:
    """Central-difference Hessian (four-point stencil off the diagonal)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = fd_steps(x, rel=1e-4, floor=1e-4) if steps is None else steps
    f0 = f(x)
    H = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return H


def standard_errors(negloglik: Callable, theta_hat, *, sigma_index: Optional[int] = None,
                    at_bound=None, steps=None) -> StdErrors:
    """Inverse-Hessian standard errors with reliability flags.

    ``negloglik`` is evaluated in the original coordinates.  An SE is flagged
    unreliable when the Hessian is not positive definite, when its parameter
    sits on a constraint, or (for the scale parameter at ``sigma_index``)
    when the Wald interval reaches below zero.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    n = theta_hat.size
    H = numeric_hessian(negloglik, theta_hat, steps)
    reasons = [[] for _ in range(n)]
    if not np.all(np.isfinite(H)):
        return StdErrors(np.full(n, np.nan), np.zeros(n, bool),
                         ["non-finite Hessian"] * n, H)
    H = 0.5 * (H + H.T)
    eig = np.linalg.eigvalsh(H)
    pd = eig[0] > 1e-10 * max(1.0, abs(eig[-1]))
    if pd:
        cov = np.linalg.inv(H)
    else:
        cov = np.linalg.pinv(H)
        for r in reasons:
            r.append("Hessian not positive definite")
    se = np.sqrt(np.abs(np.diag(cov)))
    if at_bound is not None:
        for j in np.flatnonzero(np.asarray(at_bound, dtype=bool)):
            reasons[j].append("estimate on constraint boundary")
    if sigma_index is not None:
        s, s_se = theta_hat[sigma_index], se[sigma_index]
        if not np.isfinite(s_se) or abs(s) - WALD_Z * s_se <= 0.0:
            reasons[sigma_index].append("Wald interval crosses sigma = 0")
    reliable = np.array([not r for r in reasons])
    return StdErrors(se, reliable, ["; ".join(r) for r in reasons], H)


# -- objective ---------------------------------------------------------------


class _Objective:
    """Negative log-likelihood of one dataset as a function of (alpha, beta, sigma)."""

    def __init__(self, ds: Dataset, X: np.ndarray, spec: ModelSpec):
        self.c, self.l, self.r = ds.c, ds.l, ds.r
        self.X = X
        self.tree = spec.tree
        self.rule = gauss_hermite(spec.H)
        self.n_alpha = spec.n_alpha
        self.n_beta = X.shape[1]
        self.n_evals = 0

    def split(self, v):
        na, nb = self.n_alpha, self.n_beta
        return v[:na], v[na:na + nb], v[na + nb]

    def terms(self, v):
        a, b, s = self.split(np.asarray(v, dtype=float))
        self.n_evals += 1
        return log_marginal_terms(self.tree, self.c, self.l, self.r, self.X,
                                  expand_alpha(a, self.tree.N), b, s, self.rule)

    def __call__(self, v) -> float:
        t = self.terms(v)
        return -math.fsum(np.maximum(t, LOG_FLOOR))

    def n_floored(self, v) -> int:
        return int(np.sum(~(self.terms(v) > LOG_FLOOR)))


def _budget(v, n_ab):
    return float(np.abs(v[:n_ab]).sum())


@dataclass
class _Run:
    x: np.ndarray          # constrained coordinates
    fun: float
    converged: bool
    iterations: int
    gradient_norm: float


def _run_quasi_newton(obj: _Objective, theta0: ParamVector, opts: FitOptions) -> _Run:
    n_ab = obj.n_alpha + obj.n_beta
    log_smax = math.log(SIGMA_MAX)

    def make(rho):
        def f(u):
            over = max(0.0, _budget(u, n_ab) - BUDGET)
            high = max(0.0, u[-1] - log_smax)
            w = u.copy()
            w[-1] = math.exp(u[-1])
            return obj(w) + rho * (over * over + high * high)
        return f

    u = pack(theta0, "transformed")
    iters = 0
    rho = 1e4
    converged = False
    gnorm = np.inf
    for _ in range(4):
        f = make(rho)
        last = [f(u)]
        delta = [np.inf]

        def cb(intermediate_result):
            delta[0] = abs(last[0] - intermediate_result.fun)
            last[0] = intermediate_result.fun

        for _restart in range(3):
            res = optimize.minimize(
                f, u, jac=lambda z: numeric_gradient(f, z), method="BFGS", callback=cb,
                options={"gtol": opts.tol, "norm": 2, "maxiter": max(1, opts.max_iter - iters)},
            )
            u = res.x
            iters += int(res.nit)
            gnorm = float(np.linalg.norm(numeric_gradient(f, u)))
            converged = gnorm < opts.tol and delta[0] < opts.ftol
            if converged or iters >= opts.max_iter:
                break
            if res.nit == 0:
                # line search cannot improve further; accept the gradient test alone
                converged = gnorm < opts.tol
                break
        feasible = (_budget(u, n_ab) <= BUDGET + 1e-9) and u[-1] <= log_smax + 1e-9
        if feasible or iters >= opts.max_iter:
            break
        rho *= 100.0
    theta = project(unpack(u, obj.n_alpha, obj.n_beta, "transformed"), SIGMA_MIN)
    x = pack(theta, "constrained")
    return _Run(x, obj(x), converged, iters, gnorm)


def _run_auglag(obj: _Objective, theta0: ParamVector, opts: FitOptions) -> _Run:
    n_ab = obj.n_alpha + obj.n_beta
    bounds = [(None, None)] * n_ab + [(SIGMA_MIN, SIGMA_MAX)]
    x = pack(project(theta0, SIGMA_MIN), "constrained")
    lam, rho = 0.0, 10.0
    iters = 0
    prev_viol = np.inf
    converged = False
    gnorm = np.inf

    for _outer in range(30):
        def lagr(z, lam=lam, rho=rho):
            g = _budget(z, n_ab) - BUDGET
            shifted = max(0.0, g + lam / rho)
            return obj(z) + 0.5 * rho * shifted * shifted - lam * lam / (2.0 * rho)

        res = optimize.minimize(
            lagr, x, jac=lambda z: numeric_gradient(lagr, z), method="L-BFGS-B", bounds=bounds,
            options={"maxiter": max(1, opts.max_iter - iters), "gtol": 0.1 * opts.tol,
                     "ftol": 1e-15, "maxcor": 20},
        )
        x = res.x
        iters += int(res.nit)
        g = _budget(x, n_ab) - BUDGET
        viol = abs(max(g, -lam / rho))
        grad = numeric_gradient(lagr, x)
        # projected gradient: drop components pushing into an active bound
        s = x[-1]
        if (s <= SIGMA_MIN * (1 + 1e-9) and grad[-1] > 0) or (s >= SIGMA_MAX * (1 - 1e-12) and grad[-1] < 0):
            grad[-1] = 0.0
        gnorm = float(np.linalg.norm(grad))
        lam = max(0.0, lam + rho * g)
        if viol < 1e-8 and gnorm < opts.tol:
            converged = True
            break
        if iters >= opts.max_iter:
            break
        if viol > 0.25 * prev_viol:
            rho *= 10.0
        prev_viol = viol
    theta = project(unpack(x, obj.n_alpha, obj.n_beta, "constrained"), SIGMA_MIN)
    x = pack(theta, "constrained")
    return _Run(x, obj(x), converged, iters, gnorm)


def start_points(n_alpha: int, n_beta: int, starts: int, seed: int) -> list:
    """Zeros with sigma = 1, then jittered feasible points from a seeded generator."""
    pts = [ParamVector(np.zeros(n_alpha), np.zeros(n_beta), 1.0)]
    rng = np.random.default_rng(seed)
    for _ in range(starts - 1):
        ab = rng.uniform(-1.5, 1.5, size=n_alpha + n_beta)
        used = np.abs(ab).sum()
        if used > 0.98 * BUDGET:
            ab *= 0.98 * BUDGET / used
        sigma = rng.uniform(0.2, 3.0)
        pts.append(ParamVector(ab[:n_alpha], ab[n_alpha:], sigma))
    return pts


def param_names(spec: ModelSpec, design_names) -> list:
    if spec.n_alpha == 1:
        names = ["alpha"]
    else:
        names = [f"alpha[{n}]" for n in range(1, spec.n_alpha + 1)]
    return names + [f"beta[{d}]" for d in design_names] + ["sigma"]


def _constraint_flags(theta: ParamVector) -> dict:
    used = theta.budget_used()
    return {
        "budget_used": used,
        "budget_active": used >= BUDGET - 1e-4,
        "sigma_lower_active": theta.sigma <= 10 * SIGMA_MIN,
        "sigma_upper_active": theta.sigma >= SIGMA_MAX - 1e-6,
    }


def fit(data: Dataset, spec: ModelSpec, opts: Optional[FitOptions] = None,
        X: Optional[np.ndarray] = None, design_names=None) -> FitResult:
    """Maximize the marginal likelihood of ``spec`` on ``data``; best of several starts.

    The design is built from ``spec.formula`` unless ``X`` is given.
    """
    opts = opts or FitOptions()
    if data.I == 0:
        raise ValueError("empty dataset")
    if spec.tree.M != data.M:
        raise ValueError(f"tree has M={spec.tree.M} but data were read with M={data.M}")
    if X is None:
        X, design_names = design_matrix(data, spec.formula)
    X = np.asarray(X, dtype=float).reshape(data.I, -1)
    design_names = list(design_names or [f"x{k + 1}" for k in range(X.shape[1])])
    obj = _Objective(data, X, spec)
    runner = _run_quasi_newton if opts.optimizer == "quasi-newton" else _run_auglag

    runs = []
    for theta0 in start_points(obj.n_alpha, obj.n_beta, opts.starts, opts.seed):
        runs.append(runner(obj, theta0, opts))
    logliks = [-run.fun for run in runs]
    best = max(range(len(runs)), key=lambda k: (logliks[k], -k))
    run = runs[best]
    theta = unpack(run.x, obj.n_alpha, obj.n_beta, "constrained")

    flags = _constraint_flags(theta)
    n_ab = obj.n_alpha + obj.n_beta
    at_bound = np.zeros(theta.size, bool)
    if flags["budget_active"]:
        at_bound[:n_ab] = True
    if flags["sigma_lower_active"] or flags["sigma_upper_active"]:
        at_bound[-1] = True
    ses = standard_errors(obj, run.x, sigma_index=theta.size - 1, at_bound=at_bound)

    return FitResult(
        theta=theta,
        loglik=-run.fun,
        n_obs=data.I,
        param_names=param_names(spec, design_names),
        std_errors=ses.se,
        se_reliable=ses.reliable,
        se_reasons=ses.reasons,
        converged=run.converged,
        iterations=run.iterations,
        gradient_norm=run.gradient_norm,
        constraints=flags,
        degenerate_data=data.is_degenerate(),
        n_floored=obj.n_floored(run.x),
        start_logliks=logliks,
        best_start=best,
        spec=spec,
        design_names=design_names,
        levels=data.all_levels(),
        options=opts,
        label=spec.name,
    )


def summary_table(fits, labels=None) -> list:
    """Rows ``(rank, model, covariates, p, lnL, BIC)`` in BIC order."""
    order = compare(fits)
    rows = []
    for rank, k in enumerate(order, start=1):
        f = fits[k]
        name = labels[k] if labels else (f.label or f"model{k + 1}")
        tree = f.spec.tree.name if f.spec else ""
        cov = str(f.spec.formula) if f.spec else ""
        rows.append({
            "rank": rank,
            "model": name,
            "tree": tree,
            "covariates": cov.replace("+", ", ") or "-",
            "p": f.n_params,
            "lnL": f.loglik,
            "BIC": f.bic,
        })
    return rows
