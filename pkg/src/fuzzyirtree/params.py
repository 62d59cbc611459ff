"""Parameter vector, its constraint set, and the optimizer coordinate maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BUDGET = 5.0
SIGMA_MAX = 3.5


@dataclass(frozen=True)
class ParamVector:
    """Node easiness ``alpha`` (1 or N values), covariate effects ``beta`` and ability SD ``sigma``."""

    alpha: np.ndarray
    beta: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.atleast_1d(np.asarray(self.alpha, dtype=float)))
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)).reshape(-1))
        object.__setattr__(self, "sigma", float(self.sigma))

    @classmethod
    def make(cls, alpha, beta=(), sigma=1.0) -> "ParamVector":
        return cls(np.atleast_1d(alpha), np.asarray(beta, dtype=float), sigma)

    @property
    def n_alpha(self) -> int:
        return self.alpha.size

    @property
    def n_beta(self) -> int:
        return self.beta.size

    @property
    def size(self) -> int:
        return self.n_alpha + self.n_beta + 1

    def budget_used(self) -> float:
        return float(np.abs(self.alpha).sum() + np.abs(self.beta).sum())

    def is_feasible(self, tol: float = 1e-9) -> bool:
        return (self.budget_used() <= BUDGET + tol
                and 0.0 < self.sigma <= SIGMA_MAX + tol)

    def check(self) -> "ParamVector":
        if not np.all(np.isfinite(self.alpha)) or not np.all(np.isfinite(self.beta)):
            raise ValueError("non-finite alpha/beta")
        if not self.is_feasible():
            raise ValueError(
                f"parameter outside the constraint set: sum|alpha,beta|={self.budget_used():.6g} "
                f"(max {BUDGET}), sigma={self.sigma:.6g} (must be in (0, {SIGMA_MAX}])"
            )
        return self

    def as_array(self) -> np.ndarray:
        return pack(self, "constrained")


def pack(theta: ParamVector, mode: str = "transformed") -> np.ndarray:
    """Flatten to ``[alpha..., beta..., s]`` with ``s = log(sigma)`` or ``sigma``."""
    if mode == "transformed":
        s = np.log(theta.sigma)
    elif mode == "constrained":
        s = theta.sigma
    else:
        raise ValueError(f"unknown pack mode {mode!r}")
    return np.concatenate([theta.alpha, theta.beta, [s]])


def unpack(vec, n_alpha: int, n_beta: int, mode: str = "transformed") -> ParamVector:
    vec = np.asarray(vec, dtype=float)
    if vec.size != n_alpha + n_beta + 1:
        raise ValueError(f"expected {n_alpha + n_beta + 1} values, got {vec.size}")
    s = vec[-1]
    if mode == "transformed":
        sigma = np.exp(s)
    elif mode == "constrained":
        sigma = s
    else:
        raise ValueError(f"unknown pack mode {mode!r}")
    return ParamVector(vec[:n_alpha].copy(), vec[n_alpha:n_alpha + n_beta].copy(), sigma)


def project(theta: ParamVector, sigma_min: float = 1e-8) -> ParamVector:
    """Nearest-by-scaling feasible point: shrink (alpha, beta) onto the budget, clamp sigma."""
    used = theta.budget_used()
    scale = BUDGET / used if used > BUDGET else 1.0
    sigma = min(max(theta.sigma, sigma_min), SIGMA_MAX)
    return ParamVector(theta.alpha * scale, theta.beta * scale, sigma)
