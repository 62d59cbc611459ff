"""Marginal effects of covariates on category choice and on fuzziness.

Uses fixed parameters of the size reported for a small survey.  The grid
crosses das at (0, min, mean, max) with both sex levels.
"""

import numpy as np

from fuzzyirtree import FitResult, ModelSpec, ParamVector
from fuzzyirtree.data import Dataset
from fuzzyirtree.effects import marginal_effects

rng = np.random.default_rng(0)
I = 69
data = Dataset(np.ones(I, int), np.zeros(I, int), np.zeros(I, int), 4,
               {"sex": np.where(rng.random(I) < 0.5, "F", "M"), "das": rng.uniform(0.1, 1.4, I)})
fit = FitResult(theta=ParamVector.make([-1.248], [0.408, 1.284], 0.005), loglik=float("nan"), n_obs=I,
                spec=ModelSpec.build("linear", 4, "sex+das"), levels={"sex": ["F", "M"]})

grid = marginal_effects(fit, data, {"sex": ["F", "M"], "das": ["0", "min", "mean", "max"]})
for point, pi, xi in zip(grid.points, grid.pi_y, grid.xi):
    label = ", ".join(f"{k}={v[0]}" for k, v in point.items())
    print(f"{label:18s} pi_y = {np.round(pi, 3)}  xi = {xi:.3f}")

integrated = marginal_effects(fit, data, {"sex": ["F"], "das": ["mean"]}, mode="integrated")
print("\nplug-in vs integrated at sex=F, das=mean (sigma is tiny, so they nearly match):")
print(" ", np.round(grid.pi_y[2], 6), np.round(integrated.pi_y[0], 6))
