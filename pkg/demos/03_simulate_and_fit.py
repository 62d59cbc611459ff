"""Simulate a dataset, fit the model, and read the standard errors.

Both optimizer paths are shown.  They should agree to about 1e-4.
"""

import numpy as np

from fuzzyirtree import FitOptions, ModelSpec, ParamVector, fit, linear_tree
from fuzzyirtree.simulate import SimConfig, make_rng, sample_dataset

theta0 = ParamVector.make([-1.0], [1.0], 0.5)
x = make_rng(1007).standard_normal(500)
data = sample_dataset(SimConfig(theta0, linear_tree(4), x[:, None], seed=7, covariates={"x": x}))
print(f"simulated I = {data.I}; share with nonzero spreads: {np.mean((data.l + data.r) > 0):.2f}")

spec = ModelSpec.build("linear", 4, "x")
for optimizer in ("quasi-newton", "auglag"):
    res = fit(data, spec, FitOptions(optimizer=optimizer))
    print(f"\n{optimizer}: lnL = {res.loglik:.4f}, BIC = {res.bic:.3f}, converged = {res.converged}")
    for name, est, se, ok, true in zip(res.param_names, res.estimates(), res.std_errors,
                                       res.se_reliable, theta0.as_array()):
        print(f"  {name:8s} {est:8.4f}  SE {se:.4f}{'' if ok else ' (unreliable)'}   true {true}")
