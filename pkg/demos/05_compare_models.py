"""Rank five candidate models by BIC on one dataset.

Models differ in covariates and tree shape.  Ties in BIC go to the model
with fewer parameters, then to the earlier entry.
"""

from fuzzyirtree import FitOptions, ModelSpec, ParamVector, fit
from fuzzyirtree.report import format_table
from fuzzyirtree.estimate import summary_table
from fuzzyirtree.simulate import SimConfig, sample_dataset, simulate_covariates

cov = simulate_covariates(300, {"sex": ("categorical", ["F", "M"]), "das": ("uniform", [0, 1.4])}, seed=8)
truth = ModelSpec.build("linear", 5, "sex+das")
X, _ = truth.formula.design(cov, {"sex": ["F", "M"]})
data = sample_dataset(SimConfig(ParamVector.make([-1.2], [0.4, 1.3], 0.3), truth.tree, X, seed=8,
                                covariates=cov))

specs = [ModelSpec.build("linear", 5, "", name="M1"),
         ModelSpec.build("linear", 5, "sex", name="M2"),
         ModelSpec.build("linear", 5, "sex+das", name="M3"),
         ModelSpec.build("linear", 5, "sex+das+sex:das", name="M4"),
         ModelSpec.build("nested", 5, "sex+das", name="M5")]
fits = [fit(data, s, FitOptions(starts=3)) for s in specs]
print(format_table(summary_table(fits)))
