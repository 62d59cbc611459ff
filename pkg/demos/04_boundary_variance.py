"""What happens when the data carry no ability variance.

With sigma = 0 in the generating process the likelihood is flat in sigma
near zero.  The estimate sits at the lower boundary and its standard error
is reported but flagged, which is the honest outcome for such data.
"""

from fuzzyirtree import FitOptions, ModelSpec, ParamVector, fit, linear_tree
from fuzzyirtree.simulate import SimConfig, make_rng, sample_dataset

x = make_rng(1003).standard_normal(500)
data = sample_dataset(SimConfig(ParamVector.make([-1.0], [1.0], 0.0), linear_tree(4), x[:, None],
                                seed=3, covariates={"x": x}))
res = fit(data, ModelSpec.build("linear", 4, "x"))
for name, est, se, note in zip(res.param_names, res.estimates(), res.std_errors, res.se_reasons):
    print(f"{name:8s} {est:10.3g}  SE {se:8.3g}  {note or 'ok'}")
print("constraint activity:", res.constraints)
