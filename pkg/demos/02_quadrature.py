"""Integrating the ability out with Gauss-Hermite quadrature.

The rule is exact for polynomials up to degree 2H-1.  For the logistic
integrand here, accuracy at a fixed H depends on the ability spread sigma:
small sigma converges fast, sigma near the upper bound 3.5 needs many nodes.
"""

import numpy as np

from fuzzyirtree import ParamVector, gauss_hermite, linear_tree, marginal_pmf

rule = gauss_hermite(5)
print("5-point rule nodes:  ", np.round(rule.gamma, 6))
print("5-point rule weights:", np.round(rule.omega, 6), "sum =", rule.omega.sum(), "(sqrt(pi) =", np.sqrt(np.pi), ")")

tree = linear_tree(4)
y = (2, 1, 1)
for sigma in (0.2, 1.0, 3.5):
    theta = ParamVector.make([-1.0], [], sigma)
    ref = marginal_pmf(y, theta, [], tree, gauss_hermite(400))
    row = "  ".join(f"H={H}: {abs(marginal_pmf(y, theta, [], tree, gauss_hermite(H)) - ref):.1e}"
                    for H in (10, 20, 30, 61, 150))
    print(f"sigma = {sigma}: |error| vs H=400  {row}")
