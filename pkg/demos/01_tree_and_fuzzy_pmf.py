"""How a fuzzy rating gets its probability.

A rater first picks a core category by walking a binary decision tree, then
(with probability xi, the normalized entropy of the category probabilities)
stretches the response left and right by Binomial amounts.
"""

import numpy as np

from fuzzyirtree import (category_probs, conditional_pmf, entropy_weight, linear_tree, lower_share,
                         nested_tree, valid_ratings)

tree = linear_tree(4)
print("linear tree for M = 4 (rows = categories, columns = nodes):")
for m, row in enumerate(tree.to_strings(), start=1):
    print(f"  category {m}: {row}")

alpha = np.full(tree.N, -0.5)
for eta in (-2.0, 0.0, 2.0):
    pi = category_probs(tree, eta, alpha)
    print(f"\neta = {eta:+.1f}: pi_y = {np.round(pi, 3)}, xi = {entropy_weight(pi):.3f}")
    print("  lower share per core:", [round(lower_share(pi, c), 3) for c in range(1, 5)])

eta = 0.3
lattice = valid_ratings(4)
probs = {y: conditional_pmf(y, eta, alpha, tree) for y in lattice}
print(f"\n{len(lattice)} admissible (c, l, r) triples; total probability {sum(probs.values()):.12f}")
top = sorted(probs.items(), key=lambda kv: -kv[1])[:5]
for y, p in top:
    print(f"  {y}: {p:.4f}")

print("\nnested tree for M = 5:")
for m, row in enumerate(nested_tree().to_strings(), start=1):
    print(f"  category {m}: {row}")
print("pi_y at eta = 0:", category_probs(nested_tree(), 0.0, np.zeros(4)))
