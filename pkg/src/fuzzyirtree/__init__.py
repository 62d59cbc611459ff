"""IRTree model for LR-type triangular fuzzy rating responses.

Category choice follows a binary decision tree with logistic nodes; the left
and right spreads follow an entropy-weighted mixture of Binomials and a point
mass at zero.  The latent ability is integrated out by Gauss-Hermite
quadrature for marginal maximum likelihood.
"""

__version__ = "0.1.0"

from .irtree import (NodeEasiness, TreeError, TreeSpec, builtin_tree, category_probs,
                     linear_tree, nested_tree, node_prob, validate_tree)
from .fuzzymix import (FuzzyRating, conditional_pmf, entropy_weight, log_conditional_pmf,
                       lower_share, spread_bracket, valid_ratings)
from .params import ParamVector, pack, unpack
from .quadrature import GHRule, gauss_hermite, log_likelihood, marginal_pmf
from .data import (Dataset, DataError, Formula, ModelSpec, design_matrix, load_config,
                   read_dataset, write_dataset)
from .estimate import (FitOptions, FitResult, bic, compare, fit, standard_errors,
                       summary_table)
from .simulate import RNG_VERSION, SimConfig, sample_dataset, sample_one, make_rng
from .effects import EffectsGrid, marginal_effects

__all__ = [
    "__version__",
    "NodeEasiness", "TreeError", "TreeSpec", "builtin_tree", "category_probs", "linear_tree",
    "nested_tree", "node_prob", "validate_tree",
    "FuzzyRating", "conditional_pmf", "entropy_weight", "log_conditional_pmf", "lower_share",
    "spread_bracket", "valid_ratings",
    "ParamVector", "pack", "unpack",
    "GHRule", "gauss_hermite", "log_likelihood", "marginal_pmf",
    "Dataset", "DataError", "Formula", "ModelSpec", "design_matrix", "load_config", "read_dataset",
    "write_dataset",
    "FitOptions", "FitResult", "bic", "compare", "fit", "standard_errors", "summary_table",
    "RNG_VERSION", "SimConfig", "sample_dataset", "sample_one", "make_rng",
    "EffectsGrid", "marginal_effects",
]
