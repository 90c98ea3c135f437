"""Context-dependent variable importances from totally randomized tree ensembles.

Identifies input variables whose information about an output changes with a
categorical context variable, characterizes the direction of the change, and
quantifies significance with permutation tests.  An exact subset-enumeration
oracle evaluates the asymptotic (infinite-ensemble) scores on small joint
distributions for verification.
"""

__version__ = "0.1.0"

from .dataset import (ColumnSchema, Dataset, generate_example1,
                      generate_problem1, generate_problem2, load_csv, save_csv)
from .errors import ConfigError, CtximpError, DataError, GuardExceededError
from .forest import Forest, RngSpec, TreeNode, build_forest, build_tree
from .importance import (ImportanceReport, characterize, contextual_abs,
                         contextual_global, contextual_signed,
                         importance_report, mdi, per_context_baseline)
from .impurity import (ImpurityKind, SampleSubset, conditional_impurity_decrease,
                       impurity, impurity_decrease)
from .oracle import (ContextualScores, JointDistribution, TheoremReport,
                     asymptotic_contextual, asymptotic_mdi, characterize_exact,
                     cond_mi, from_dataset, is_context_dependent, is_relevant,
                     load_distribution, random_distribution, save_distribution,
                     verify_theorems)
from .pairwise import (InteractionMatrix, baseline_pairwise, load_numeric_csv,
                       pairwise_analysis, quantile_discretize)
from .permtest import PermutationResult, epsilon_from_null, permutation_pvalues

__all__ = [
    "__version__",
    "ColumnSchema", "Dataset", "generate_example1", "generate_problem1",
    "generate_problem2", "load_csv", "save_csv",
    "CtximpError", "ConfigError", "DataError", "GuardExceededError",
    "Forest", "RngSpec", "TreeNode", "build_forest", "build_tree",
    "ImportanceReport", "characterize", "contextual_abs", "contextual_global",
    "contextual_signed", "importance_report", "mdi", "per_context_baseline",
    "ImpurityKind", "SampleSubset", "conditional_impurity_decrease",
    "impurity", "impurity_decrease",
    "ContextualScores", "JointDistribution", "TheoremReport",
    "asymptotic_contextual", "asymptotic_mdi", "characterize_exact", "cond_mi",
    "from_dataset", "is_context_dependent", "is_relevant", "load_distribution",
    "random_distribution", "save_distribution", "verify_theorems",
    "InteractionMatrix", "baseline_pairwise", "load_numeric_csv",
    "pairwise_analysis", "quantile_discretize",
    "PermutationResult", "epsilon_from_null", "permutation_pvalues",
]
