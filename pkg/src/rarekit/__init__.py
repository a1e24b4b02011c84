"""Rare-set probabilities for heavy-tailed random vectors.

Polyhedral rare sets, univariate tail models and class checks, multivariate
claim models, FGM-coupled scale mixtures, a discounted compound Poisson risk
model and lower-bound large-deviation checks, with seeded Monte Carlo and
analytic oracles throughout.
"""

__version__ = "0.1.0"

from .mc import EstimateCI, InfeasibleError  # noqa: E402
from .rare_sets import RareSet, RuinKind, RuinSet, ruin_set_to_rare_set  # noqa: E402
from .tails import (  # noqa: E402
    BoundedUniform,
    Degenerate,
    Exponential,
    LogNormal,
    LogPareto,
    Pareto,
    WeibullHeavy,
)
from .vectors import IndependentMarginals, MrvRay  # noqa: E402

__all__ = [
    "EstimateCI", "InfeasibleError", "RareSet", "RuinKind", "RuinSet", "ruin_set_to_rare_set",
    "BoundedUniform", "Degenerate", "Exponential", "LogNormal", "LogPareto", "Pareto", "WeibullHeavy",
    "IndependentMarginals", "MrvRay",
]
