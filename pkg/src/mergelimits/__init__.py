"""Merging limits for expert model ensembles.

Numerical library and experiment runners covering linear merging variance
laws, Gaussian-width geometry of loss sublevel sets, the kinematic phase
transition, heavy-tailed reparameterization, and subspace diagnostics.
"""

from . import experiments, geometry, merge, plotting, rht, subspace, tensorio
from .errors import ConfigError, FormatError, MergeLimitsError, NumericError

__version__ = "0.1.0"

__all__ = [
    "experiments",
    "geometry",
    "merge",
    "plotting",
    "rht",
    "subspace",
    "tensorio",
    "ConfigError",
    "FormatError",
    "MergeLimitsError",
    "NumericError",
    "__version__",
]
