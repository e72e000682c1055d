"""
tempered-shocks - bivariate tempered space-fractional Poisson processes and competing-risks shock models
"""

try:
    from ._version import __version__
except ImportError:
    __version__ = "0.0.0+unknown"

from .errors import (
    DomainError,
    ParameterError,
    QuadratureError,
    SeriesConvergenceError,
    ShockModelError,
    TruncationError,
    UnsupportedError,
)
from .magic import ShockMagics, load_ipython_extension, unload_ipython_extension
from .process import BivariateCount, ProcessParams, SubordinatedPoisson, btsfpp_pmf
from .shock import failure_cause_prob, failure_law, hazard_rate, reliability
from .subordinator import Deterministic, Gamma, Stable, TemperedStable

__all__ = [
    "__version__",
    "BivariateCount",
    "Deterministic",
    "DomainError",
    "Gamma",
    "ParameterError",
    "ProcessParams",
    "QuadratureError",
    "SeriesConvergenceError",
    "ShockMagics",
    "ShockModelError",
    "Stable",
    "SubordinatedPoisson",
    "TemperedStable",
    "TruncationError",
    "UnsupportedError",
    "btsfpp_pmf",
    "failure_cause_prob",
    "failure_law",
    "hazard_rate",
    "load_ipython_extension",
    "reliability",
    "unload_ipython_extension",
]
