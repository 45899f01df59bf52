"""hbl: multiple Hermite polynomials, Riemann-Hilbert recurrence data,
correlation kernels and Painleve II double-scaling asymptotics for
non-intersecting Brownian motions with two starting and two ending points.
"""

__version__ = "1.0.0"

from .model import BrownianConfig, Regime, classify_separation
from .mop import MultiIndexPair, WeightSystem

__all__ = [
    "BrownianConfig",
    "Regime",
    "classify_separation",
    "MultiIndexPair",
    "WeightSystem",
    "__version__",
]
