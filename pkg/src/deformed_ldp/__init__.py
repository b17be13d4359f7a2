"""Large deviations of the smallest eigenvalue of deformed GOE matrices."""
from .errors import ComputeError, ConfigError
from .freeconv import FreeConvContext
from .measure import AtomicMeasure, QuantileSpec, discretize, load_measure
from .rate import INFINITY, Branch, DeformedModel, is_infinite

__all__ = [
    "AtomicMeasure", "QuantileSpec", "discretize", "load_measure",
    "FreeConvContext", "DeformedModel", "Branch", "INFINITY", "is_infinite",
    "ConfigError", "ComputeError",
]
