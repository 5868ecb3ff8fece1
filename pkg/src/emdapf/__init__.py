"""EMD-assisted shunt active power filter simulation."""

from ._core import BACKEND
from .signal import ThreePhaseSignal, TimeSeries

__version__ = "0.1.0"

__all__ = ["BACKEND", "ThreePhaseSignal", "TimeSeries", "__version__"]
