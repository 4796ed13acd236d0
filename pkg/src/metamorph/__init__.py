"""Metamorphic testing harness for a correlation-ranking and LSTM forecasting pipeline."""

from .errors import MetamorphError
from .verdict import FAIL, PASS, WARN, MrVerdict

__version__ = "0.1.0"
__all__ = ["FAIL", "PASS", "WARN", "MetamorphError", "MrVerdict", "__version__"]
