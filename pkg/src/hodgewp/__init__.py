"""Weil-Petersson geometry and period-domain toolkit for polarized variations of Hodge structure."""

from .field import QQi
from .series import TruncatedSeries

__version__ = "0.1.0"

__all__ = ["QQi", "TruncatedSeries", "__version__"]
