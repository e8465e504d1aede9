"""Shifted convolution Dirichlet series, Poincare series and Rankin-Cohen products."""
from .qalg import QSeries

__all__ = ["QSeries"]
__version__ = "0.1.0"
