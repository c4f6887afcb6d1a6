"""Squeezed-light photometry for early detection of bacterial growth."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
