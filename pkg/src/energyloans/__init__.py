"""Bilateral energy-loan negotiation in a residential energy cooperative."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
