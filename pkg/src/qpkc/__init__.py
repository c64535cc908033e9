"""Simulator of an entanglement-based quantum public-key cryptosystem."""

from ._kernels import BACKEND
from .qmath import Party, RandomSource

__version__ = "0.1.0"

__all__ = ["BACKEND", "Party", "RandomSource", "__version__"]
