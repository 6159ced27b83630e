"""Single-shot texture and depth-gradient recovery from fringe-lit captures."""
from ._kernels import BACKEND
from .core import FringelabError, GradientField, RgbImage, Rng, ScalarField

__version__ = "0.1.0"

__all__ = ["BACKEND", "FringelabError", "GradientField", "RgbImage", "Rng", "ScalarField", "__version__"]
