"""Metastable Metropolis chains on one-dimensional multimodal targets."""

from .intervals import IntervalUnion
from .kernels import RestrictedKernel, RwmKernel
from .streams import stream
from .targets import GaussianMixtureTarget, RestrictedTarget, mixture

__all__ = [
    "GaussianMixtureTarget",
    "IntervalUnion",
    "RestrictedKernel",
    "RestrictedTarget",
    "RwmKernel",
    "mixture",
    "stream",
]

__version__ = "0.1.0"
