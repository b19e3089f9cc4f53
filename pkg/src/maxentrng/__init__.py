"""Pool-based maximum-entropy normal generator, conventional baselines and a
statistical defect-detection suite."""
from ._backend import BACKEND
from .baselines import BaselineState, BoxMullerState, new_uniform
from .chi2 import Chi2Method, Chi2Params, chi2_sample, compute_a
from .errors import ConfigurationError, InvalidParameterError
from .generator import Generator, GeneratorConfig, Mixing, NormalPool, TransformFamily

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BaselineState",
    "BoxMullerState",
    "Chi2Method",
    "Chi2Params",
    "ConfigurationError",
    "Generator",
    "GeneratorConfig",
    "InvalidParameterError",
    "Mixing",
    "NormalPool",
    "TransformFamily",
    "chi2_sample",
    "compute_a",
    "new_uniform",
]
