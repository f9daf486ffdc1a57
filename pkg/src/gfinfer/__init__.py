"""Exact posterior inference for discrete probabilistic programs."""

from .errors import EvaluationError, FrontEndError, GfError
from .kernels import make_kernel
from .parser import parse, parse_file, render

__version__ = "0.1.0"

__all__ = ["parse", "parse_file", "render", "make_kernel", "GfError", "FrontEndError",
           "EvaluationError", "__version__"]
