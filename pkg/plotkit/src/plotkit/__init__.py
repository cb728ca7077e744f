"""Static figures from qtransfer CSV outputs."""

from .jobs import KINDS, FigureJob, SchemaError
from .render import render

__version__ = "0.1.0"

__all__ = ["FigureJob", "KINDS", "SchemaError", "render", "__version__"]
