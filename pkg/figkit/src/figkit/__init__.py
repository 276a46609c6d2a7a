"""Deterministic figures from vdmfpca CLI output files.

Reads only the documented CSV schemas (benchmark results and fit artifacts)
and renders them; no statistic is ever recomputed here.
"""

from .spec import FigureSpec, SchemaError, load_spec
from .render import render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "SchemaError", "load_spec", "render"]
