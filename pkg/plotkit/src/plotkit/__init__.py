"""Renders exported analysis tables into the four standard figures.

Input coupling is files only: 1D/2D scan grids, normalized score tables,
and long-format sweep tables, all plain CSV. Output is deterministic SVG.
"""

from .figures import FIGURE_KINDS, FigureSpec, render
from .tables import SchemaError, read_grid, read_scores, read_sweep

__version__ = "0.1.0"

__all__ = [
    "FIGURE_KINDS",
    "FigureSpec",
    "SchemaError",
    "read_grid",
    "read_scores",
    "read_sweep",
    "render",
    "__version__",
]
