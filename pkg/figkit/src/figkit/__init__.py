"""figkit: regenerate benchmark figures from kinuq CSV artifacts.

The package reads only the published CSV schemas; it never imports the
solver.
"""

__version__ = "0.1.0"

from .schema import SchemaError, read_csv, validate_columns
from .render import FigureSpec, render

__all__ = ["FigureSpec", "render", "SchemaError", "read_csv", "validate_columns"]
