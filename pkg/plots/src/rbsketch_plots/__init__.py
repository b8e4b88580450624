"""Figure rendering over experiment CSVs; no estimator computation."""

from .render import FigureSpec, SchemaError, render, sqrt_chi2_density

__version__ = "0.1.0"
