"""Figure rendering for chemotax experiment outputs (CSV/JSON only)."""

from .io import experiment_layout, load_curve, load_snapshot
from .panels import FigureSpec, render

__version__ = "0.1.0"
__all__ = ["FigureSpec", "render", "experiment_layout", "load_curve", "load_snapshot"]
