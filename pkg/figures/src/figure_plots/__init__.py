"""Figure rendering for experiment CSVs."""

from .plot import PlotSpec, main, plot_heatmap, plot_ratio_lines, plot_slope

__version__ = "0.1.0"
