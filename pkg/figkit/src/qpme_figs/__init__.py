"""Figure panels for qpme CSV outputs."""

from .panels import PanelError, read_series_csv, render_panel

__version__ = "0.1.0"
