"""Time-frequency concentration of function systems on a discretized real line."""

from .grid import Grid, SampledFunction, fourier, inverse_fourier, make_grid, sample
from .moments import ConcentrationReport, concentration_report, p_dispersion, p_mean

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "SampledFunction",
    "ConcentrationReport",
    "make_grid",
    "sample",
    "fourier",
    "inverse_fourier",
    "concentration_report",
    "p_mean",
    "p_dispersion",
]
