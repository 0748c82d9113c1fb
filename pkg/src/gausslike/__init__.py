"""Dimension of limsup sets of weighted digit products for d-decaying Gauss-like systems."""

from .dimension import DimensionResult, critical_exponent, critical_exponent_sweep, convergence_diagnostics
from .errors import ConfigError, ConsistencyError, GaussLikeError, NumericError, SizeCapError
from .ifs_core import SystemSpec, cylinder_interval, expand, tail_union
from .pressure import partition_sum, pressure_eigenvalue, pressure_tail_extrapolate, series_pressure
from .weight_program import SimplexPoint, TargetSpec, a_component, a_of_b, a_of_s

__version__ = "0.1.0"
