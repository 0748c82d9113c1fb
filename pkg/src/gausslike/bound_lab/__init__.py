"""Desk-scale checks of the covering upper bound and the Cantor-set lower bound."""

from .cantor import (
    CantorMeasure,
    CantorSpec,
    MeasureNode,
    cantor_generate,
    cantor_measure,
    local_dimension_sample,
    natural_cover_exponent,
)
from .covers import CoverCost, CoverSpec, cover_cost_exact, cover_cost_transition, cover_validity
