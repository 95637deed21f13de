"""Riemannian geometry of the Webster adapted metrics and level sets of the potential."""

from .critical import CriticalComponent, CriticalSetResult, DiffeoReport, classify, critical_set, find_components
from .levelsets import (
    CriticalValue,
    LevelSurface,
    ProjectionFailed,
    brioschi,
    induced_metric,
    intrinsic_curvature,
    isoparametric_check,
    level_surface,
    level_surface_report,
    project,
)
from .metric import AdaptedMetricData, adapted_metric, adapted_metric_report, connection_form_identities, expected_ricci

__all__ = [
    "AdaptedMetricData",
    "CriticalComponent",
    "CriticalSetResult",
    "CriticalValue",
    "DiffeoReport",
    "LevelSurface",
    "ProjectionFailed",
    "adapted_metric",
    "adapted_metric_report",
    "brioschi",
    "classify",
    "connection_form_identities",
    "critical_set",
    "find_components",
    "induced_metric",
    "intrinsic_curvature",
    "isoparametric_check",
    "expected_ricci",
    "level_surface",
    "level_surface_report",
    "project",
]
