"""Plane wave limits of semi-Riemannian metrics.

Modules
-------
exprlang   expression parser and compiled second-order jets
geometry   metrics, Christoffel symbols and curvature
transport  geodesics and parallel normal frames
limit      wave profiles, assembled limits, lifts, Rosen coordinates
ppwave     pp-wave classification and reduced geodesics
deviation  Jacobi fields, conjugate points, index form
scenarios  built-in metrics
evidence   forward-direction checks of inherited curvature properties
cli        scenario runner
"""

from .errors import (CausalDependenceError, ConfigError, DegenerateMetricError,
                     ExprDomainError, ExprSyntaxError, IntegrationQualityError, PwlabError)
from .exprlang import parse
from .geometry import MetricSpec, curvature_at
from .limit import WaveProfile, assemble_plane_wave, wave_profile
from .transport import geodesic_with_frame, integrate_geodesic, parallel_transport

__all__ = [
    "CausalDependenceError", "ConfigError", "DegenerateMetricError", "ExprDomainError",
    "ExprSyntaxError", "IntegrationQualityError", "PwlabError", "parse", "MetricSpec",
    "curvature_at", "WaveProfile", "assemble_plane_wave", "wave_profile",
    "geodesic_with_frame", "integrate_geodesic", "parallel_transport",
]
