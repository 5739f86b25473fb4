"""Curvature of warped product metrics, explicit pinched families, and loop heat flow."""

__version__ = "0.1.0"

from .chart import (
    ChartMetric,
    CurvatureOperator,
    CurvatureTensor4,
    DegenerateMetricError,
    DegeneratePlaneError,
    DomainError,
    GeometryError,
    StencilOutOfDomainError,
    TangentPlane,
    christoffel_at,
    curvature_operator_at,
    koszul_residual,
    riemann_at,
    sectional_at,
    sectional_curvatures,
)
from .families import (
    GluingMap,
    PiecewiseWarpMetric,
    breakpoint_smoothness,
    build_lambda_r,
    build_lambda_r_s,
    build_rho_r,
    build_tube,
)
from .heatflow import ClosedCurve, FlowTrace, energy, flow_step, flow_until, tension
from .pinching import (
    PinchReport,
    SamplingGrid,
    WarpFamily,
    curvature_range,
    find_alpha0,
    find_min_r,
    lemma22_terms,
)
from .profiles import SmoothStep, delta_profiles, eta_profile
from .warp import (
    DoublyWarpedFrame,
    WarpFunction,
    assemble_doubly_warped,
    convex_weights,
    doubly_warped_K,
    single_warp_K,
    warp_terms,
    warped_connection,
    warped_curvature_images,
)
