"""Numerical laboratory for Riemannian foliations.

Expressions are parsed by :mod:`.expr` and evaluated as truncated Taylor
jets, so every derivative the geometry needs (Christoffel symbols,
curvature, brackets, covariant derivatives of frames) is exact up to
roundoff.  :mod:`.foliation` builds adapted frames, :mod:`.operators` the
normal-bundle operators, :mod:`.leaf` integrates over leaves, and
:mod:`.checks` turns identities into sampled, reportable residuals.
"""

from .checks import (
    CheckReport,
    SamplingPlan,
    check_foliation_preserving,
    check_integrable,
    check_integral_identity,
    check_jacobi_field,
    check_killing,
    check_lemma2,
    check_lemma3,
    check_minimal,
    check_prop3_divergence,
    check_prop4_transport,
)
from .errors import (
    DomainError,
    ExprError,
    ExprSyntaxError,
    FoliationLabError,
    GeodesicExitError,
    HypothesisWarning,
    MetricError,
    MisuseError,
    PivotWarning,
    RankError,
    ScenarioError,
    UnboundSymbolError,
    UnknownFunctionError,
)
from .expr import Expression, evaluate, parse
from .foliation import FoliationSpec, adapted_frame_at, frobenius_residual, mean_curvature, project, shape_operator
from .geometry import Chart, VectorFieldSpec, christoffel_at, covariant_derivative, geodesic_flow, lie_bracket, metric_at, riemann
from .leaf import LeafPatch, VariationField, integrate_leaf, leaf_volume, second_variation_direct, stability_report
from .operators import a_hat, alpha, alpha_transpose, curvature_trace, div_full, div_leaf, f_vw, jacobi, nabla_perp, nabla_perp_squared
from .scenarios import BUILTIN_NAMES, Scenario, builtin, dump_scenario, load_scenario, loads_scenario, resolve
