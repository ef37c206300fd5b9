"""Computational geometry of finite-dimensional normed spaces: convexity and
smoothness moduli, duality maps, normal cones of closed sets, rolling-ball
certificates, and hypomonotonicity diagnostics."""

from .norms import (
    DegenerateBody,
    DimensionMismatch,
    MultiValued,
    NormSpec,
    NotSymmetric,
    ZeroVector,
    birkhoff_orthogonal,
    dual_norm_batch,
    dual_norm_eval,
    duality_map,
    ellipse_norm,
    lp_norm,
    norm_batch,
    norm_eval,
    norm_from_json,
    norm_to_json,
    pairing,
    polygon_norm,
    sphere_points,
    subdifferential_extremes,
    support_point,
    unit_vector,
    weighted_lp_norm,
)
from .moduli import (
    EquivalenceReport,
    FigielReport,
    ModulusCurve,
    NotQuasiorthogonal,
    NotUnitVectors,
    SearchBudget,
    delta_estimate,
    doubling_ratio,
    equivalence_probe,
    figiel_check,
    hilbert_delta,
    hilbert_rho,
    omega_eval,
    omega_inverse,
    rho_estimate,
    support_shift,
    supporting_modulus_estimate,
)
from .psifuncs import (
    NegativeValue,
    NonzeroAtZero,
    NotConvex,
    PreconditionViolated,
    PsiSpec,
    builtin_psi,
    figiel_class_check,
    psi_from_curve,
    regularize_psi,
    rescale_psi,
    validate_psi,
)
from .sets import (
    CheckReport,
    ClosedSetSpec,
    EmptyShell,
    InteriorPoint,
    NoIntersection,
    NormalConeSample,
    boundary_sample,
    chord_projection_check,
    contains,
    cylinder_extend,
    distance,
    john_ellipse_2d,
    make_ball,
    make_ball_complement,
    make_finite_points,
    make_halfspace,
    make_polytope_complement,
    normal_cone_sample,
    project,
    projection_normal_check,
    prox_smooth_certificate,
    rolling_ball_check_normal,
    rolling_ball_check_projection,
    set_from_json,
    set_to_json,
    shell_sample,
    support_gap_check,
)
from .hypo import (
    ConstructionFailed,
    HypoReport,
    NoFeasiblePairs,
    gamma_estimate,
    hypo_check,
    section_bound_check,
    touching_point_search,
)
from .zoo import (
    DEFAULT_SET_SCALES,
    ZooEntry,
    ambient_norm,
    linf_box_complement,
    norm_zoo,
    sample_inside,
    set_registry,
    set_zoo,
)

__version__ = "0.1.0"
