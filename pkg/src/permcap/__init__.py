"""Closed-form estimates of two-sample permutation p-values on the sphere."""

from .combinatorics import GroupSizes, inner_product_at_swap, log_orbit_size, pair_census, triple_table
from .errors import (
    DegenerateInputError,
    DomainError,
    IngestionError,
    OrbitTooLargeError,
    PermcapError,
    QuadratureError,
)
from .estimators import (
    Estimator,
    MomentReport,
    Sided,
    StandardizedPair,
    chebychev_bound,
    choose_conditioning_point,
    p_hat1,
    report,
    second_moment_ref2,
    tilde_p_c,
    var_ref1,
    z_score,
)
from .inclusion import EqualityClass, SubsphereContext, double_inclusion, single_inclusion
from .oracle import OracleConfig, exact_p, mc_p
from .sphere import (
    DEFAULT_QUADRATURE,
    CapSpec,
    QuadratureConfig,
    cap_intersection_volume,
    cap_volume,
    log_cap_volume,
)

__all__ = [
    "CapSpec", "DEFAULT_QUADRATURE", "DegenerateInputError", "DomainError", "EqualityClass",
    "Estimator", "GroupSizes", "IngestionError", "MomentReport", "OracleConfig",
    "OrbitTooLargeError", "PermcapError", "QuadratureConfig", "QuadratureError", "Sided",
    "StandardizedPair", "SubsphereContext", "cap_intersection_volume", "cap_volume",
    "chebychev_bound", "choose_conditioning_point", "double_inclusion", "exact_p",
    "inner_product_at_swap", "log_cap_volume", "log_orbit_size", "mc_p", "p_hat1",
    "pair_census", "report", "second_moment_ref2", "single_inclusion", "tilde_p_c",
    "triple_table", "var_ref1", "z_score",
]

__version__ = "0.1.0"
