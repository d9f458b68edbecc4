"""Super-robust Lp (p < 1) transformation estimation."""

from .bounds import (
    BoundParams,
    InfeasibleBoundError,
    breakdown_ratio,
    min_confidence_exponent,
    tfg_bound_general,
    tfg_bound_uniform,
    tsg_bound_general,
    tsg_bound_uniform,
    tsg_max_uniform,
)
from .estimator import (
    AnnealSchedule,
    EstimateConfig,
    EstimationResult,
    anneal_p,
    candidate_transforms,
    estimate,
    estimate_l0,
    pos,
)
from .objective import L0, Lp, SRPiecewise, objective_value, parse_family, penalty
from .transforms import (
    DegenerateExperimentError,
    DimensionError,
    Experiment,
    Group,
    ObservationPair,
    Transform,
    apply,
    residual,
    sanitize,
)

__version__ = "0.1.0"
