from .sampling import RandomSample, draw_samples, stream_rng
from .estimators import (
    LevelSpec,
    MlmcEstimate,
    lambda_coeff,
    mc_estimate,
    mlmc_estimate,
    variance_field,
)
from .metrics import err_global, err_mean_l2, err_pointwise, prolong, restrict
from .multifidelity import (
    SnapshotBasis,
    build_basis,
    fidelity_coeffs,
    multifidelity_eval,
    select_points,
)

__all__ = [
    "RandomSample", "draw_samples", "stream_rng",
    "LevelSpec", "MlmcEstimate", "lambda_coeff", "mc_estimate",
    "mlmc_estimate", "variance_field",
    "err_global", "err_mean_l2", "err_pointwise", "prolong", "restrict",
    "SnapshotBasis", "build_basis", "fidelity_coeffs", "multifidelity_eval",
    "select_points",
]
