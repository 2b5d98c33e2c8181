"""Large deviations of the top eigenvalue of rank-one deformed GOE/GUE matrices."""

from .ensemble import EigenSample, EnsembleConfig, eigenvalues, sample_deformed, top_eigenvalue_stream
from .measures import SemicircleLaw, SpectralMeasure, dudley_distance, hilbert_transform
from .ratefn import RateParams, as_limit, j_integral, rate_F, rate_K, theta_c
from .spherical import (
    FixedPointSolution,
    SphericalParams,
    i_limit,
    log_spherical_finite_n,
    mc_oracle,
    solve_fixed_point,
)

__version__ = "0.1.0"
