"""Principal factor approximation of the false discovery proportion for
correlated z-tests.

Typical use::

    from pfa import build_factor_model, estimate_factors, estimate_fdp

    model = build_factor_model(sigma)          # principal factors of Sigma
    fit = estimate_factors(z, model)           # realized factors by L1 regression
    report = estimate_fdp(z, model, fit, t=0.01)
"""

__version__ = "0.1.0"

from .adjust import AdjustedResult, adjusted_pvalues
from .comparators import bh_rejections, efron_A_hat, efron_fdp, storey_fdp, storey_p0
from .control import McConfig, ThresholdResult, VarianceResult, fdr_expectation, find_threshold, variance_of_v
from .errors import (
    PfaError,
    UsageError,
    DataError,
    NotSymmetric,
    NotUnitDiagonal,
    IndefiniteBeyondTolerance,
    InvalidEpsilon,
    DegenerateColumn,
    DimensionMismatch,
    RankDeficientLoadings,
    NonConvergence,
    DomainError,
    MissingMask,
    TargetUnreachable,
    InvalidSpec,
    IoError,
    RaggedRows,
    NonNumericCell,
)
from .factors import RealizedFactors, estimate_factors, lad_fit, select_calibration_set
from .fdp import (
    FdpReport,
    TrueCounts,
    count_rejections,
    estimate_fdp,
    fdp_a,
    fdp_limit,
    limit_sum,
    normal_cdf,
    normal_quantile,
    pvalues,
    true_fdp,
)
from .screening import Design, ZStatistics, marginal_z
from .spectral import SpectralModel, build_factor_model, eigendecompose, select_num_factors, validate_correlation
