"""Shrinkage covariance estimation for heavy-tailed data.

The estimators shrink the sample covariance matrix toward a scaled
identity, with coefficients chosen to minimize mean squared error under
sampling from an elliptically symmetric distribution.  The package also
ships a Monte Carlo benchmarking harness, regularized discriminant
analysis, and a minimum-variance portfolio backtester, all exposed through
the ``ellshrink`` command-line tool.
"""

from .errors import (
    ClampWarning,
    ConvergenceError,
    CsvFormatError,
    DegenerateDataError,
    DimensionError,
    EllShrinkError,
    ExperimentError,
    InsufficientSamplesError,
    ParameterError,
    SingularMatrixError,
)
from .matrixkit import (
    CommutationMatrix,
    CovarianceMatrix,
    centering_apply,
    frobenius_norm_sq,
    sample_covariance,
    spd_cholesky,
    spd_inverse,
    trace,
)
from .estimators import (
    PopulationParams,
    SignCovariance,
    ThetaCoefficients,
    estimate_kurtosis,
    estimate_scale,
    estimate_theta,
    sign_covariance,
    spatial_median,
    sphericity_ell1,
    sphericity_ell2,
    theta_coefficients,
    true_sphericity,
)
from .shrinkage import (
    MomentReport,
    ShrinkageCoefficients,
    VarVecDecomposition,
    assemble_rscm,
    fit_ell1,
    fit_ell2,
    fit_ell3,
    fit_gau,
    fit_lw,
    fit_many,
    oracle_beta_elliptical,
    oracle_beta_general,
    oracle_mse_at_optimum,
    scm_moments,
    var_vec_scm,
)
from .sim import (
    EllipticalModel,
    ExperimentConfig,
    ExperimentResult,
    ar1_covariance,
    random_mean,
    run_nmse_experiment,
    sample,
    spiked_covariance,
)
from .applications import (
    BacktestConfig,
    BacktestReport,
    DiscriminantModel,
    LabeledDataset,
    classify,
    gmvp_weights,
    pooled_scm,
    predict,
    run_backtest,
    train_rda,
)

__version__ = "0.1.0"
