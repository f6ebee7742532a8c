"""Inference for the mean response in linear function-on-function regression.

Curves live on a shared quadrature grid over [0, 1].  The package estimates the
regression by truncated functional principal components, builds CLT and
residual-bootstrap confidence sets for the mean response at a new regressor,
and runs the Monte Carlo coverage studies used to compare the two.
"""

from fofrboot.errors import (
    DegenerateInputError,
    FofrError,
    IncompatibleGridError,
    InvalidArgumentError,
    NumericalFailureError,
    TruncationTooLargeError,
)
from fofrboot.fungrid import (
    Fn,
    FnSet,
    Grid,
    KernelOp,
    OrthoSystem,
    apply_op,
    basis_chebyshev_shifted,
    basis_monomial,
    basis_trig,
    gram_schmidt,
    hs_norm,
    inner,
    make_uniform_grid,
    norm,
    tensor_product,
)
from fofrboot.fpca import (
    FpcaModel,
    fit_fpca,
    scaling_hat,
    scores_of,
    truncated_inverse_apply,
)
from fofrboot.fofr import (
    FofrModel,
    ResidualSet,
    error_cov,
    fit_fofr,
    loocv_select,
    predict_mean,
    residuals_of,
)
from fofrboot.bootstrap import (
    BootConfig,
    BootstrapDraws,
    bootstrap_quantile,
    run_residual_bootstrap,
)
from fofrboot.inference import (
    ConfidenceBall,
    Interval,
    MeanResponseInference,
    TestResult,
    clt_ball,
    eval_interval,
    mean_equality_test,
    proj_interval,
    rb_ball,
    weighted_chisq_quantile,
)
from fofrboot.simgen import (
    Scenario,
    ScoreLaw,
    SimTruth,
    SlopeSpec,
    SpectrumSpec,
    eigenvalues_from_gaps,
    gen_dataset,
    gen_fnset,
    make_slope,
)
from fofrboot.experiments import (
    CoverageReport,
    ScalingReport,
    coverage_study,
    cubic_curve,
    scaling_comparison,
    scaling_scenario,
)

__version__ = "0.1.0"
