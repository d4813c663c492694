"""Bouncing geometric Brownian motions for limit-order-book ask/bid prices:
simulation, distributional laws, parameter estimation, and forecasting."""

from .dists import (
    IGParams,
    NIGParams,
    PairMoments,
    bessel_k1,
    bessel_k1_quadrature,
    closed_form_moments,
    ig_cdf,
    ig_pdf,
    ig_sample,
    joint_uv_pdf,
    mgf,
    mgf_theta,
    nig_pdf,
    nig_sample,
    u_marginal_params,
    v_marginal_params,
)
from .estimate import (
    EstimateResult,
    SampleMoments,
    asymptotic_stderr,
    fit,
    fit_sequence,
    population_moments,
    sample_moments,
)
from .forecast import (
    ForecastConfig,
    ForecastRecord,
    Prediction,
    TickData,
    backtest,
    delta_trace,
    merge_ties,
    predict,
)
from .params import ModelParams
from .paths import (
    BouncingPath,
    build_bouncing_path,
    first_passage_cdf,
    make_grid,
    ratio_cdf,
    ratio_moment,
    rbm_transient_cdf,
    skorohod_regulator,
    stationary_ratio_density,
    stationary_ratio_moment,
)
from .trading import (
    DiffusionCoefficients,
    ModifiedPath,
    TradeSequence,
    build_modified_paths,
    count_trades,
    detect_trades,
    diffusion_coefficients,
    exact_trade_sequence,
    exact_trades_until,
    log_price_process,
    path_trade_sequence,
    scaled_process,
)
from .verify import run_all, run_suite

__version__ = "0.1.0"
