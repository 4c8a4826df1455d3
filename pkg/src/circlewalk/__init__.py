"""circlewalk: exact and Monte Carlo analysis of integer random walks
projected onto cyclic groups Z/q and irrational circle rotations.

The package computes exact walk laws through characteristic-function
(spectral) evolution, certified discrepancy/total-variation bounds,
limiting variance constants of centered test functions along the walk,
and Monte Carlo CLT/LIL experiments, plus a CLI that renders CSV/JSON
reports with figures.
"""

__version__ = "0.1.0"

from .cyclic import (
    SCAN_COLUMNS,
    CyclicDistribution,
    MetricSeries,
    ScanResult,
    SpectralState,
    advance,
    berry_esseen_bound,
    default_k_grid,
    kolmogorov_continuous,
    lower_bounds,
    new_cyclic_distribution,
    one_step_spectrum,
    psi_disc,
    psi_disc_star,
    psi_tv,
    reduce_to_unit_span,
    to_distribution,
    transition_scan,
    tv_lower_bound,
    tv_upper_bound,
)
from .dioph import (
    ContinuedFraction,
    IrrationalNumber,
    Rational,
    bad_approx_constant_rational,
    cf_expand,
    dioph_sum,
    dist_nearest_int,
    fixed_alpha,
    frac_table,
    golden_alpha,
    max_partial_quotient,
    norm_h_alpha,
    parse_alpha,
    quadratic_alpha,
)
from .errors import (
    CircleWalkError,
    CoefficientBound,
    DegenerateDistribution,
    EnvelopeNotFound,
    InvalidProbability,
    Overflow,
    PrecisionExhausted,
    SpanNotCoprime,
    SpectralCorruption,
    SupportTooLarge,
    ZeroSeparation,
)
from .mc import (
    CltReport,
    SamplerConfig,
    clt_endpoints,
    clt_experiment,
    empirical_psi_disc,
    functional_trajectory,
    ks_to_normal,
    lil_experiment,
    report_from_endpoints,
    sample_walk,
)
from .steps import (
    EnvelopeParams,
    StepDistribution,
    char_fn,
    envelope_params,
    list_step_presets,
    moments,
    new_step_distribution,
    step_preset,
)
from .variance import (
    DEFAULT_TRUNCATION,
    TestFunction,
    c_alpha,
    c_convergence_experiment,
    c_rational,
    c_rational_oracle,
    cosine,
    expsum_second_moment,
    fejer_approx,
    interval_indicator,
    koksma_transfer_check,
    parse_test_function,
    sawtooth,
    sine,
    spectral_factor,
    stationary_variance,
    trig_poly,
)

__all__ = [
    "__version__",
    # errors
    "CircleWalkError",
    "CoefficientBound",
    "DegenerateDistribution",
    "EnvelopeNotFound",
    "InvalidProbability",
    "Overflow",
    "PrecisionExhausted",
    "SpanNotCoprime",
    "SpectralCorruption",
    "SupportTooLarge",
    "ZeroSeparation",
    # step distributions
    "EnvelopeParams",
    "StepDistribution",
    "char_fn",
    "envelope_params",
    "list_step_presets",
    "moments",
    "new_step_distribution",
    "step_preset",
    # rotation numbers
    "ContinuedFraction",
    "IrrationalNumber",
    "Rational",
    "bad_approx_constant_rational",
    "cf_expand",
    "dioph_sum",
    "dist_nearest_int",
    "fixed_alpha",
    "frac_table",
    "golden_alpha",
    "max_partial_quotient",
    "norm_h_alpha",
    "parse_alpha",
    "quadratic_alpha",
    # exact cyclic evolution
    "SCAN_COLUMNS",
    "CyclicDistribution",
    "MetricSeries",
    "ScanResult",
    "SpectralState",
    "advance",
    "berry_esseen_bound",
    "default_k_grid",
    "kolmogorov_continuous",
    "lower_bounds",
    "new_cyclic_distribution",
    "one_step_spectrum",
    "psi_disc",
    "psi_disc_star",
    "psi_tv",
    "reduce_to_unit_span",
    "to_distribution",
    "transition_scan",
    "tv_lower_bound",
    "tv_upper_bound",
    # variance constants and inequalities
    "DEFAULT_TRUNCATION",
    "TestFunction",
    "c_alpha",
    "c_convergence_experiment",
    "c_rational",
    "c_rational_oracle",
    "cosine",
    "expsum_second_moment",
    "fejer_approx",
    "interval_indicator",
    "koksma_transfer_check",
    "parse_test_function",
    "sawtooth",
    "sine",
    "spectral_factor",
    "stationary_variance",
    "trig_poly",
    # Monte Carlo
    "CltReport",
    "SamplerConfig",
    "clt_endpoints",
    "clt_experiment",
    "empirical_psi_disc",
    "functional_trajectory",
    "ks_to_normal",
    "lil_experiment",
    "report_from_endpoints",
    "sample_walk",
]
