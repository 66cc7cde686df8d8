"""Memory-coupled binary walks: exact lattice PDFs, closed-form generating
functions, reproducible Monte Carlo, and heavy-tail fitting of return data.

The walk takes increments of +-1 with transfer probability 1/2 + x*eps(x)
depending on the current displacement x.  A positive coupling reinforces
excursions (heavy tails), a negative one pulls the walk back (thin tails).
"""

from .backend import BACKEND_NAME, get_kernels
from .errors import (
    CouplingOutOfRange,
    DegenerateDenominator,
    DegeneratePdf,
    EmptyFile,
    InsufficientBins,
    InsufficientScales,
    MemwalkError,
    NonConvergentNormalization,
    NonPositivePrice,
    OptimizerStalled,
    ParseError,
    QuadratureFailure,
    SingularEvaluationPoint,
)
from .profiles import (
    ConstantCoupling,
    GaussianWellCoupling,
    transfer_probabilities,
    transfer_tables,
)
from .lattice import (
    ConvergencePoint,
    LatticePdf,
    MomentReport,
    ValidityReport,
    evolve,
    evolve_rational,
    kurtosis_study,
    moments,
    second_moment_history,
)
from .analytic import (
    AutocorrResult,
    autocorr_per_start,
    autocorrelation,
    fourth_exact,
    fourth_series,
    hurst_amplitude,
    hurst_h,
    kurtosis_limit,
    variance_exact,
    variance_growth_limit,
    variance_series,
    z_closed_eval,
    z_dp_eval,
    z_gaussian_limit,
)
from .montecarlo import (
    AutocorrEstimate,
    EnsembleStats,
    Estimate,
    HurstEstimate,
    Trajectory,
    estimate_autocorr,
    estimate_hurst,
    sample_ensemble,
    sample_path,
    splitmix64,
    substream_key,
    terminal_counts,
)
from .fitting import (
    DEFAULT_BIN_WIDTH,
    DEFAULT_BOUNDS,
    DEFAULT_FIT_RANGE,
    DEFAULT_N_MODEL,
    EmpiricalPdf,
    FitResult,
    ModelEval,
    PriceSeries,
    ReturnSeries,
    chi2_logpdf,
    fit_regime_model,
    gaussian_density,
    gaussian_slice_chi2,
    histogram_pdf,
    load_price_series,
    model_pdf_continuum,
    returns,
    stable_density,
    synthesize_returns,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "get_kernels",
    "MemwalkError",
    "CouplingOutOfRange",
    "DegeneratePdf",
    "SingularEvaluationPoint",
    "DegenerateDenominator",
    "ParseError",
    "NonPositivePrice",
    "EmptyFile",
    "InsufficientBins",
    "InsufficientScales",
    "NonConvergentNormalization",
    "OptimizerStalled",
    "QuadratureFailure",
    "ConstantCoupling",
    "GaussianWellCoupling",
    "transfer_probabilities",
    "transfer_tables",
    "LatticePdf",
    "ValidityReport",
    "MomentReport",
    "ConvergencePoint",
    "evolve",
    "evolve_rational",
    "second_moment_history",
    "moments",
    "kurtosis_study",
    "z_gaussian_limit",
    "z_dp_eval",
    "z_closed_eval",
    "variance_exact",
    "fourth_exact",
    "variance_series",
    "fourth_series",
    "kurtosis_limit",
    "variance_growth_limit",
    "AutocorrResult",
    "autocorr_per_start",
    "autocorrelation",
    "hurst_amplitude",
    "hurst_h",
    "splitmix64",
    "substream_key",
    "Trajectory",
    "Estimate",
    "EnsembleStats",
    "AutocorrEstimate",
    "HurstEstimate",
    "sample_path",
    "sample_ensemble",
    "terminal_counts",
    "estimate_autocorr",
    "estimate_hurst",
    "DEFAULT_BIN_WIDTH",
    "DEFAULT_FIT_RANGE",
    "DEFAULT_BOUNDS",
    "DEFAULT_N_MODEL",
    "PriceSeries",
    "ReturnSeries",
    "EmpiricalPdf",
    "ModelEval",
    "FitResult",
    "load_price_series",
    "returns",
    "histogram_pdf",
    "model_pdf_continuum",
    "chi2_logpdf",
    "fit_regime_model",
    "gaussian_slice_chi2",
    "gaussian_density",
    "stable_density",
    "synthesize_returns",
    "__version__",
]
