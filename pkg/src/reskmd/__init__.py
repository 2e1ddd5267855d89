"""Koopman-residual early warning signals for tipping points.

The toolkit simulates parameter-ramped bifurcation systems, turns raw
series into delay-embedded snapshot pairs, fits finite Koopman
approximations (exact DMD and kernel EDMD), measures how much of the
dynamics the fitted eigenpairs fail to capture, and benchmarks that
signal against classical early-warning baselines via ROC analysis.
"""

from .dmd import (
    DictionaryMatrices,
    ExactDMD,
    KernelEDMD,
    KernelSpec,
    exact_dmd,
    gram_matrices,
    kernel_edmd,
    truncated_svd,
)
from .evaluation import (
    ExperimentResult,
    LabeledScores,
    ManifestEntry,
    RocCurve,
    read_manifest,
    roc_curve,
    run_experiment,
    write_manifest,
    write_roc_report,
)
from .indicators import (
    DetectionScore,
    EwsSeries,
    auto_delay_config,
    compute_indicator,
    dmd_max_eig,
    lag1_autocorr,
    reskmd_exact_pipeline,
    reskmd_kernel_pipeline,
    trend_score,
    variance_ews,
)
from .residual import (
    BiasVarianceCheck,
    ResidualReport,
    eigpair_residual,
    monte_carlo_bias_variance_check,
    residual_report,
    reskmd,
    truncation_bounds,
)
from .simulate import (
    EnsembleMember,
    OdeSystem,
    RampSchedule,
    SimConfig,
    hopf,
    make_ensemble,
    rk5_step,
    saddle_node,
    simulate,
)
from .timeseries import (
    DelayConfig,
    RawSeries,
    SnapshotSet,
    hankel_embed,
    load_csv,
    save_csv,
    spline_interpolate,
    windows,
)

__version__ = "0.1.0"

__all__ = [
    "DictionaryMatrices",
    "ExactDMD",
    "KernelEDMD",
    "KernelSpec",
    "exact_dmd",
    "gram_matrices",
    "kernel_edmd",
    "truncated_svd",
    "ExperimentResult",
    "LabeledScores",
    "ManifestEntry",
    "RocCurve",
    "read_manifest",
    "roc_curve",
    "run_experiment",
    "write_manifest",
    "write_roc_report",
    "DetectionScore",
    "EwsSeries",
    "auto_delay_config",
    "compute_indicator",
    "dmd_max_eig",
    "lag1_autocorr",
    "reskmd_exact_pipeline",
    "reskmd_kernel_pipeline",
    "trend_score",
    "variance_ews",
    "BiasVarianceCheck",
    "ResidualReport",
    "eigpair_residual",
    "monte_carlo_bias_variance_check",
    "residual_report",
    "reskmd",
    "truncation_bounds",
    "EnsembleMember",
    "OdeSystem",
    "RampSchedule",
    "SimConfig",
    "hopf",
    "make_ensemble",
    "rk5_step",
    "saddle_node",
    "simulate",
    "DelayConfig",
    "RawSeries",
    "SnapshotSet",
    "hankel_embed",
    "load_csv",
    "save_csv",
    "spline_interpolate",
    "windows",
    "__version__",
]
