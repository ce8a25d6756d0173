"""csisense: a simulation lab for sensing passive scatterers in OFDM links.

The package synthesizes frequency-domain channel estimates under the
scatterer-absent and scatterer-present hypotheses, runs matched and
learned detectors over them, and benchmarks error rates, analytic
separability bounds, and inference cost. Everything is seeded and
deterministic; the `csisense` command drives the standard experiments.
"""

from .channel import (
    SPEED_OF_LIGHT,
    ComplexGaussianVector,
    HypothesisPair,
    LinkFading,
    LinkGeometry,
    cascaded_distribution,
    cascaded_variance_profile,
    dft_of_distribution,
    friis_direct_amplitude,
    friis_scattered_amplitude,
    hypothesis_models,
    k_factor_from_amplitude,
    los_phase,
    rician_time_distribution,
)
from .dataset import (
    CsiDataset,
    GaussianEstimate,
    NoiseConfig,
    add_awgn,
    build_dataset,
    estimate_gaussian_params,
    load_dataset_csv,
    noisy_pair,
    perturb_params,
    reference_power,
    sample_csi,
    save_dataset_csv,
)
from .detectors import (
    NAIVE,
    STABLE,
    Decision,
    FeatureScaler,
    LrtDetector,
    SvmModel,
    decide,
    decide_all,
    featurize,
    fit_feature_scaler,
    identity_scaler,
    interleave_complex,
    load_svm,
    lrt_build,
    lrt_score,
    pca_lrt_build,
    save_svm,
    svm_score,
    svm_train,
)
from .estimators import MatchedGaussianDetector, SubspaceProjector, SvmDetector
from .evaluation import (
    DETECTOR_IDS,
    RocResult,
    SweepRecord,
    TimingStats,
    bench_inference,
    build_hypothesis_pair,
    error_rate,
    roc_auc,
    run_error_vs_p,
    run_perturbation,
    run_roc_vs_snr,
    run_timing_vs_p,
    save_records_csv,
    save_roc_csv,
    stable_mix,
)
from .subspace import (
    BoundReport,
    MixtureCovariance,
    PcaBasis,
    bhattacharyya_distance,
    bound_report,
    error_bound,
    mixture_covariance,
    pca_fit,
    pca_project,
    save_scree_csv,
    sensing_snr,
    truncate_basis,
)

__version__ = "0.1.0"

__all__ = [
    "SPEED_OF_LIGHT",
    "ComplexGaussianVector",
    "HypothesisPair",
    "LinkFading",
    "LinkGeometry",
    "cascaded_distribution",
    "cascaded_variance_profile",
    "dft_of_distribution",
    "friis_direct_amplitude",
    "friis_scattered_amplitude",
    "hypothesis_models",
    "k_factor_from_amplitude",
    "los_phase",
    "rician_time_distribution",
    "CsiDataset",
    "GaussianEstimate",
    "NoiseConfig",
    "add_awgn",
    "build_dataset",
    "estimate_gaussian_params",
    "load_dataset_csv",
    "noisy_pair",
    "perturb_params",
    "reference_power",
    "sample_csi",
    "save_dataset_csv",
    "NAIVE",
    "STABLE",
    "Decision",
    "FeatureScaler",
    "LrtDetector",
    "SvmModel",
    "decide",
    "decide_all",
    "featurize",
    "fit_feature_scaler",
    "identity_scaler",
    "interleave_complex",
    "load_svm",
    "lrt_build",
    "lrt_score",
    "pca_lrt_build",
    "save_svm",
    "svm_score",
    "svm_train",
    "MatchedGaussianDetector",
    "SubspaceProjector",
    "SvmDetector",
    "DETECTOR_IDS",
    "RocResult",
    "SweepRecord",
    "TimingStats",
    "bench_inference",
    "build_hypothesis_pair",
    "error_rate",
    "roc_auc",
    "run_error_vs_p",
    "run_perturbation",
    "run_roc_vs_snr",
    "run_timing_vs_p",
    "save_records_csv",
    "save_roc_csv",
    "stable_mix",
    "BoundReport",
    "MixtureCovariance",
    "PcaBasis",
    "bhattacharyya_distance",
    "bound_report",
    "error_bound",
    "mixture_covariance",
    "pca_fit",
    "pca_project",
    "save_scree_csv",
    "sensing_snr",
    "truncate_basis",
]
