"""Exact recovery of binary vertex labels from noisy local parity samples."""

from .estimators import SpectralExpanding, SpectralStitching
from .limits import (
    FiniteDistPair,
    LimitSpec,
    chernoff_information,
    divergence,
    hellinger_exponent,
    kl_half_theta,
    m_star,
    multilink_chernoff_closed_form,
    multilink_distributions,
)
from .recover import (
    RecoveryConfig,
    RecoveryResult,
    brute_force_ml,
    local_ml_score,
    spectral_expanding,
    spectral_expanding_multilink,
    spectral_stitching,
    spectral_stitching_multilink,
)
from .sampling import (
    HyperSampleSet,
    Labeling,
    SampleSet,
    draw_fragment_samples,
    draw_hyper_samples,
    draw_samples,
    draw_weighted_samples,
    hamming_mod_flip,
    random_labeling,
)
from .topology import Family, HyperTopology, MeasurementTopology, build_hyper_topology, build_topology

__all__ = [
    "Family", "FiniteDistPair", "HyperSampleSet", "HyperTopology", "Labeling", "LimitSpec",
    "MeasurementTopology", "RecoveryConfig", "RecoveryResult", "SampleSet", "SpectralExpanding",
    "SpectralStitching", "brute_force_ml", "build_hyper_topology", "build_topology",
    "chernoff_information", "divergence", "draw_fragment_samples", "draw_hyper_samples",
    "draw_samples", "draw_weighted_samples", "hamming_mod_flip", "hellinger_exponent",
    "kl_half_theta", "local_ml_score", "m_star", "multilink_chernoff_closed_form",
    "multilink_distributions", "random_labeling", "spectral_expanding", "spectral_expanding_multilink",
    "spectral_stitching", "spectral_stitching_multilink",
]
__version__ = "0.1.0"
