"""Twin-beam photon-number statistics.

Monte Carlo generation of per-pulse twin-beam photon records under
configurable multimode, loss, mode-mismatch, background and gain models,
with closed-form noise-reduction-factor predictions to check them against.
"""

from .analytic import (
    CorrelationTriple,
    ExactMoments,
    NrfContributions,
    NrfReport,
    classicality_witness,
    delta_unmatched,
    enumerate_moments,
    nrf_from_variance,
    nrf_predict,
    twin_beam_correlations,
    variance_difference,
)
from .estimator import (
    MomentSummary,
    dark_noise_estimate,
    g2_estimates,
    moments,
    nrf_estimate,
)
from .gainfit import GainFit, PowerPoint, fit_gain_curve
from .model import (
    DetectionChannel,
    ExperimentConfig,
    GainModel,
    ModeCounts,
    ModePartition,
    OpticalGeometry,
    circle_overlap_area,
    gain_to_mean_photons,
    matched_signal_diameter,
    mode_counts,
    mode_partition,
    reference_geometry,
)
from .sampler import (
    ACTIVE_BACKEND,
    PulseRecord,
    SampleSet,
    sample_pulse,
    sample_thermal,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND",
    "CorrelationTriple",
    "DetectionChannel",
    "ExactMoments",
    "ExperimentConfig",
    "GainFit",
    "GainModel",
    "ModeCounts",
    "ModePartition",
    "MomentSummary",
    "NrfContributions",
    "NrfReport",
    "OpticalGeometry",
    "PowerPoint",
    "PulseRecord",
    "SampleSet",
    "circle_overlap_area",
    "classicality_witness",
    "dark_noise_estimate",
    "delta_unmatched",
    "enumerate_moments",
    "fit_gain_curve",
    "g2_estimates",
    "gain_to_mean_photons",
    "matched_signal_diameter",
    "mode_counts",
    "mode_partition",
    "moments",
    "nrf_estimate",
    "nrf_from_variance",
    "nrf_predict",
    "reference_geometry",
    "sample_pulse",
    "sample_thermal",
    "simulate",
    "twin_beam_correlations",
    "variance_difference",
    "__version__",
]
