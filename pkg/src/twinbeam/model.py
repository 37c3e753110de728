"""Domain model: collection geometry, mode bookkeeping, gain law.

Everything here is a plain value type or a pure function. Units are spelled
out in field names (mm, ps, nm) because unit mixups are the dominant failure
mode in this kind of model.

Conventions
-----------
* A transverse "speckle" cell is a disk of diameter equal to the transverse
  coherence length, so an aperture of diameter D holds (D / l_coh)**2 cells.
* The idler aperture is compared against the signal one after scaling
  diameters and displacements by the wavelength ratio of the phase-matching
  condition D_i / D_s = lambda_i_max / lambda_s_min.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

__all__ = [
    "OpticalGeometry",
    "ModePartition",
    "GainModel",
    "DetectionChannel",
    "ExperimentConfig",
    "ModeCounts",
    "mode_counts",
    "matched_signal_diameter",
    "mode_partition",
    "gain_to_mean_photons",
    "circle_overlap_area",
    "reference_geometry",
]


def _require(condition: bool, field: str, message: str) -> None:
    if not condition:
        raise ValueError(f"{field}: {message}")


@dataclass(frozen=True)
class OpticalGeometry:
    """Aperture and coherence geometry of one two-color collection setup.

    The idler aperture may be displaced laterally from its matched position;
    zero displacement with diameters satisfying the wavelength-ratio
    condition collects every mode pair in both arms.
    """

    signal_aperture_diameter_mm: float
    idler_aperture_diameter_mm: float
    transverse_coherence_length_mm: float
    pulse_duration_ps: float
    coherence_time_ps: float
    signal_wavelength_min_nm: float
    signal_wavelength_max_nm: float
    idler_wavelength_min_nm: float
    idler_wavelength_max_nm: float
    idler_displacement_mm: float = 0.0

    def __post_init__(self):
        positive = [
            ("signal_aperture_diameter_mm", self.signal_aperture_diameter_mm),
            ("idler_aperture_diameter_mm", self.idler_aperture_diameter_mm),
            ("transverse_coherence_length_mm", self.transverse_coherence_length_mm),
            ("pulse_duration_ps", self.pulse_duration_ps),
            ("coherence_time_ps", self.coherence_time_ps),
            ("signal_wavelength_min_nm", self.signal_wavelength_min_nm),
            ("signal_wavelength_max_nm", self.signal_wavelength_max_nm),
            ("idler_wavelength_min_nm", self.idler_wavelength_min_nm),
            ("idler_wavelength_max_nm", self.idler_wavelength_max_nm),
        ]
        for name, value in positive:
            _require(value > 0 and math.isfinite(value), name, "must be positive and finite")
        _require(
            self.idler_displacement_mm >= 0 and math.isfinite(self.idler_displacement_mm),
            "idler_displacement_mm",
            "must be nonnegative and finite",
        )
        _require(
            self.signal_wavelength_min_nm <= self.signal_wavelength_max_nm,
            "signal_wavelength_min_nm",
            "signal wavelength band is inverted",
        )
        _require(
            self.idler_wavelength_min_nm <= self.idler_wavelength_max_nm,
            "idler_wavelength_min_nm",
            "idler wavelength band is inverted",
        )
        _require(
            self.signal_wavelength_max_nm < self.idler_wavelength_min_nm,
            "signal_wavelength_max_nm",
            "signal band must lie strictly below the idler band (two-color setup)",
        )

    @classmethod
    def from_central_wavelengths(
        cls,
        signal_aperture_diameter_mm: float,
        idler_aperture_diameter_mm: float,
        transverse_coherence_length_mm: float,
        pulse_duration_ps: float,
        coherence_time_ps: float,
        signal_wavelength_nm: float,
        idler_wavelength_nm: float,
        bandwidth_nm: float = 13.0,
        idler_displacement_mm: float = 0.0,
    ) -> "OpticalGeometry":
        """Build a geometry from central wavelengths and a common bandwidth.

        Each arm's band is the central wavelength plus/minus half the
        selected bandwidth.
        """
        half = bandwidth_nm / 2.0
        return cls(
            signal_aperture_diameter_mm=signal_aperture_diameter_mm,
            idler_aperture_diameter_mm=idler_aperture_diameter_mm,
            transverse_coherence_length_mm=transverse_coherence_length_mm,
            pulse_duration_ps=pulse_duration_ps,
            coherence_time_ps=coherence_time_ps,
            signal_wavelength_min_nm=signal_wavelength_nm - half,
            signal_wavelength_max_nm=signal_wavelength_nm + half,
            idler_wavelength_min_nm=idler_wavelength_nm - half,
            idler_wavelength_max_nm=idler_wavelength_nm + half,
            idler_displacement_mm=idler_displacement_mm,
        )

    def with_(self, **changes) -> "OpticalGeometry":
        """Return a copy with the given fields replaced."""
        return replace(self, **changes)


@dataclass(frozen=True)
class ModePartition:
    """Counts of matched mode pairs and per-arm unmatched modes."""

    matched_pairs: int
    unmatched_signal: int
    unmatched_idler: int

    def __post_init__(self):
        _require(self.matched_pairs >= 0, "matched_pairs", "must be >= 0")
        _require(self.unmatched_signal >= 0, "unmatched_signal", "must be >= 0")
        _require(self.unmatched_idler >= 0, "unmatched_idler", "must be >= 0")
        _require(
            self.matched_pairs + max(self.unmatched_signal, self.unmatched_idler) >= 1,
            "matched_pairs",
            "partition must contain at least one mode",
        )

    @classmethod
    def matched(cls, pairs: int) -> "ModePartition":
        return cls(matched_pairs=pairs, unmatched_signal=0, unmatched_idler=0)


@dataclass(frozen=True)
class GainModel:
    """Parametric gain versus pump power, with a linear fluorescence floor.

    The gain scales as the square root of the pump power,
    gamma = gain_coefficient * sqrt(power), and each mode carries
    sinh(gamma)**2 photons on average. The background contributes
    background_slope * power photons per pulse per arm.
    """

    gain_coefficient: float
    pump_power: float
    background_slope: float = 0.0

    def __post_init__(self):
        _require(self.gain_coefficient >= 0, "gain_coefficient", "must be >= 0")
        _require(self.pump_power > 0, "pump_power", "must be > 0")
        _require(self.background_slope >= 0, "background_slope", "must be >= 0")

    def gamma_at(self, power: float) -> float:
        return self.gain_coefficient * math.sqrt(power)

    def mean_photons_at(self, power: float) -> float:
        return gain_to_mean_photons(self.gamma_at(power))

    def background_at(self, power: float) -> float:
        return self.background_slope * power

    def total_mean_photons(self, mode_count: int, power: float | None = None) -> float:
        """Mean output photons per pulse per arm: modes * sinh(gamma)**2 + floor."""
        p = self.pump_power if power is None else power
        return mode_count * self.mean_photons_at(p) + self.background_at(p)

    @property
    def gamma(self) -> float:
        return self.gamma_at(self.pump_power)

    @property
    def mean_photons_per_mode(self) -> float:
        return self.mean_photons_at(self.pump_power)


@dataclass(frozen=True)
class DetectionChannel:
    """One detection arm: survival probability plus additive readout noise."""

    efficiency: float
    electronic_noise_rms: float = 0.0

    def __post_init__(self):
        _require(0.0 <= self.efficiency <= 1.0, "efficiency", "must be in [0, 1]")
        _require(
            self.electronic_noise_rms >= 0 and math.isfinite(self.electronic_noise_rms),
            "electronic_noise_rms",
            "must be >= 0 and finite",
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one simulated run.

    Every mode (matched or unmatched) carries the same mean photon number.
    Backgrounds are uncorrelated Poisson photons per pulse, quoted before
    detection losses.
    """

    partition: ModePartition
    mean_photons_per_mode: float
    signal_channel: DetectionChannel
    idler_channel: DetectionChannel
    background_signal: float = 0.0
    background_idler: float = 0.0

    def __post_init__(self):
        _require(
            self.mean_photons_per_mode >= 0 and math.isfinite(self.mean_photons_per_mode),
            "mean_photons_per_mode",
            "must be >= 0 and finite",
        )
        _require(self.background_signal >= 0, "background_signal", "must be >= 0")
        _require(self.background_idler >= 0, "background_idler", "must be >= 0")
        _require(
            math.isfinite(self.mean_detected_signal) and math.isfinite(self.mean_detected_idler),
            "mean_photons_per_mode",
            "detected means must be finite",
        )

    @property
    def mean_detected_signal(self) -> float:
        eta = self.signal_channel.efficiency
        modes = self.partition.matched_pairs + self.partition.unmatched_signal
        return eta * (modes * self.mean_photons_per_mode + self.background_signal)

    @property
    def mean_detected_idler(self) -> float:
        eta = self.idler_channel.efficiency
        modes = self.partition.matched_pairs + self.partition.unmatched_idler
        return eta * (modes * self.mean_photons_per_mode + self.background_idler)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


class ModeCounts(NamedTuple):
    transverse: int
    longitudinal: int
    total: int


def mode_counts(geometry: OpticalGeometry) -> ModeCounts:
    """Number of transverse, longitudinal and total modes in the signal arm.

    Transverse count is the squared ratio of aperture diameter to transverse
    coherence length; longitudinal count is the ratio of pulse duration to
    coherence time. Both are rounded to the nearest integer and floored at 1
    (a detector always collects at least one cell).
    """
    m_t = round((geometry.signal_aperture_diameter_mm / geometry.transverse_coherence_length_mm) ** 2)
    m_l = round(geometry.pulse_duration_ps / geometry.coherence_time_ps)
    m_t = max(1, m_t)
    m_l = max(1, m_l)
    return ModeCounts(transverse=m_t, longitudinal=m_l, total=m_t * m_l)


def matched_signal_diameter(idler_diameter_mm: float, geometry: OpticalGeometry) -> float:
    """Signal aperture diameter that pairs with the given idler diameter.

    Phase matching ties the two angular acceptances via
    D_i / D_s = lambda_i_max / lambda_s_min.
    """
    _require(idler_diameter_mm > 0, "idler_diameter_mm", "must be > 0")
    return idler_diameter_mm * geometry.signal_wavelength_min_nm / geometry.idler_wavelength_max_nm


def circle_overlap_area(radius_a: float, radius_b: float, center_distance: float) -> float:
    """Area of the intersection of two disks (the circular lens formula)."""
    _require(radius_a > 0, "radius_a", "must be > 0")
    _require(radius_b > 0, "radius_b", "must be > 0")
    _require(center_distance >= 0, "center_distance", "must be >= 0")
    d = center_distance
    if d >= radius_a + radius_b:
        return 0.0
    if d <= abs(radius_a - radius_b):
        r = min(radius_a, radius_b)
        return math.pi * r * r
    a2, b2, d2 = radius_a**2, radius_b**2, d**2
    alpha = math.acos((d2 + a2 - b2) / (2.0 * d * radius_a))
    beta = math.acos((d2 + b2 - a2) / (2.0 * d * radius_b))
    chord = 0.5 * math.sqrt(
        (-d + radius_a + radius_b)
        * (d + radius_a - radius_b)
        * (d - radius_a + radius_b)
        * (d + radius_a + radius_b)
    )
    return a2 * alpha + b2 * beta - chord


def mode_partition(geometry: OpticalGeometry) -> ModePartition:
    """Split the collected modes into matched pairs and per-arm leftovers.

    The idler aperture is mapped into the signal plane (diameter and lateral
    displacement scaled by lambda_s_min / lambda_i_max) and the disk overlap
    is tiled by transverse coherence cells. The cell area is normalized so
    that the signal aperture holds exactly its mode_counts transverse count;
    zero displacement with matched diameters therefore reproduces
    mode_counts.total exactly, with no unmatched modes.
    """
    scale = geometry.signal_wavelength_min_nm / geometry.idler_wavelength_max_nm
    r_signal = geometry.signal_aperture_diameter_mm / 2.0
    r_idler = geometry.idler_aperture_diameter_mm * scale / 2.0
    shift = geometry.idler_displacement_mm * scale

    counts = mode_counts(geometry)
    area_signal = math.pi * r_signal**2
    area_idler = math.pi * r_idler**2
    area_overlap = circle_overlap_area(r_signal, r_idler, shift)
    cells_per_area = counts.transverse * counts.longitudinal / area_signal

    matched = round(area_overlap * cells_per_area)
    unmatched_s = round((area_signal - area_overlap) * cells_per_area)
    unmatched_i = round((area_idler - area_overlap) * cells_per_area)
    if matched + max(unmatched_s, unmatched_i) < 1:
        # Sub-cell apertures still collect one mode each.
        if area_overlap > 0:
            matched = 1
        else:
            unmatched_s = unmatched_i = 1
    return ModePartition(
        matched_pairs=matched,
        unmatched_signal=unmatched_s,
        unmatched_idler=unmatched_i,
    )


def gain_to_mean_photons(gamma: float) -> float:
    """Mean photons per mode at parametric gain gamma: sinh(gamma)**2."""
    _require(gamma >= 0, "gamma", "must be >= 0")
    return math.sinh(gamma) ** 2


def reference_geometry(idler_displacement_mm: float = 0.0) -> OpticalGeometry:
    """A realistic pulsed two-color setup used as the default everywhere.

    10 mm signal aperture, 2 mm transverse coherence length and a 17 ps pulse
    with 150 longitudinal modes give 25 * 150 = 3750 modes per arm. The idler
    aperture diameter is matched via the wavelength-ratio condition.
    """
    signal_d = 10.0
    lam_s_min, lam_i_max = 628.5, 811.5
    return OpticalGeometry.from_central_wavelengths(
        signal_aperture_diameter_mm=signal_d,
        idler_aperture_diameter_mm=signal_d * lam_i_max / lam_s_min,
        transverse_coherence_length_mm=2.0,
        pulse_duration_ps=17.0,
        coherence_time_ps=17.0 / 150.0,
        signal_wavelength_nm=635.0,
        idler_wavelength_nm=805.0,
        bandwidth_nm=13.0,
        idler_displacement_mm=idler_displacement_mm,
    )
