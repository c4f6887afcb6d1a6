"""From raw acquisitions to calibrated transmissivity/absorbance time series.

Each acquisition is a block of demodulated detector samples (or its summary
statistics) taken with one probe at one time. The calibration record holds
the blank (medium-only) reference, the shot-noise reference variance and
the dark-noise floor.

Two conventions for the transmissivity uncertainty ``sigma_eta`` exist:

``"sample"`` (default)
    spread of a single bandwidth-limited sample, i.e. the noise band
    around the acquisition mean. This is the statistic the hypothesis tests
    consume.
``"mean"``
    standard error of the acquisition mean, using the number of
    independent samples allowed by the 25 kHz low-pass filter.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import noise
from .errors import DomainError
from .truncnorm import GaussianSpec, adjusted_moments

LOWPASS_HZ = 25e3
DEFAULT_MARGIN_DB = 1.5
_FLOOR_FRACTION = 1e-12
_LN10 = math.log(10.0)


class Probe(str, enum.Enum):
    COHERENT = "coherent"
    SQUEEZED = "squeezed"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Acquisition:
    t_hours: float
    probe: Probe
    mean: float
    variance: float
    count: int
    monitor_power: float
    duration_s: float
    sample_rate_hz: float
    samples: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "probe", Probe(self.probe))
        if not self.monitor_power > 0.0:
            raise DomainError(f"monitor power must be positive, got {self.monitor_power!r}")
        if self.count < 2:
            raise DomainError(f"acquisition needs at least 2 samples, got {self.count}")
        if not self.variance >= 0.0:
            raise DomainError(f"variance must be non-negative, got {self.variance!r}")

    @classmethod
    def from_samples(cls, t_hours, probe, samples, monitor_power, duration_s,
                     sample_rate_hz, keep_samples=True):
        x = np.asarray(samples, dtype=float)
        return cls(
            t_hours=float(t_hours),
            probe=Probe(probe),
            mean=float(x.mean()),
            variance=float(x.var(ddof=1)),
            count=int(x.size),
            monitor_power=float(monitor_power),
            duration_s=float(duration_s),
            sample_rate_hz=float(sample_rate_hz),
            samples=x if keep_samples else None,
        )

    def summary(self) -> "Acquisition":
        """Same record without the raw samples."""
        return replace(self, samples=None)

    def same_summary(self, other: "Acquisition") -> bool:
        fields = ("t_hours", "probe", "mean", "variance", "count", "monitor_power",
                  "duration_s", "sample_rate_hz")
        return all(getattr(self, f) == getattr(other, f) for f in fields)


@dataclass(frozen=True)
class CalibrationRecord:
    """Blank and noise references.

    ``shot_ref_variance`` is the raw variance of a coherent blank
    acquisition (dark noise included); ``v_detected_sqz`` is the squeezed
    probe's variance at the blank in shot-noise units.
    """

    blank_mean: float
    blank_monitor: float
    eta_blank: float
    shot_ref_variance: float
    dark_variance: float
    v_detected_sqz: float
    blank_count: int = 0
    blank_duration_s: float = 0.0

    def __post_init__(self):
        if not self.blank_mean > 0.0:
            raise DomainError("blank_mean must be positive")
        if not self.blank_monitor > 0.0:
            raise DomainError("blank_monitor must be positive")
        if not 0.0 < self.eta_blank <= 1.0:
            raise DomainError("eta_blank must lie in (0, 1]")
        if not self.shot_ref_variance > self.dark_variance >= 0.0:
            raise DomainError("need shot_ref_variance > dark_variance >= 0")
        if not self.v_detected_sqz > 0.0:
            raise DomainError("v_detected_sqz must be positive")

    @property
    def shot_variance(self) -> float:
        """Dark-subtracted shot-noise variance at blank power."""
        return self.shot_ref_variance - self.dark_variance


def calibrate(coherent_blank: Acquisition, squeezed_blank: Acquisition,
              dark_variance: float, eta_blank: float) -> CalibrationRecord:
    """Build a calibration record from paired blank acquisitions."""
    if coherent_blank.probe is not Probe.COHERENT or squeezed_blank.probe is not Probe.SQUEEZED:
        raise DomainError("calibration needs one coherent and one squeezed blank acquisition")
    shot = coherent_blank.variance - dark_variance
    if not shot > 0.0:
        raise DomainError("coherent blank variance does not exceed the dark floor")
    ratio = coherent_blank.monitor_power / squeezed_blank.monitor_power
    v_sqz = (squeezed_blank.variance - dark_variance) * ratio / shot
    return CalibrationRecord(
        blank_mean=coherent_blank.mean,
        blank_monitor=coherent_blank.monitor_power,
        eta_blank=eta_blank,
        shot_ref_variance=coherent_blank.variance,
        dark_variance=dark_variance,
        v_detected_sqz=v_sqz,
        blank_count=coherent_blank.count,
        blank_duration_s=coherent_blank.duration_s,
    )


@dataclass(frozen=True)
class TimeSeriesPoint:
    t: float
    probe: Probe
    eta_hat: float
    sigma_eta: float
    a_raw_mean: float = math.nan
    a_sigma_raw: float = math.nan
    a_mode: float = math.nan
    a_mean_corr: float = math.nan
    a_sigma_corr: float = math.nan
    var_db: float = math.nan
    expected_var_db: float = math.nan
    excluded: bool = False
    floor_clamped: bool = False


class TransmissivityEstimate(NamedTuple):
    eta_hat: float
    sigma_eta: float
    floor_clamped: bool = False


def count_effective(acq: Acquisition, lowpass_hz: float = LOWPASS_HZ) -> float:
    """Independent samples in an acquisition: capped at the filter's Nyquist count."""
    return float(min(acq.count, acq.duration_s * 2.0 * lowpass_hz))


def normalize_power_drift(acq: Acquisition, cal: CalibrationRecord) -> Acquisition:
    """Rescale an acquisition to the blank's monitored laser power."""
    k = cal.blank_monitor / acq.monitor_power
    if k == 1.0:
        return acq
    return replace(
        acq,
        mean=acq.mean * k,
        variance=acq.variance * k * k,
        monitor_power=cal.blank_monitor,
        samples=None if acq.samples is None else acq.samples * k,
    )


def estimate_transmissivity(acq: Acquisition, cal: CalibrationRecord,
                            noise_basis: str = "sample") -> TransmissivityEstimate:
    """Blank-normalised transmissivity and its uncertainty.

    ``acq`` must already be drift-normalised. ``noise_basis`` selects the
    single-sample spread or the standard error of the mean (see module doc).
    """
    if noise_basis not in ("sample", "mean"):
        raise ValueError(f"noise_basis must be 'sample' or 'mean', got {noise_basis!r}")
    eta_hat = acq.mean / cal.blank_mean
    excess = acq.variance - cal.dark_variance
    floor = _FLOOR_FRACTION * cal.shot_ref_variance
    clamped = excess < floor
    if clamped:
        warnings.warn(
            f"variance at t={acq.t_hours:.4g} h below dark floor; clamped",
            RuntimeWarning,
            stacklevel=2,
        )
        excess = floor
    sigma = math.sqrt(excess) / cal.blank_mean
    if noise_basis == "mean":
        sigma /= math.sqrt(count_effective(acq))
    return TransmissivityEstimate(eta_hat, sigma, clamped)


def estimate_absorbance(point: TimeSeriesPoint) -> TimeSeriesPoint:
    """Fill the absorbance fields of ``point`` with truncation-corrected moments."""
    if not point.eta_hat > 0.0:
        raise DomainError(f"invalid acquisition: eta_hat = {point.eta_hat!r}")
    if not point.sigma_eta > 0.0:
        raise DomainError("sigma_eta must be positive")
    a_raw = -math.log10(point.eta_hat)
    sigma_a = point.sigma_eta / (point.eta_hat * _LN10)
    mean_corr, sigma_corr = adjusted_moments(GaussianSpec(a_raw, sigma_a))
    return replace(
        point,
        a_raw_mean=a_raw,
        a_sigma_raw=sigma_a,
        a_mode=max(0.0, a_raw),
        a_mean_corr=mean_corr,
        a_sigma_corr=sigma_corr,
    )


def variance_rel_shot_db(acq: Acquisition, cal: CalibrationRecord, eta: float | None = None) -> float:
    """Acquisition noise relative to shot noise at the same optical power, in dB.

    Shot noise scales linearly with detected power, taken as the monitored
    laser power times the blank-normalised transmissivity ``eta`` (by
    default the acquisition's own estimate). Returns NaN if the variance
    does not exceed the dark floor.
    """
    if eta is None:
        eta = normalize_power_drift(acq, cal).mean / cal.blank_mean
    power_ratio = (acq.monitor_power / cal.blank_monitor) * eta
    excess = acq.variance - cal.dark_variance
    if not (excess > 0.0 and power_ratio > 0.0):
        return math.nan
    return 10.0 * math.log10(excess / (cal.shot_variance * power_ratio))


def expected_var_db(point: TimeSeriesPoint, cal: CalibrationRecord) -> float:
    if point.probe is Probe.COHERENT:
        return 0.0
    eta = min(max(point.eta_hat, 0.0), 1.0)
    return float(noise.expected_squeezing_curve(cal.v_detected_sqz, [eta])[0])


def exclude_lock_loss(series, cal: CalibrationRecord | None = None,
                      margin_db: float = DEFAULT_MARGIN_DB):
    """Flag squeezed points whose noise sits ``margin_db`` above expectation.

    Coherent points are never flagged. Points without an expected level get
    one from ``cal``; an undefined measured level counts as an outlier.
    """
    out = []
    for p in series:
        if p.probe is not Probe.SQUEEZED or p.excluded:
            out.append(p)
            continue
        expected = p.expected_var_db
        if math.isnan(expected):
            if cal is None:
                raise ValueError("calibration needed to compute the expected noise level")
            expected = expected_var_db(p, cal)
        bad = math.isnan(p.var_db) or p.var_db - expected > margin_db
        out.append(replace(p, expected_var_db=expected, excluded=bad))
    return out


def process_acquisition(acq: Acquisition, cal: CalibrationRecord,
                        noise_basis: str = "sample") -> TimeSeriesPoint:
    """Drift-normalise, estimate transmissivity/absorbance and the noise level."""
    norm = normalize_power_drift(acq, cal)
    est = estimate_transmissivity(norm, cal, noise_basis)
    point = TimeSeriesPoint(
        t=acq.t_hours,
        probe=acq.probe,
        eta_hat=est.eta_hat,
        sigma_eta=est.sigma_eta,
        floor_clamped=est.floor_clamped,
    )
    if point.eta_hat > 0.0:
        point = estimate_absorbance(point)
    var_db = variance_rel_shot_db(acq, cal, eta=est.eta_hat)
    return replace(point, var_db=var_db, expected_var_db=expected_var_db(point, cal))


def build_series(acquisitions, cal: CalibrationRecord, noise_basis: str = "sample",
                 margin_db: float = DEFAULT_MARGIN_DB):
    """Process every acquisition and apply lock-loss exclusion."""
    points = [process_acquisition(a, cal, noise_basis) for a in acquisitions]
    return exclude_lock_loss(points, cal, margin_db)
