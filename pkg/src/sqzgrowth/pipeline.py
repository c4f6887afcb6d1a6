"""Analysis chain shared by the command line and the end-to-end tests.

acquisitions + calibration -> time series -> Gompertz fits / detection
reports per probe.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hypothesis as hyp
from .errors import DomainError, FitError
from .estimator import (
    DEFAULT_MARGIN_DB,
    CalibrationRecord,
    Probe,
    TimeSeriesPoint,
    build_series,
)
from .growth import FitResult, early_poly_fit, gompertz_fit
from .hypothesis import Criterion, DetectionReport, HypothesisPair

H1_SOURCES = ("measured", "poly")
DEFAULT_WINDOW_END = 3.0
# keeps H1 centres strictly inside (0, 1]
_ETA_MIN = 1e-9


@dataclass
class ProbeCurves:
    """Per-probe error curves over the included time points."""

    probe: Probe
    times: np.ndarray
    p_mean: np.ndarray
    p_fn_at_fp: np.ndarray | None = None


def probe_points(series, probe: Probe | str) -> list[TimeSeriesPoint]:
    """Non-excluded points of one probe, in time order."""
    probe = Probe(probe)
    pts = [p for p in series if p.probe is probe and not p.excluded]
    return sorted(pts, key=lambda p: p.t)


def blank_sigma(cal: CalibrationRecord, probe: Probe | str, noise_basis: str = "sample") -> float:
    """Spread of the transmissivity estimate on the blank (H0 width)."""
    v = 1.0 if Probe(probe) is Probe.COHERENT else cal.v_detected_sqz
    sigma = math.sqrt(v * cal.shot_variance) / cal.blank_mean
    if noise_basis == "mean":
        n_eff = min(cal.blank_count, cal.blank_duration_s * 2.0 * 25e3)
        if not n_eff > 0:
            raise DomainError("calibration lacks blank count/duration for the 'mean' basis")
        sigma /= math.sqrt(n_eff)
    return sigma


def hypothesis_series(points, cal: CalibrationRecord, probe: Probe | str,
                      source: str = "measured", window_end: float = DEFAULT_WINDOW_END,
                      noise_basis: str = "sample"):
    """Times and H0/H1 pairs for one probe.

    ``source="measured"`` centres H1 on each point's eta_hat; ``"poly"``
    on the early-growth polynomial fitted over ``t <= window_end``, in
    which case only points inside the window are returned.
    """
    if source not in H1_SOURCES:
        raise DomainError(f"unknown H1 source {source!r}")
    points = list(points)
    if not points:
        raise DomainError(f"no usable {Probe(probe)} points")
    t = np.array([p.t for p in points])
    sigma = np.array([p.sigma_eta for p in points])
    if source == "measured":
        eta = np.array([p.eta_hat for p in points])
    else:
        poly = early_poly_fit(t, [p.eta_hat for p in points], window_end, eta_bk=1.0)
        inside = t <= window_end
        t, sigma = t[inside], sigma[inside]
        eta = np.asarray(poly(t), dtype=float)
    eta = np.clip(eta, _ETA_MIN, 1.0)
    s_bk = blank_sigma(cal, probe, noise_basis)
    pairs = [HypothesisPair(1.0, s_bk, float(e), float(s)) for e, s in zip(eta, sigma)]
    return t, pairs


def detect(series, cal: CalibrationRecord, probe: Probe | str, criterion: Criterion | str,
           target: float, fp_target: float | None = None, source: str = "measured",
           window_end: float = DEFAULT_WINDOW_END, noise_basis: str = "sample") -> DetectionReport:
    probe = Probe(probe)
    t, pairs = hypothesis_series(probe_points(series, probe), cal, probe, source, window_end,
                                 noise_basis)
    return hyp.detection_time(t, pairs, criterion, target, fp_target=fp_target, probe=probe.value)


def error_curves(series, cal: CalibrationRecord, probe: Probe | str,
                 fp_target: float | None = None, noise_basis: str = "sample") -> ProbeCurves:
    """p_mean(t) and, if ``fp_target`` is given, p_fn(t) at that false-alarm rate."""
    probe = Probe(probe)
    t, pairs = hypothesis_series(probe_points(series, probe), cal, probe, noise_basis=noise_basis)
    s_bk = pairs[0].sigma_bk
    eta = np.array([p.eta_t for p in pairs])
    sig = np.array([p.sigma_t for p in pairs])
    pm = hyp.mean_error_curve(1.0, s_bk, eta, sig)
    fn = None if fp_target is None else hyp.fn_curve(1.0, s_bk, eta, sig, fp_target)
    return ProbeCurves(probe=probe, times=t, p_mean=pm, p_fn_at_fp=fn)


FIT_TARGETS = {"mode": "a_mode", "raw": "a_raw_mean", "corrected": "a_mean_corr"}


def fit_probe(series, probe: Probe | str, target: str = "mode", **kwargs) -> FitResult:
    """Unweighted Gompertz fit of one probe's absorbance series.

    ``target`` picks the truncated-distribution mode (default), the raw
    estimate or the truncation-corrected mean.
    """
    attr = FIT_TARGETS[target]
    pts = [p for p in probe_points(series, probe) if math.isfinite(getattr(p, attr))]
    if not pts:
        raise FitError(f"no usable {Probe(probe)} points to fit")
    t = np.array([p.t for p in pts])
    a = np.array([getattr(p, attr) for p in pts])
    return gompertz_fit(t, a, **kwargs)


def one_sigma_crossing(series, probe: Probe | str) -> float | None:
    """First time eta_hat sits one sigma_eta below the blank."""
    pts = probe_points(series, probe)
    if not pts:
        raise DomainError(f"no usable {Probe(probe)} points")
    return hyp.one_sigma_time([p.t for p in pts], [p.eta_hat for p in pts],
                              [p.sigma_eta for p in pts])


def advantage(series, cal: CalibrationRecord, target: float = 0.05, **kwargs):
    """Coherent and squeezed symmetric-test reports and the squeezed head start (h)."""
    coh = detect(series, cal, Probe.COHERENT, Criterion.SYMMETRIC, target, **kwargs)
    sqz = detect(series, cal, Probe.SQUEEZED, Criterion.SYMMETRIC, target, **kwargs)
    return coh, sqz, hyp.compare_probes(coh, sqz)


def analyze_simulation(dataset, margin_db: float = DEFAULT_MARGIN_DB, noise_basis: str = "sample"):
    """Series for a simulated dataset using its own blank calibration."""
    return build_series(dataset.acquisitions, dataset.calibration, noise_basis, margin_db)
