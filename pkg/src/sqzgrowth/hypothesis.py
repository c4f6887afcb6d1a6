"""Growth versus no-growth decisions on a transmissivity bounded to [0, 1].

Under H0 (blank) the estimator is Gaussian around ``eta_bk``; under H1
(growth at time t) around ``eta_t < eta_bk``. Both densities are truncated
to [0, 1] and renormalised by their mass inside the interval. Growth is
declared when the measured transmissivity falls below a threshold ``tau``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError


class Criterion(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class HypothesisPair:
    eta_bk: float
    sigma_bk: float
    eta_t: float
    sigma_t: float

    def __post_init__(self):
        if not (self.sigma_bk > 0.0 and self.sigma_t > 0.0):
            raise DomainError("standard deviations must be positive")
        if not 0.0 < self.eta_t <= self.eta_bk <= 1.0:
            raise DomainError(
                f"need 0 < eta_t <= eta_bk <= 1, got eta_t={self.eta_t}, eta_bk={self.eta_bk}"
            )


@dataclass(frozen=True)
class ErrorProbabilities:
    p_fp: float
    p_fn: float
    tau: float

    @property
    def p_mean(self) -> float:
        return 0.5 * (self.p_fp + self.p_fn)


@dataclass
class DetectionReport:
    probe: str
    criterion: Criterion
    target: float
    t_detect: float | None
    fp_target: float | None = None
    times: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    errors: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    @property
    def reached(self) -> bool:
        return self.t_detect is not None

    def same_criterion(self, other: "DetectionReport") -> bool:
        return (
            self.criterion == other.criterion
            and self.target == other.target
            and self.fp_target == other.fp_target
        )


def truncated_mass(center: float, sigma: float) -> float:
    """Probability that N(center, sigma) lands inside [0, 1]."""
    if not sigma > 0.0:
        raise DomainError("sigma must be positive")
    return kernels.unit_mass(float(center), float(sigma))


def _check_tau(tau):
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"threshold must lie in [0, 1], got {tau!r}")


def p_false_positive(pair: HypothesisPair, tau: float) -> float:
    """H0 mass below ``tau``: growth declared on a blank."""
    _check_tau(tau)
    return kernels.p_fp(pair.eta_bk, pair.sigma_bk, float(tau))


def p_false_negative(pair: HypothesisPair, tau: float) -> float:
    """H1 mass above ``tau``: growth missed."""
    _check_tau(tau)
    return kernels.p_fn(pair.eta_t, pair.sigma_t, float(tau))


def min_mean_error(pair: HypothesisPair) -> ErrorProbabilities:
    """Symmetric test: threshold minimising the mean of the two error rates."""
    tau, fp, fn = kernels.min_mean_error(pair.eta_bk, pair.sigma_bk, pair.eta_t, pair.sigma_t)
    return ErrorProbabilities(p_fp=fp, p_fn=fn, tau=tau)


def threshold_for_fp(eta_bk: float, sigma_bk: float, fp_target: float) -> float:
    if not 0.0 < fp_target < 1.0:
        raise DomainError(f"false-positive target must lie in (0, 1), got {fp_target!r}")
    return kernels.tau_at_fp(float(eta_bk), float(sigma_bk), float(fp_target))


def fn_at_fixed_fp(pair: HypothesisPair, fp_target: float) -> ErrorProbabilities:
    """Asymmetric test: fix the false-alarm rate, report the missed-detection rate."""
    tau = threshold_for_fp(pair.eta_bk, pair.sigma_bk, fp_target)
    return ErrorProbabilities(
        p_fp=kernels.p_fp(pair.eta_bk, pair.sigma_bk, tau),
        p_fn=kernels.p_fn(pair.eta_t, pair.sigma_t, tau),
        tau=tau,
    )


def _pair_arrays(eta_bk, sigma_bk, eta_t, sigma_t):
    eta_t = np.asarray(eta_t, dtype=float)
    sigma_t = np.asarray(sigma_t, dtype=float)
    if eta_t.shape != sigma_t.shape or eta_t.ndim != 1:
        raise DomainError("eta_t and sigma_t must be 1-D arrays of equal length")
    if not (sigma_bk > 0.0 and np.all(sigma_t > 0.0)):
        raise DomainError("standard deviations must be positive")
    if not (0.0 < eta_bk <= 1.0 and np.all((eta_t > 0.0) & (eta_t <= eta_bk))):
        raise DomainError("need 0 < eta_t <= eta_bk <= 1 at every time")
    return eta_t, sigma_t


def mean_error_curve(eta_bk, sigma_bk, eta_t, sigma_t) -> np.ndarray:
    """p_mean at each time of an H1 trajectory."""
    eta_t, sigma_t = _pair_arrays(eta_bk, sigma_bk, eta_t, sigma_t)
    _, fp, fn = kernels.min_mean_error_series(float(eta_bk), float(sigma_bk), eta_t, sigma_t)
    return 0.5 * (fp + fn)


def fn_curve(eta_bk, sigma_bk, eta_t, sigma_t, fp_target) -> np.ndarray:
    """p_fn at each time with the threshold pinned by ``fp_target``."""
    eta_t, sigma_t = _pair_arrays(eta_bk, sigma_bk, eta_t, sigma_t)
    tau = threshold_for_fp(eta_bk, sigma_bk, fp_target)
    return kernels.p_fn_series(eta_t, sigma_t, tau)


def first_crossing(times, errors, target) -> float | None:
    """First time ``errors`` reaches ``target``, linearly interpolated; None if never."""
    times = np.asarray(times, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if times.size == 0:
        raise DomainError("empty series")
    if np.any(np.diff(times) <= 0.0):
        raise DomainError("times must be strictly increasing")
    hits = np.flatnonzero(errors <= target)
    if hits.size == 0:
        return None
    i = int(hits[0])
    if i == 0:
        return float(times[0])
    e0, e1 = errors[i - 1], errors[i]
    t0, t1 = times[i - 1], times[i]
    return float(t0 + (e0 - target) / (e0 - e1) * (t1 - t0))


def detection_time(
    times,
    pairs,
    criterion: Criterion | str,
    target: float,
    fp_target: float | None = None,
    probe: str = "",
) -> DetectionReport:
    """Earliest time the chosen error metric drops to ``target``.

    ``pairs`` is a sequence of :class:`HypothesisPair` sharing one H0. The
    symmetric criterion tracks p_mean; the asymmetric one tracks p_fn at
    the threshold giving ``fp_target`` false alarms.
    """
    criterion = Criterion(criterion)
    pairs = list(pairs)
    if not pairs:
        raise DomainError("empty series")
    times = np.asarray(times, dtype=float)
    if times.shape != (len(pairs),):
        raise DomainError("times and pairs must align")
    eta_bk, sigma_bk = pairs[0].eta_bk, pairs[0].sigma_bk
    if any(p.eta_bk != eta_bk or p.sigma_bk != sigma_bk for p in pairs):
        raise DomainError("all pairs must share the same null hypothesis")
    eta_t = np.array([p.eta_t for p in pairs])
    sigma_t = np.array([p.sigma_t for p in pairs])
    if criterion is Criterion.SYMMETRIC:
        errors = mean_error_curve(eta_bk, sigma_bk, eta_t, sigma_t)
    else:
        if fp_target is None:
            raise DomainError("asymmetric criterion needs fp_target")
        errors = fn_curve(eta_bk, sigma_bk, eta_t, sigma_t, fp_target)
    return DetectionReport(
        probe=str(probe),
        criterion=criterion,
        target=float(target),
        t_detect=first_crossing(times, errors, target),
        fp_target=None if criterion is Criterion.SYMMETRIC else float(fp_target),
        times=times,
        errors=errors,
    )


def compare_probes(coherent: DetectionReport, squeezed: DetectionReport) -> float | None:
    """Head start of the squeezed probe in hours; None if either never detects."""
    if not coherent.same_criterion(squeezed):
        raise DomainError("reports use different detection criteria")
    if not (coherent.reached and squeezed.reached):
        return None
    return coherent.t_detect - squeezed.t_detect


def one_sigma_time(times, eta, sigma, eta_bk: float = 1.0) -> float | None:
    """First time the mean transmissivity sits one sigma below the blank."""
    gap = (eta_bk - np.asarray(eta, dtype=float)) / np.asarray(sigma, dtype=float)
    return first_crossing(times, -gap, -1.0)
