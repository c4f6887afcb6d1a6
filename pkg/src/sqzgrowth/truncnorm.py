"""Truncated normal distribution on an interval [lower, upper].

Lower truncation at zero gets the closed-form moment correction used for
absorbance; the general two-sided case covers transmissivity on [0, 1].
All tail masses are evaluated through ``erfc`` so that neither deep tails
nor nearly complete intervals lose precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtri

from . import kernels
from .errors import DomainError, NumericalPrecisionError

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
MIN_MASS = 1e-300
# below this acceptance rate rejection sampling is abandoned
_REJECTION_FLOOR = 0.01


@dataclass(frozen=True)
class GaussianSpec:
    mean: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.sigma)):
            raise DomainError("mean and sigma must be finite")
        if not self.sigma > 0.0:
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")


@dataclass(frozen=True)
class TruncatedGaussian:
    """Gaussian ``base`` restricted to ``[lower, upper]``; ``upper`` may be inf."""

    base: GaussianSpec
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper) or not self.lower < self.upper:
            raise DomainError(f"need lower < upper, got [{self.lower}, {self.upper}]")
        if not self.mass > MIN_MASS:
            raise DomainError(
                f"truncation interval holds mass {self.mass:.3g}; numerically empty"
            )

    @property
    def alpha(self) -> float:
        return (self.lower - self.base.mean) / self.base.sigma

    @property
    def beta(self) -> float:
        return (self.upper - self.base.mean) / self.base.sigma

    @property
    def mass(self) -> float:
        return kernels.norm_mass(self.alpha, self.beta)

    def pdf(self, x):
        return pdf(self, x)

    def cdf(self, x):
        return cdf(self, x)

    def mode(self) -> float:
        return mode(self)

    def moments(self) -> tuple[float, float]:
        return moments(self)

    def sample(self, rng, n):
        return sample(self, rng, n)


def g_omega(omega: float) -> float:
    """Mean shift, in units of sigma, caused by truncating below ``-omega`` sigma.

    Equals ``2 phi(omega) / (1 - erf(omega / sqrt 2))``; evaluated through the
    scaled complementary error function so it stays finite for large omega.
    """
    if not math.isfinite(omega):
        raise DomainError(f"omega must be finite, got {omega!r}")
    return kernels.g_omega(float(omega))


def adjusted_moments(spec: GaussianSpec) -> tuple[float, float]:
    """Mean and standard deviation after truncating ``spec`` to [0, inf)."""
    try:
        return kernels.trunc_lower_moments(float(spec.mean), float(spec.sigma))
    except ArithmeticError as exc:
        raise NumericalPrecisionError(str(exc)) from exc


def _phi(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def _mass_between(lo, hi):
    """Vectorised standard-normal mass between z-scores lo <= hi."""
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    upper_side = lo >= 0.0
    lower_side = hi <= 0.0
    with np.errstate(invalid="ignore"):
        out = 1.0 - 0.5 * (erfc(-lo / _SQRT2) + erfc(hi / _SQRT2))
        out = np.where(upper_side, 0.5 * (erfc(lo / _SQRT2) - erfc(hi / _SQRT2)), out)
        out = np.where(lower_side, 0.5 * (erfc(-hi / _SQRT2) - erfc(-lo / _SQRT2)), out)
    return out


def pdf(dist: TruncatedGaussian, x):
    x_arr = np.asarray(x, dtype=float)
    z = (x_arr - dist.base.mean) / dist.base.sigma
    inside = (x_arr >= dist.lower) & (x_arr <= dist.upper)
    out = np.where(inside, _phi(z) / (dist.base.sigma * dist.mass), 0.0)
    return float(out) if out.ndim == 0 else out


def cdf(dist: TruncatedGaussian, x):
    x_arr = np.asarray(x, dtype=float)
    clipped = np.clip(x_arr, dist.lower, dist.upper)
    z = (clipped - dist.base.mean) / dist.base.sigma
    out = np.clip(_mass_between(dist.alpha, z) / dist.mass, 0.0, 1.0)
    out = np.where(x_arr >= dist.upper, 1.0, out)
    return float(out) if out.ndim == 0 else out


def mode(dist: TruncatedGaussian) -> float:
    return min(max(dist.base.mean, dist.lower), dist.upper)


def moments(dist: TruncatedGaussian) -> tuple[float, float]:
    """Mean and standard deviation for arbitrary truncation limits."""
    if dist.lower == 0.0 and math.isinf(dist.upper):
        return adjusted_moments(dist.base)
    a, b = dist.alpha, dist.beta
    z = dist.mass
    pa = float(_phi(a)) if math.isfinite(a) else 0.0
    pb = float(_phi(b)) if math.isfinite(b) else 0.0
    apa = a * pa if math.isfinite(a) else 0.0
    bpb = b * pb if math.isfinite(b) else 0.0
    shift = (pa - pb) / z
    factor = 1.0 + (apa - bpb) / z - shift * shift
    if not factor > 0.0:
        raise NumericalPrecisionError(f"non-positive variance factor {factor!r}")
    s = dist.base.sigma
    return dist.base.mean + s * shift, s * math.sqrt(factor)


def sample(dist: TruncatedGaussian, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. values from ``dist`` using the caller's generator.

    Rejection from the parent normal when the interval holds at least 1 % of
    the mass, inverse-CDF otherwise.
    """
    n = int(n)
    if n < 1:
        raise DomainError(f"sample count must be >= 1, got {n}")
    mu, s = dist.base.mean, dist.base.sigma
    if dist.mass >= _REJECTION_FLOOR:
        out = np.empty(n)
        filled = 0
        while filled < n:
            want = n - filled
            batch = int(want / dist.mass * 1.1) + 16
            draws = rng.normal(mu, s, size=batch)
            keep = draws[(draws >= dist.lower) & (draws <= dist.upper)][:want]
            out[filled : filled + keep.size] = keep
            filled += keep.size
        return out
    return _sample_inverse(dist, rng, n)


def _sample_inverse(dist, rng, n):
    a, b = dist.alpha, dist.beta
    u = rng.random(n)
    mu, s = dist.base.mean, dist.base.sigma
    if a > 0.0:
        # upper tail: work with survival probabilities to keep resolution
        qa = 0.5 * float(erfc(a / _SQRT2))
        qb = 0.5 * float(erfc(b / _SQRT2)) if math.isfinite(b) else 0.0
        z = -ndtri(qa - u * (qa - qb))
    else:
        pa = 0.5 * float(erfc(-a / _SQRT2)) if math.isfinite(a) else 0.0
        pb = 0.5 * float(erfc(-b / _SQRT2)) if math.isfinite(b) else 1.0
        z = ndtri(pa + u * (pb - pa))
    return np.clip(mu + s * z, dist.lower, dist.upper)
