"""Probe noise in shot-noise units and its degradation under optical loss.

Variances are dimensionless with shot noise equal to 1; levels in dB use
``10 log10``. Loss acts as a beam splitter mixing in vacuum noise:
``v_out = eta * v_in + (1 - eta)``.
"""
import math

import numpy as np

from .errors import DomainError, InconsistentNoiseError

SOURCE_SQUEEZING_DB = -6.19
DETECTED_SQUEEZING_DB = -3.98


def db_to_variance(db: float) -> float:
    if not math.isfinite(db):
        raise DomainError(f"squeezing level must be finite, got {db!r}")
    return 10.0 ** (db / 10.0)


def variance_to_db(v: float) -> float:
    if not v > 0.0:
        raise DomainError(f"noise variance must be positive, got {v!r}")
    return 10.0 * math.log10(v)


def _check_eta(eta):
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"transmissivity must lie in [0, 1], got {eta!r}")


def propagate_through_loss(v_in: float, eta: float) -> float:
    """Variance after a channel of power transmissivity ``eta``."""
    _check_eta(eta)
    if not v_in > 0.0:
        raise DomainError(f"noise variance must be positive, got {v_in!r}")
    return eta * v_in + (1.0 - eta)


def infer_path_efficiency(v_source: float, v_detected: float) -> float:
    """Transmissivity that degrades ``v_source`` into ``v_detected``.

    Raises
    ------
    InconsistentNoiseError
        If the detected variance is below the source variance or above
        shot noise; neither can arise from pure loss.
    """
    if not 0.0 < v_source < 1.0:
        raise DomainError(f"source must be squeezed (0 < v < 1), got {v_source!r}")
    if v_detected < v_source:
        raise InconsistentNoiseError(
            f"detected variance {v_detected!r} below source variance {v_source!r}"
        )
    if v_detected > 1.0:
        raise InconsistentNoiseError(
            f"detected variance {v_detected!r} exceeds shot noise; not a loss channel"
        )
    return (1.0 - v_detected) / (1.0 - v_source)


def expected_squeezing_curve(v_detected_initial: float, eta_series) -> np.ndarray:
    """Squeezing level in dB expected at each blank-normalised transmissivity."""
    eta = np.asarray(eta_series, dtype=float)
    if eta.ndim != 1:
        raise DomainError("eta_series must be one-dimensional")
    if np.any(~np.isfinite(eta)) or np.any((eta < 0.0) | (eta > 1.0)):
        raise DomainError("transmissivities must lie in [0, 1]")
    if not v_detected_initial > 0.0:
        raise DomainError(f"noise variance must be positive, got {v_detected_initial!r}")
    return 10.0 * np.log10(eta * v_detected_initial + (1.0 - eta))
