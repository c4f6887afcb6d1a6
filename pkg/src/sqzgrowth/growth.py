"""Gompertz growth curves, their least-squares fit and derived quantities.

The model is the four-parameter Gompertz curve in absorbance units::

    A(t) = a * exp(-exp(mu * e / a * (theta - t) + 1)) + a_bk

with ``a`` the asymptotic absorbance, ``mu`` the maximum growth rate (1/h),
``theta`` the lag time (h) and ``a_bk`` the blank offset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, FitError

LOG10_E = math.log10(math.e)
LN2 = math.log(2.0)


@dataclass(frozen=True)
class GompertzParams:
    a: float
    mu: float
    theta: float
    a_bk: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.mu, self.theta, self.a_bk], dtype=float)

    @classmethod
    def from_array(cls, x) -> "GompertzParams":
        a, mu, theta, a_bk = (float(v) for v in x)
        return cls(a, mu, theta, a_bk)


# Fitted values for the E. coli run (absorbance at 1064 nm).
REFERENCE_COHERENT = GompertzParams(a=0.2546, mu=0.0835, theta=0.837, a_bk=0.0026)
REFERENCE_SQUEEZED = GompertzParams(a=0.253, mu=0.0835, theta=0.839, a_bk=0.0033)
REFERENCE_COHERENT_ERR = GompertzParams(a=0.0008, mu=0.0003, theta=0.007, a_bk=0.0004)
REFERENCE_SQUEEZED_ERR = GompertzParams(a=0.001, mu=0.0002, theta=0.007, a_bk=0.0003)


@dataclass(frozen=True)
class FitResult:
    params: GompertzParams
    std_errors: GompertzParams
    residual_norm: float
    converged: bool
    iterations: int
    covariance: np.ndarray | None = None


@dataclass(frozen=True)
class EarlyPolyParams:
    """Early-growth transmissivity model ``eta_bk - c t**2 + d t**3``."""

    eta_bk: float
    c: float
    d: float
    window_end: float = math.inf
    residual_norm: float = 0.0

    def __call__(self, t):
        return early_poly_eval(self, t)


def _check_params(p: GompertzParams):
    if not all(math.isfinite(v) for v in (p.a, p.mu, p.theta, p.a_bk)):
        raise DomainError("Gompertz parameters must be finite")
    if p.a == 0.0:
        raise DomainError("degenerate Gompertz model: asymptotic absorbance a = 0")


def gompertz_eval(p: GompertzParams, t):
    """Absorbance at time(s) ``t`` in hours."""
    _check_params(p)
    t_arr = np.asarray(t, dtype=float)
    out = kernels.gompertz(p.a, p.mu, p.theta, p.a_bk, np.atleast_1d(t_arr))
    return float(out[0]) if t_arr.ndim == 0 else out.reshape(t_arr.shape)


def gompertz_jacobian(p: GompertzParams, t) -> np.ndarray:
    """Partial derivatives with respect to (a, mu, theta, a_bk), shape (n, 4)."""
    _check_params(p)
    _, jac = kernels.gompertz_jac(p.a, p.mu, p.theta, p.a_bk, np.atleast_1d(np.asarray(t, float)))
    return jac


def doubling_time(mu: float) -> float:
    """Doubling time in hours for a maximum absorbance slope ``mu`` (1/h).

    Absorbance is log10 optical density, so an exponential phase
    ``f = alpha exp(beta t)`` has ``mu = beta log10(e)`` and doubles every
    ``ln 2 / beta``.
    """
    if not mu > 0.0:
        raise DomainError(f"growth rate must be positive, got {mu!r}")
    return LN2 * LOG10_E / mu


def inflection_point(p: GompertzParams) -> tuple[float, float]:
    """Inflection time ``theta + a/(mu e)`` and the slope there (equal to mu)."""
    _check_params(p)
    if not p.mu > 0.0:
        raise DomainError("inflection point undefined for mu <= 0")
    return p.theta + p.a / (p.mu * math.e), p.mu


def absorbance_from_transmissivity(eta_sample, eta_blank):
    """``-log10(eta_sample / eta_blank)``; negative when the sample beats the blank."""
    s = np.asarray(eta_sample, dtype=float)
    b = np.asarray(eta_blank, dtype=float)
    if np.any(~(s > 0.0)) or np.any(~(b > 0.0)):
        raise DomainError("transmissivities must be positive")
    out = -np.log10(s / b)
    return float(out) if out.ndim == 0 else out


def transmissivity_from_absorbance(a_val):
    a = np.asarray(a_val, dtype=float)
    if np.any(~np.isfinite(a)):
        raise DomainError("absorbance must be finite")
    out = 10.0 ** (-a)
    return float(out) if out.ndim == 0 else out


def initial_guess(t, y) -> GompertzParams:
    """Sigmoid starting point from the range and steepest smoothed slope."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    width = max(1, len(y) // 12)
    kernel = np.ones(2 * width + 1) / (2 * width + 1)
    padded = np.concatenate([np.full(width, y[0]), y, np.full(width, y[-1])])
    smooth = np.convolve(padded, kernel, mode="valid")
    slopes = np.gradient(smooth, t)
    lo, hi = width, len(y) - width
    k = lo + int(np.argmax(slopes[lo:hi])) if hi > lo else int(np.argmax(slopes))
    a = float(smooth.max() - smooth.min())
    mu = float(slopes[k])
    if not mu > 0.0:
        mu = a / max(t[-1] - t[0], 1e-12)
    a = max(a, 1e-12)
    theta = float(t[k] - a / (mu * math.e))
    return GompertzParams(a=a, mu=mu, theta=theta, a_bk=float(smooth.min()))


def gompertz_fit(
    t_series,
    a_series,
    weights=None,
    init: GompertzParams | None = None,
    max_iter: int = 200,
    rtol: float = 1e-10,
) -> FitResult:
    """Least-squares Gompertz fit by damped Gauss-Newton (Levenberg-Marquardt).

    Parameters
    ----------
    t_series, a_series : array_like
        Times in hours (strictly increasing, at least 8) and absorbances.
    weights : array_like, optional
        Non-negative residual weights, typically inverse variances.
    init : GompertzParams, optional
        Starting point; defaults to :func:`initial_guess`.

    Returns
    -------
    FitResult
        ``converged`` is False when ``max_iter`` is exhausted; the best
        parameters seen are still returned.
    """
    t = np.asarray(t_series, dtype=float)
    y = np.asarray(a_series, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise FitError("time and absorbance series must be 1-D and equally long")
    if t.size < 8:
        raise FitError(f"need at least 8 points, got {t.size}")
    if np.any(~np.isfinite(t)) or np.any(~np.isfinite(y)):
        raise FitError("non-finite values in fit data")
    if np.any(np.diff(t) <= 0.0):
        raise FitError("times must be strictly increasing")
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise FitError("flat series: no growth signal to fit")
    if weights is None:
        w = np.ones_like(y)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape or np.any(~np.isfinite(w)) or np.any(w < 0.0):
            raise FitError("weights must be finite, non-negative and match the data")
    sw = np.sqrt(w)

    x = (init if init is not None else initial_guess(t, y)).as_array()

    def residuals(p):
        f, jac = kernels.gompertz_jac(p[0], p[1], p[2], p[3], t)
        return sw * (y - f), jac * sw[:, None]

    r, jac = residuals(x)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jtj = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(jtj).copy()
        diag[diag <= 0.0] = 1.0
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = x + step
            if x_new[0] == 0.0 or not np.all(np.isfinite(x_new)):
                lam *= 10.0
                continue
            r_new, jac_new = residuals(x_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no descent direction left at working precision: stationary point
            converged = True
            break
        rel = np.linalg.norm(step) / (np.linalg.norm(x) + rtol)
        x, r, jac, cost = x_new, r_new, jac_new, cost_new
        lam = max(lam / 10.0, 1e-12)
        if rel < rtol:
            converged = True
            break

    dof = max(t.size - 4, 1)
    s2 = cost / dof
    try:
        cov = np.linalg.inv(jac.T @ jac) * s2
        std = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        cov = None
        std = np.full(4, np.inf)
    return FitResult(
        params=GompertzParams.from_array(x),
        std_errors=GompertzParams.from_array(std),
        residual_norm=math.sqrt(cost),
        converged=converged,
        iterations=it,
        covariance=cov,
    )


def early_poly_eval(p: EarlyPolyParams, t):
    t_arr = np.asarray(t, dtype=float)
    out = p.eta_bk - p.c * t_arr**2 + p.d * t_arr**3
    return float(out) if out.ndim == 0 else out


def early_poly_fit(t_series, eta_series, window_end: float, eta_bk: float = 1.0) -> EarlyPolyParams:
    """Linear least squares for (c, d) with the blank level ``eta_bk`` held fixed."""
    t = np.asarray(t_series, dtype=float)
    eta = np.asarray(eta_series, dtype=float)
    if t.shape != eta.shape or t.ndim != 1:
        raise FitError("time and transmissivity series must be 1-D and equally long")
    if not 0.0 < eta_bk <= 1.0:
        raise DomainError(f"eta_bk must lie in (0, 1], got {eta_bk!r}")
    sel = (t <= window_end) & np.isfinite(eta)
    if np.count_nonzero(sel) < 5:
        raise FitError(f"need at least 5 points with t <= {window_end}, got {np.count_nonzero(sel)}")
    ts = t[sel]
    design = np.column_stack([-(ts**2), ts**3])
    rhs = eta[sel] - eta_bk
    scale = np.linalg.norm(design, axis=0)
    if np.any(scale <= 1e-300):
        raise FitError("rank-deficient design: all times at zero")
    coef, _, rank, sv = np.linalg.lstsq(design / scale, rhs, rcond=None)
    if rank < 2 or sv[-1] <= 1e-10 * sv[0]:
        raise FitError("rank-deficient design for early polynomial fit")
    c, d = coef / scale
    resid = rhs - design @ (coef / scale)
    return EarlyPolyParams(
        eta_bk=float(eta_bk),
        c=float(c),
        d=float(d),
        window_end=float(window_end),
        residual_norm=float(np.linalg.norm(resid)),
    )
