"""Pure-Python reference implementation of the numerical kernels.

Mirrors ``_ckernels.pyx`` function for function. Used when the compiled
extension is unavailable or when ``SQZGROWTH_PURE_PYTHON`` is set.
"""
import math

import numpy as np
from scipy.special import erfcx

SQRT2 = math.sqrt(2.0)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
E = math.e

# Above this omega the lower-truncated moments come from asymptotic series;
# the closed forms lose ~omega**4 ulps to cancellation.
ASYMPTOTIC_OMEGA = 25.0
# g(w) - w ~ (1/w) * sum H[k] / w**(2k)
_H_COEFFS = (1.0, -2.0, 10.0, -74.0, 706.0, -8162.0, 110410.0, -1708394.0, 29752066.0)
# 1 + w g - g**2 ~ (1/w**2) * sum D[k] / w**(2k)
_D_COEFFS = (1.0, -6.0, 50.0, -518.0, 6354.0, -89782.0, 1435330.0, -25625910.0, 505785122.0)

GRID_POINTS = 256
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _series(coeffs, u):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * u + c
    return acc


def g_omega(w):
    """Inverse Mills ratio ``2 phi(w) / erfc(w / sqrt 2)``."""
    w = float(w)
    if w >= ASYMPTOTIC_OMEGA:
        return w + _series(_H_COEFFS, 1.0 / (w * w)) / w
    return SQRT_2_OVER_PI / float(erfcx(w / SQRT2))


def trunc_lower_moments(mean, sigma):
    """Mean and standard deviation of N(mean, sigma) restricted to [0, inf)."""
    w = -mean / sigma
    if w >= ASYMPTOTIC_OMEGA:
        u = 1.0 / (w * w)
        shift = _series(_H_COEFFS, u) / w
        rad = u * _series(_D_COEFFS, u)
        return sigma * shift, sigma * math.sqrt(rad)
    g = g_omega(w)
    rad = 1.0 + w * g - g * g
    if not rad > 0.0:
        raise ArithmeticError(f"non-positive variance factor {rad!r} at omega={w!r}")
    return mean + g * sigma, sigma * math.sqrt(rad)


def trunc_lower_moments_array(mean, sigma):
    mean = np.asarray(mean, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    mean, sigma = np.broadcast_arrays(mean, sigma)
    m_out = np.empty(mean.shape)
    s_out = np.empty(mean.shape)
    for idx in np.ndindex(mean.shape):
        m_out[idx], s_out[idx] = trunc_lower_moments(float(mean[idx]), float(sigma[idx]))
    return m_out, s_out


def norm_mass(lo, hi):
    """Standard normal mass between z-scores ``lo <= hi`` without cancellation."""
    if lo >= 0.0:
        return 0.5 * (math.erfc(lo / SQRT2) - math.erfc(hi / SQRT2))
    if hi <= 0.0:
        return 0.5 * (math.erfc(-hi / SQRT2) - math.erfc(-lo / SQRT2))
    return 1.0 - 0.5 * (math.erfc(-lo / SQRT2) + math.erfc(hi / SQRT2))


def unit_mass(center, sigma):
    """Mass of N(center, sigma) inside [0, 1]."""
    return norm_mass(-center / sigma, (1.0 - center) / sigma)


def p_fp(eta_bk, s_bk, tau):
    if tau >= 1.0:
        return 1.0
    n0 = unit_mass(eta_bk, s_bk)
    return min(1.0, norm_mass(-eta_bk / s_bk, (tau - eta_bk) / s_bk) / n0)


def p_fn(eta_t, s_t, tau):
    if tau <= 0.0:
        return 1.0
    n1 = unit_mass(eta_t, s_t)
    return min(1.0, norm_mass((tau - eta_t) / s_t, (1.0 - eta_t) / s_t) / n1)


def _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, tau):
    fp = norm_mass(-eta_bk / s_bk, (tau - eta_bk) / s_bk) / n0
    fn = norm_mass((tau - eta_t) / s_t, (1.0 - eta_t) / s_t) / n1
    return 0.5 * (fp + fn)


def _slope(eta_bk, s_bk, n0, eta_t, s_t, n1, tau):
    # sign of d/dtau (p_fp + p_fn): H0 density minus H1 density
    z0 = (tau - eta_bk) / s_bk
    z1 = (tau - eta_t) / s_t
    return math.exp(-0.5 * z0 * z0) / (s_bk * n0) - math.exp(-0.5 * z1 * z1) / (s_t * n1)


def min_mean_error(eta_bk, s_bk, eta_t, s_t):
    """Threshold minimising (p_fp + p_fn)/2; returns ``(tau, p_fp, p_fn)``."""
    n0 = unit_mass(eta_bk, s_bk)
    n1 = unit_mass(eta_t, s_t)
    spread = 6.0 * max(s_bk, s_t)
    lo = max(0.0, min(eta_t, eta_bk) - spread)
    hi = min(1.0, max(eta_t, eta_bk) + spread)
    if hi <= lo:
        lo, hi = 0.0, 1.0
    step = (hi - lo) / (GRID_POINTS - 1)
    best_i = 0
    best_f = math.inf
    for i in range(GRID_POINTS):
        f = _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, lo + i * step)
        if f < best_f:
            best_f = f
            best_i = i
    a = lo + max(best_i - 1, 0) * step
    b = lo + min(best_i + 1, GRID_POINTS - 1) * step

    # golden section inside the bracketing cell pair
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, c)
    fd = _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, d)
    for _ in range(200):
        if b - a <= 1e-13:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, d)
    tau = 0.5 * (a + b)

    # polish on the stationarity condition where the bracket straddles it
    a = max(lo, tau - 2.0 * step)
    b = min(hi, tau + 2.0 * step)
    sa = _slope(eta_bk, s_bk, n0, eta_t, s_t, n1, a)
    sb = _slope(eta_bk, s_bk, n0, eta_t, s_t, n1, b)
    if sa < 0.0 < sb:
        for _ in range(200):
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            sm = _slope(eta_bk, s_bk, n0, eta_t, s_t, n1, m)
            if sm < 0.0:
                a = m
            else:
                b = m
        cand = 0.5 * (a + b)
        if _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, cand) <= _objective(
            eta_bk, s_bk, n0, eta_t, s_t, n1, tau
        ):
            tau = cand

    fp = norm_mass(-eta_bk / s_bk, (tau - eta_bk) / s_bk) / n0
    fn = norm_mass((tau - eta_t) / s_t, (1.0 - eta_t) / s_t) / n1
    # tau = 1 gives exactly 1/2; never report worse because of rounding
    if fp + fn > 1.0:
        return 1.0, 1.0, 0.0
    return tau, fp, fn


def tau_at_fp(eta_bk, s_bk, fp_target, tol=1e-13):
    """Threshold with p_fp(tau) == fp_target, by bisection on [0, 1]."""
    n0 = unit_mass(eta_bk, s_bk)
    a, b = 0.0, 1.0
    while b - a > tol:
        m = 0.5 * (a + b)
        if norm_mass(-eta_bk / s_bk, (m - eta_bk) / s_bk) / n0 < fp_target:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def min_mean_error_series(eta_bk, s_bk, eta_t, s_t):
    eta_t = np.ascontiguousarray(eta_t, dtype=float)
    s_t = np.ascontiguousarray(s_t, dtype=float)
    n = eta_t.shape[0]
    tau = np.empty(n)
    fp = np.empty(n)
    fn = np.empty(n)
    for i in range(n):
        tau[i], fp[i], fn[i] = min_mean_error(eta_bk, s_bk, float(eta_t[i]), float(s_t[i]))
    return tau, fp, fn


def p_fn_series(eta_t, s_t, tau):
    eta_t = np.ascontiguousarray(eta_t, dtype=float)
    s_t = np.ascontiguousarray(s_t, dtype=float)
    out = np.empty(eta_t.shape[0])
    for i in range(eta_t.shape[0]):
        out[i] = p_fn(float(eta_t[i]), float(s_t[i]), tau)
    return out


def gompertz(a, mu, theta, a_bk, t):
    t = np.asarray(t, dtype=float)
    z = mu * E / a * (theta - t) + 1.0
    # exp(z) may overflow far before the lag; exp(-inf) = 0 is the right limit
    with np.errstate(over="ignore"):
        return a * np.exp(-np.exp(z)) + a_bk


def gompertz_jac(a, mu, theta, a_bk, t):
    """Values and Jacobian columns d/d(a, mu, theta, a_bk)."""
    t = np.asarray(t, dtype=float)
    lag = theta - t
    z = mu * E / a * lag + 1.0
    ez = np.exp(z)
    g = np.exp(-ez)
    jac = np.empty((t.shape[0], 4))
    jac[:, 0] = g * (1.0 + ez * (z - 1.0))
    jac[:, 1] = -g * ez * E * lag
    jac[:, 2] = -g * ez * mu * E
    jac[:, 3] = 1.0
    return a * g + a_bk, jac
