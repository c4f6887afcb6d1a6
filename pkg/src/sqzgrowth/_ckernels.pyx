# cython: language_level=3
"""Compiled numerical kernels.

Same functions and signatures as ``_pykernels``; tests hold the two to
1e-12 agreement.
"""
import numpy as np

cimport cython
from libc.math cimport erfc, exp, sqrt, fabs, INFINITY, M_E, M_PI
from scipy.special.cython_special cimport erfcx

cdef double SQRT2 = sqrt(2.0)
cdef double SQRT_2_OVER_PI = sqrt(2.0 / M_PI)
cdef double INVPHI = (sqrt(5.0) - 1.0) / 2.0
cdef int GRID_POINTS = 256

ASYMPTOTIC_OMEGA = 25.0
cdef double _ASYMPTOTIC_OMEGA = 25.0
cdef double[9] _H = [1.0, -2.0, 10.0, -74.0, 706.0, -8162.0, 110410.0, -1708394.0, 29752066.0]
cdef double[9] _D = [1.0, -6.0, 50.0, -518.0, 6354.0, -89782.0, 1435330.0, -25625910.0, 505785122.0]


cdef inline double _series(double* coeffs, double u) nogil:
    cdef double acc = 0.0
    cdef int k
    for k in range(8, -1, -1):
        acc = acc * u + coeffs[k]
    return acc


cdef inline double _g(double w) nogil:
    if w >= _ASYMPTOTIC_OMEGA:
        return w + _series(_H, 1.0 / (w * w)) / w
    return SQRT_2_OVER_PI / erfcx(w / SQRT2)


def g_omega(double w):
    """Inverse Mills ratio ``2 phi(w) / erfc(w / sqrt 2)``."""
    return _g(w)


cdef int _moments(double mean, double sigma, double* m_out, double* s_out) nogil:
    cdef double w = -mean / sigma
    cdef double u, g, rad
    if w >= _ASYMPTOTIC_OMEGA:
        u = 1.0 / (w * w)
        m_out[0] = sigma * _series(_H, u) / w
        s_out[0] = sigma * sqrt(u * _series(_D, u))
        return 0
    g = _g(w)
    rad = 1.0 + w * g - g * g
    if not rad > 0.0:
        return -1
    m_out[0] = mean + g * sigma
    s_out[0] = sigma * sqrt(rad)
    return 0


def trunc_lower_moments(double mean, double sigma):
    """Mean and standard deviation of N(mean, sigma) restricted to [0, inf)."""
    cdef double m, s
    if _moments(mean, sigma, &m, &s) != 0:
        raise ArithmeticError(f"non-positive variance factor at omega={-mean / sigma!r}")
    return m, s


def trunc_lower_moments_array(mean, sigma):
    mean_b, sigma_b = np.broadcast_arrays(np.asarray(mean, dtype=float),
                                          np.asarray(sigma, dtype=float))
    shape = mean_b.shape
    cdef double[::1] mv = np.ascontiguousarray(mean_b).ravel()
    cdef double[::1] sv = np.ascontiguousarray(sigma_b).ravel()
    cdef Py_ssize_t n = mv.shape[0], i
    m_arr = np.empty(n)
    s_arr = np.empty(n)
    cdef double[::1] mo = m_arr
    cdef double[::1] so = s_arr
    for i in range(n):
        if _moments(mv[i], sv[i], &mo[i], &so[i]) != 0:
            raise ArithmeticError(f"non-positive variance factor at index {i}")
    return m_arr.reshape(shape), s_arr.reshape(shape)


cdef inline double _norm_mass(double lo, double hi) nogil:
    if lo >= 0.0:
        return 0.5 * (erfc(lo / SQRT2) - erfc(hi / SQRT2))
    if hi <= 0.0:
        return 0.5 * (erfc(-hi / SQRT2) - erfc(-lo / SQRT2))
    return 1.0 - 0.5 * (erfc(-lo / SQRT2) + erfc(hi / SQRT2))


def norm_mass(double lo, double hi):
    """Standard normal mass between z-scores ``lo <= hi`` without cancellation."""
    return _norm_mass(lo, hi)


cdef inline double _unit_mass(double c, double s) nogil:
    return _norm_mass(-c / s, (1.0 - c) / s)


def unit_mass(double center, double sigma):
    """Mass of N(center, sigma) inside [0, 1]."""
    return _unit_mass(center, sigma)


def p_fp(double eta_bk, double s_bk, double tau):
    if tau >= 1.0:
        return 1.0
    return min(1.0, _norm_mass(-eta_bk / s_bk, (tau - eta_bk) / s_bk) / _unit_mass(eta_bk, s_bk))


cdef inline double _p_fn(double eta_t, double s_t, double n1, double tau) nogil:
    return _norm_mass((tau - eta_t) / s_t, (1.0 - eta_t) / s_t) / n1


def p_fn(double eta_t, double s_t, double tau):
    if tau <= 0.0:
        return 1.0
    return min(1.0, _p_fn(eta_t, s_t, _unit_mass(eta_t, s_t), tau))


cdef inline double _objective(double eta_bk, double s_bk, double n0,
                              double eta_t, double s_t, double n1, double tau) nogil:
    cdef double fp = _norm_mass(-eta_bk / s_bk, (tau - eta_bk) / s_bk) / n0
    cdef double fn = _norm_mass((tau - eta_t) / s_t, (1.0 - eta_t) / s_t) / n1
    return 0.5 * (fp + fn)


cdef inline double _slope(double eta_bk, double s_bk, double n0,
                          double eta_t, double s_t, double n1, double tau) nogil:
    cdef double z0 = (tau - eta_bk) / s_bk
    cdef double z1 = (tau - eta_t) / s_t
    return exp(-0.5 * z0 * z0) / (s_bk * n0) - exp(-0.5 * z1 * z1) / (s_t * n1)


cdef void _min_mean_error(double eta_bk, double s_bk, double eta_t, double s_t,
                          double* tau_out, double* fp_out, double* fn_out) nogil:
    cdef double n0 = _unit_mass(eta_bk, s_bk)
    cdef double n1 = _unit_mass(eta_t, s_t)
    cdef double spread = 6.0 * (s_bk if s_bk > s_t else s_t)
    cdef double lo = (eta_t if eta_t < eta_bk else eta_bk) - spread
    cdef double hi = (eta_t if eta_t > eta_bk else eta_bk) + spread
    cdef double step, f, best_f, a, b, c, d, fc, fd, tau, sa, sb, sm, m, cand
    cdef int i, best_i, it
    if lo < 0.0:
        lo = 0.0
    if hi > 1.0:
        hi = 1.0
    if hi <= lo:
        lo = 0.0
        hi = 1.0
    step = (hi - lo) / (GRID_POINTS - 1)
    best_i = 0
    best_f = INFINITY
    for i in range(GRID_POINTS):
        f = _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, lo + i * step)
        if f < best_f:
            best_f = f
            best_i = i
    a = lo + (best_i - 1 if best_i > 0 else 0) * step
    b = lo + (best_i + 1 if best_i < GRID_POINTS - 1 else GRID_POINTS - 1) * step

    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc = _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, c)
    fd = _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, d)
    for it in range(200):
        if b - a <= 1e-13:
            break
        if fc < fd:
            b = d
            d = c
            fd = fc
            c = b - INVPHI * (b - a)
            fc = _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, c)
        else:
            a = c
            c = d
            fc = fd
            d = a + INVPHI * (b - a)
            fd = _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, d)
    tau = 0.5 * (a + b)

    a = tau - 2.0 * step
    b = tau + 2.0 * step
    if a < lo:
        a = lo
    if b > hi:
        b = hi
    sa = _slope(eta_bk, s_bk, n0, eta_t, s_t, n1, a)
    sb = _slope(eta_bk, s_bk, n0, eta_t, s_t, n1, b)
    if sa < 0.0 and sb > 0.0:
        for it in range(200):
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            sm = _slope(eta_bk, s_bk, n0, eta_t, s_t, n1, m)
            if sm < 0.0:
                a = m
            else:
                b = m
        cand = 0.5 * (a + b)
        if (_objective(eta_bk, s_bk, n0, eta_t, s_t, n1, cand)
                <= _objective(eta_bk, s_bk, n0, eta_t, s_t, n1, tau)):
            tau = cand

    tau_out[0] = tau
    fp_out[0] = _norm_mass(-eta_bk / s_bk, (tau - eta_bk) / s_bk) / n0
    fn_out[0] = _norm_mass((tau - eta_t) / s_t, (1.0 - eta_t) / s_t) / n1
    # tau = 1 gives exactly 1/2; never report worse because of rounding
    if fp_out[0] + fn_out[0] > 1.0:
        tau_out[0] = 1.0
        fp_out[0] = 1.0
        fn_out[0] = 0.0


def min_mean_error(double eta_bk, double s_bk, double eta_t, double s_t):
    """Threshold minimising (p_fp + p_fn)/2; returns ``(tau, p_fp, p_fn)``."""
    cdef double tau, fp, fn
    _min_mean_error(eta_bk, s_bk, eta_t, s_t, &tau, &fp, &fn)
    return tau, fp, fn


def tau_at_fp(double eta_bk, double s_bk, double fp_target, double tol=1e-13):
    """Threshold with p_fp(tau) == fp_target, by bisection on [0, 1]."""
    cdef double n0 = _unit_mass(eta_bk, s_bk)
    cdef double a = 0.0, b = 1.0, m
    while b - a > tol:
        m = 0.5 * (a + b)
        if _norm_mass(-eta_bk / s_bk, (m - eta_bk) / s_bk) / n0 < fp_target:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def min_mean_error_series(double eta_bk, double s_bk, eta_t, s_t):
    cdef double[::1] et = np.ascontiguousarray(eta_t, dtype=float)
    cdef double[::1] st = np.ascontiguousarray(s_t, dtype=float)
    cdef Py_ssize_t n = et.shape[0], i
    tau = np.empty(n)
    fp = np.empty(n)
    fn = np.empty(n)
    cdef double[::1] tv = tau
    cdef double[::1] fpv = fp
    cdef double[::1] fnv = fn
    with nogil:
        for i in range(n):
            _min_mean_error(eta_bk, s_bk, et[i], st[i], &tv[i], &fpv[i], &fnv[i])
    return tau, fp, fn


def p_fn_series(eta_t, s_t, double tau):
    cdef double[::1] et = np.ascontiguousarray(eta_t, dtype=float)
    cdef double[::1] st = np.ascontiguousarray(s_t, dtype=float)
    cdef Py_ssize_t n = et.shape[0], i
    out = np.empty(n)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            ov[i] = 1.0 if tau <= 0.0 else min(1.0, _p_fn(et[i], st[i], _unit_mass(et[i], st[i]), tau))
    return out


def gompertz(double a, double mu, double theta, double a_bk, t):
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=float).ravel()
    cdef Py_ssize_t n = tv.shape[0], i
    cdef double k = mu * M_E / a
    out = np.empty(n)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            ov[i] = a * exp(-exp(k * (theta - tv[i]) + 1.0)) + a_bk
    return out.reshape(np.shape(t))


def gompertz_jac(double a, double mu, double theta, double a_bk, t):
    """Values and Jacobian columns d/d(a, mu, theta, a_bk)."""
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=float).ravel()
    cdef Py_ssize_t n = tv.shape[0], i
    cdef double k = mu * M_E / a
    cdef double lag, z, ez, g
    out = np.empty(n)
    jac = np.empty((n, 4))
    cdef double[::1] ov = out
    cdef double[:, ::1] jv = jac
    with nogil:
        for i in range(n):
            lag = theta - tv[i]
            z = k * lag + 1.0
            ez = exp(z)
            g = exp(-ez)
            ov[i] = a * g + a_bk
            jv[i, 0] = g * (1.0 + ez * (z - 1.0))
            jv[i, 1] = -g * ez * M_E * lag
            jv[i, 2] = -g * ez * mu * M_E
            jv[i, 3] = 1.0
    return out, jac
