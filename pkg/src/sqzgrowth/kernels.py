"""Backend selection for the numerical kernels.

The compiled extension is used when it imports cleanly; setting the
environment variable ``SQZGROWTH_PURE_PYTHON=1`` forces the pure-Python
fallback. ``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels

if os.environ.get("SQZGROWTH_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

ASYMPTOTIC_OMEGA = _pykernels.ASYMPTOTIC_OMEGA

g_omega = _impl.g_omega
trunc_lower_moments = _impl.trunc_lower_moments
trunc_lower_moments_array = _impl.trunc_lower_moments_array
norm_mass = _impl.norm_mass
unit_mass = _impl.unit_mass
p_fp = _impl.p_fp
p_fn = _impl.p_fn
min_mean_error = _impl.min_mean_error
min_mean_error_series = _impl.min_mean_error_series
tau_at_fp = _impl.tau_at_fp
p_fn_series = _impl.p_fn_series
gompertz = _impl.gompertz
gompertz_jac = _impl.gompertz_jac


def available_backends():
    """Names of importable backends, fastest first."""
    names = []
    try:
        from . import _ckernels  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return names


def load_backend(name):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
