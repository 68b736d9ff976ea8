"""Small numerical toolkit: stabilized log-means, bracketing, 1-D search."""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateEstimateError, InfeasibleTargetError, NumericRangeError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def log_mean_exp(values):
    """Return ``(log mean exp(values), relative stderr)`` with a max shift.

    The second element is the delta-method standard error of the log-mean,
    ``std(w) / (sqrt(N) * mean(w))`` with ``w = exp(values - max)``.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise DegenerateEstimateError("no samples")
    if np.isnan(values).any():
        raise NumericRangeError("NaN in log-domain samples", magnitude=float("nan"))
    top = values.max()
    if top == np.inf:
        raise NumericRangeError("log-domain sample overflowed to +inf", magnitude=np.inf)
    if top == -np.inf:
        raise DegenerateEstimateError("every log-domain sample is -inf")
    w = np.exp(values - top)
    mean_w = w.mean()
    stderr = w.std(ddof=1) / (math.sqrt(values.size) * mean_w) if values.size > 1 else 0.0
    return float(top + math.log(mean_w)), float(stderr)


def bisect_increasing(f, lo, hi, xtol=1e-12, max_iter=200):
    """Root of a nondecreasing function on ``[lo, hi]`` by bisection.

    Raises :class:`InfeasibleTargetError` when ``f(lo) > 0`` or ``f(hi) < 0``.
    Returns early on an exact zero.
    """
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 0 or f_hi < 0:
        raise InfeasibleTargetError(
            f"target not bracketed on [{lo}, {hi}]: f(lo)={f_lo:.3e}, f(hi)={f_hi:.3e}"
        )
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0:
            return mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= xtol:
            break
    return 0.5 * (lo + hi)


def bisect_sign_change(f, lo, hi, f_lo=None, xtol=1e-12, max_iter=200):
    """Root of ``f`` on a bracket where ``f(lo)`` and ``f(hi)`` differ in sign."""
    f_lo = f(lo) if f_lo is None else f_lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo <= xtol:
            break
    return 0.5 * (lo + hi)


def golden_section_max(f, a, b, tol=1e-6):
    """Maximizer of a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``.

    The endpoints are compared against the interior optimum, so monotone
    objectives resolve to the correct edge.
    """
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc >= fd else (d, fd)
    for edge in (a, b):
        fe = f(edge)
        if fe > fx:
            x, fx = edge, fe
    return x, fx


def is_unimodal(values, tolerance=0.0):
    """True when ``values`` rises to one peak and then falls, up to ``tolerance``.

    A dip is tolerated only while its depth below the running maximum stays
    within ``tolerance`` (so no second peak has prominence above it).
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return True
    tol = np.broadcast_to(np.asarray(tolerance, dtype=float), v.shape)
    peak = int(np.argmax(v))
    left = v[: peak + 1]
    if np.any(np.maximum.accumulate(left) - left > tol[: peak + 1]):
        return False
    right = v[peak:][::-1]
    return not np.any(np.maximum.accumulate(right) - right > tol[peak:][::-1])


def log1mexp(x):
    """``log(1 - exp(-x))`` for ``x > 0``, accurate on both ends."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > math.log(2.0), np.log1p(-np.exp(-x)), np.log(-np.expm1(-x)))
