"""Log-MGF of the finite-blocklength service process and the eps-effective capacity.

Each fading state serves ``n * R*`` bits with probability ``1 - exp(-n*theta_err)``
and nothing otherwise, where ``R*`` is the quantile rate from
:func:`fbqos.fbc_rate.rate_from_reliability` clipped at zero. ``theta_delay`` is
measured per nat of queued data: the log-MGF is taken of ``n * R*`` in nats and
EC is reported in bits per channel use.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fbc_rate import LN2, FadingSamples, rate_from_reliability, resolve_samples
from .montecarlo import MonteCarloEstimate, MonteCarloSpec
from .numerics import golden_section_max, is_unimodal, log1mexp, log_mean_exp


@dataclass(frozen=True)
class QosPair:
    theta_delay: float
    theta_err: float

    def __post_init__(self):
        if not self.theta_delay > 0:
            raise DomainError(f"theta_delay must be positive, got {self.theta_delay!r}")
        if not self.theta_err > 0:
            raise DomainError(f"theta_err must be positive, got {self.theta_err!r}")

    def admissible(self, n: int) -> bool:
        """``exp(-n * theta_err) < 1/2``."""
        return n * self.theta_err > LN2

    @property
    def as_tuple(self):
        return (self.theta_delay, self.theta_err)


@dataclass(frozen=True)
class EcSurfacePoint:
    qos: QosPair
    blocklength: int
    ec: float
    log_mgf: float
    ec_stderr: float = 0.0
    log_mgf_stderr: float = 0.0


def min_reliability_exponent(n: int) -> float:
    """Smallest admissible ``theta_err`` (just above ``ln 2 / n``)."""
    return LN2 / n * (1.0 + 1e-6)


def service_exponent(theta_delay, n: int):
    """Exponent per bit of per-block service, ``n * theta_delay * ln 2``."""
    return n * theta_delay * LN2


def delay_exponent_per_bit(theta_delay):
    """Queue-length decay rate per bit for a delay exponent given per nat."""
    return theta_delay * LN2


def ec_from_log_mgf(log_mgf, theta_delay, n: int):
    return -log_mgf / service_exponent(theta_delay, n)


def service_rates(samples: FadingSamples, theta_err: float, n: int) -> np.ndarray:
    """Per-state service rate ``max(R*, 0)`` in bits per channel use."""
    return np.maximum(rate_from_reliability(samples.capacity, samples.dispersion, theta_err, n), 0.0)


def _log_integrand(samples, qos, n):
    if not qos.admissible(n):
        raise DomainError(
            f"exp(-n*theta_err) >= 1/2 for theta_err={qos.theta_err!r}, n={n}; rate undefined"
        )
    rates = service_rates(samples, qos.theta_err, n)
    log_eps = -n * qos.theta_err
    out = np.logaddexp(log_eps, log1mexp(n * qos.theta_err) - service_exponent(qos.theta_delay, n) * rates)
    return np.minimum(out, 0.0)


def log_mgf_estimate(channel, qos: QosPair, n: int, mc: MonteCarloSpec | None = None) -> MonteCarloEstimate:
    samples = resolve_samples(channel, mc)
    value, stderr = log_mean_exp(_log_integrand(samples, qos, n))
    return MonteCarloEstimate(value, stderr, samples.size, samples.seed if samples.seed is not None else 0)


def log_mgf(channel, qos: QosPair, n: int, mc: MonteCarloSpec | None = None) -> float:
    """``log E[eps + (1 - eps) exp(-n theta R*)]`` with ``eps = exp(-n theta_err)``."""
    return log_mgf_estimate(channel, qos, n, mc).mean


def log_mgf_influence(channel, qos: QosPair, n: int, mc: MonteCarloSpec | None = None):
    """Per-sample influence values of the log-MGF estimate.

    Linear combinations of log-MGF estimates taken on common random numbers
    have standard error ``std(sum_k c_k * influence_k) / sqrt(N)``.
    """
    samples = resolve_samples(channel, mc)
    logs = _log_integrand(samples, qos, n)
    w = np.exp(logs - logs.max())
    return w / w.mean() - 1.0


def epsilon_effective_capacity(channel, qos: QosPair, n: int,
                               mc: MonteCarloSpec | None = None) -> EcSurfacePoint:
    est = log_mgf_estimate(channel, qos, n, mc)
    scale = service_exponent(qos.theta_delay, n)
    return EcSurfacePoint(
        qos=qos,
        blocklength=n,
        ec=-est.mean / scale,
        log_mgf=est.mean,
        ec_stderr=est.stderr / scale,
        log_mgf_stderr=est.stderr,
    )


@dataclass(frozen=True)
class ReliabilityOptimum:
    theta_err: float
    ec: float
    ec_stderr: float
    grid: np.ndarray
    grid_ec: np.ndarray
    grid_stderr: np.ndarray
    unimodal: bool


def ec_sweep(channel, theta_delay: float, n: int, theta_errs, mc: MonteCarloSpec | None = None):
    """EC and its stderr along a ``theta_err`` grid at fixed ``theta_delay``."""
    samples = resolve_samples(channel, mc)
    pts = [epsilon_effective_capacity(samples, QosPair(theta_delay, t), n) for t in theta_errs]
    return np.array([p.ec for p in pts]), np.array([p.ec_stderr for p in pts])


def optimal_reliability_exponent(channel, theta_delay: float, n: int,
                                 mc: MonteCarloSpec | None = None,
                                 theta_err_max: float = 1.0, grid_points: int = 201,
                                 tol: float = 1e-8) -> ReliabilityOptimum:
    """Reliability exponent maximizing EC at fixed ``theta_delay``.

    A geometric grid over ``[ln2/n * (1 + 1e-6), theta_err_max]`` locates the
    peak; golden-section search then refines it inside the neighbouring grid
    cells. Warns when the sweep is flat to within three standard errors.
    """
    if not theta_delay > 0:
        raise DomainError(f"theta_delay must be positive, got {theta_delay!r}")
    samples = resolve_samples(channel, mc)
    lo = min_reliability_exponent(n)
    if not theta_err_max > lo:
        raise DomainError(f"theta_err_max must exceed {lo:.6g}")
    grid = np.geomspace(lo, theta_err_max, grid_points)
    ec, se = ec_sweep(samples, theta_delay, n, grid)
    k = int(np.argmax(ec))
    # the floor absorbs round-off on exactly flat (zero-variance) sweeps
    if ec.max() - ec.min() <= 3.0 * se.max() + 1e-12 * max(1.0, float(np.abs(ec).max())):
        warnings.warn(f"EC is flat in theta_err at theta_delay={theta_delay:g}", RuntimeWarning)

    def objective(t):
        return epsilon_effective_capacity(samples, QosPair(theta_delay, t), n).ec

    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    best_t, best_ec = golden_section_max(objective, a, b, tol=tol * max(1.0, b))
    if ec[k] > best_ec:
        best_t, best_ec = grid[k], ec[k]
    best = epsilon_effective_capacity(samples, QosPair(theta_delay, best_t), n)
    return ReliabilityOptimum(
        theta_err=float(best_t),
        ec=float(best.ec),
        ec_stderr=float(best.ec_stderr),
        grid=grid,
        grid_ec=ec,
        grid_stderr=se,
        unimodal=is_unimodal(ec, 3.0 * se),
    )


def theta_limit_ec(channel, theta_err: float, n: int, mc: MonteCarloSpec | None = None) -> float:
    """``(1 - eps) * E[R*]``: the small-``theta_delay`` limit of EC in bits."""
    samples = resolve_samples(channel, mc)
    rates = service_rates(samples, theta_err, n)
    return float(-math.expm1(-n * theta_err) * rates.mean())
