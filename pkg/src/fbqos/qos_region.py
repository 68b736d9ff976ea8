"""Feasible QoS region ``{(theta_delay, theta_err) : log_mgf <= u}`` and its boundary."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .effective_capacity import QosPair, log_mgf_estimate, min_reliability_exponent
from .errors import DomainError
from .fbc_rate import LN2, resolve_samples
from .montecarlo import MonteCarloSpec
from .numerics import bisect_sign_change


@dataclass(frozen=True)
class RegionQuery:
    level: float
    blocklength: int

    def __post_init__(self):
        if not self.level < 0:
            raise DomainError(f"region level u must be negative, got {self.level!r}")
        if int(self.blocklength) != self.blocklength or self.blocklength < 1:
            raise DomainError(f"blocklength must be a positive integer, got {self.blocklength!r}")


@dataclass(frozen=True)
class Membership:
    member: bool
    margin: float
    stderr: float

    @property
    def state(self) -> str:
        """``member``, ``non-member``, or ``undecidable`` (within 3 stderr of u)."""
        if abs(self.margin) < 3.0 * self.stderr:
            return "undecidable"
        return "member" if self.member else "non-member"

    def __bool__(self):
        return self.member


@dataclass(frozen=True)
class ParetoCurve:
    level: float
    blocklength: int
    points: np.ndarray
    residuals: np.ndarray
    roots: dict = field(default_factory=dict)
    omitted: tuple = ()

    @property
    def theta_delay(self):
        return self.points[:, 0]

    @property
    def theta_err(self):
        return self.points[:, 1]

    def __len__(self):
        return self.points.shape[0]


def region_membership(channel, qos: QosPair, query: RegionQuery,
                      mc: MonteCarloSpec | None = None) -> Membership:
    """Membership of ``qos`` in the closed sublevel set at level ``query.level``."""
    est = log_mgf_estimate(channel, qos, query.blocklength, mc)
    margin = est.mean - query.level
    return Membership(bool(margin <= 0.0), float(margin), float(est.stderr))


def pareto_boundary(channel, query: RegionQuery, theta_grid, mc: MonteCarloSpec | None = None,
                    theta_err_max: float = 1.0, scan_points: int = 64,
                    xtol: float = 1e-12) -> ParetoCurve:
    """Trace ``log_mgf(theta, theta_err) = u`` along ``theta_grid``.

    For every ``theta`` a geometric ``theta_err`` scan brackets the sign
    changes of ``log_mgf - u`` and each bracket is bisected. All roots are kept
    in ``roots``; the curve point is the smallest one. ``theta`` values with no
    root are listed in ``omitted``.
    """
    thetas = np.asarray(theta_grid, dtype=float)
    if thetas.ndim != 1 or thetas.size == 0:
        raise DomainError("theta_grid must be a nonempty 1-D sequence")
    if np.any(thetas <= 0) or np.any(np.diff(thetas) <= 0):
        raise DomainError("theta_grid must be positive and strictly increasing")
    n, u = query.blocklength, query.level
    samples = resolve_samples(channel, mc)
    scan = np.geomspace(min_reliability_exponent(n), theta_err_max, scan_points)

    points, residuals, roots, omitted = [], [], {}, []
    for theta in thetas:
        def excess(t, theta=theta):
            return log_mgf_estimate(samples, QosPair(theta, t), n).mean - u

        values = np.array([excess(t) for t in scan])
        found = [float(scan[i]) for i in np.flatnonzero(values == 0)]
        for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
            found.append(bisect_sign_change(excess, scan[i], scan[i + 1], values[i], xtol=xtol))
        if not found:
            omitted.append(float(theta))
            continue
        found.sort()
        roots[float(theta)] = found
        points.append((theta, found[0]))
        residuals.append(abs(excess(found[0])))
    pts = np.array(points, dtype=float).reshape(-1, 2)
    return ParetoCurve(u, n, pts, np.array(residuals), roots, tuple(omitted))


def high_snr_region_limit(query: RegionQuery) -> float:
    """Reliability exponent ``-u / n`` of the high-SNR boundary line.

    As SNR grows ``log_mgf -> -n * theta_err + O(1)``, so the boundary
    flattens to the horizontal line ``theta_err = -u / n`` independent of
    ``theta_delay``.
    """
    return -query.level / query.blocklength


def high_snr_member(qos: QosPair, query: RegionQuery) -> bool:
    """Membership under the high-SNR limit ``log_mgf = -n * theta_err``."""
    return -query.blocklength * qos.theta_err <= query.level


def ec_rate_guarantee(query: RegionQuery, theta_delay: float, bits: bool = False) -> float:
    """EC floor ``-u / (n * theta_delay)`` implied by membership at level ``u``.

    The floor is in nats per channel use; ``bits=True`` converts it to the
    unit :func:`fbqos.effective_capacity.epsilon_effective_capacity` reports.
    """
    if not theta_delay > 0:
        raise DomainError(f"theta_delay must be positive, got {theta_delay!r}")
    floor = -query.level / (query.blocklength * theta_delay)
    return floor / LN2 if bits else floor


def stub_boundary(capacity: float, theta_delay, query: RegionQuery):
    """Closed-form boundary for a deterministic channel with zero dispersion.

    Solves ``exp(-n t) (1 - b) + b = exp(u)`` with ``b = exp(-n theta C ln 2)``;
    returns NaN where no admissible solution exists.
    """
    n, u = query.blocklength, query.level
    theta = np.asarray(theta_delay, dtype=float)
    b = np.exp(-n * theta * capacity * LN2)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = -np.log((math.exp(u) - b) / (1.0 - b)) / n
    t = np.where(np.isfinite(t) & (n * t > LN2), t, np.nan)
    return float(t) if t.ndim == 0 else t
