"""Discrete-time queue driven by the finite-blocklength service process.

Each block draws a fading state, serves ``n * max(R*, 0)`` bits unless the
codeword fails (probability ``exp(-n * theta_err)``, zero bits served, data
stays queued), and receives a constant ``arrival_rate`` bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelConfig
from .effective_capacity import service_rates
from .errors import DomainError
from .fbc_rate import FadingSamples
from .montecarlo import MonteCarloSpec

DEFAULT_QUANTILES = (0.9, 0.95, 0.99, 0.999)


@dataclass(frozen=True)
class QueueTrace:
    thresholds: np.ndarray
    overflow_probs: np.ndarray
    fitted_exponent: float
    blocks: int
    r_squared: float = float("nan")
    events: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def log_probs(self):
        with np.errstate(divide="ignore"):
            return np.log(self.overflow_probs)


def lindley(increments, q0: float = 0.0) -> np.ndarray:
    """Queue lengths ``q_k = max(0, q_{k-1} + x_k)`` for all ``k``.

    Uses ``q_k = S_k - min(0, min_{j<=k} S_j)`` on the partial sums ``S``.
    """
    s = np.cumsum(np.concatenate(([q0], np.asarray(increments, dtype=float))))
    low = np.minimum.accumulate(np.minimum(s, 0.0))
    return (s - low)[1:]


def fit_tail_exponent(thresholds, probs):
    """Least-squares slope of ``-log(prob)`` against threshold, and its R^2."""
    x = np.asarray(thresholds, dtype=float)
    y = -np.log(np.asarray(probs, dtype=float))
    if x.size < 2 or np.ptp(x) == 0:
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else float("nan")
    return float(slope), r2


def _service_bits(channel, theta_err, n, blocks, seed):
    if isinstance(channel, ChannelConfig):
        samples = FadingSamples.from_config(channel, MonteCarloSpec(blocks, seed))
        rates = service_rates(samples, theta_err, n)
    else:
        rates = np.resize(service_rates(channel, theta_err, n), blocks)
    rng = np.random.Generator(np.random.Philox(key=int(seed) % (1 << 64), counter=[0, 0, 0, 1]))
    fail = rng.random(blocks) < math.exp(-n * theta_err)
    return np.where(fail, 0.0, n * rates)


def simulate_queue(channel, arrival_rate: float, qos_err: float, n: int, blocks: int,
                   seed: int, warmup: float = 0.1, quantiles=DEFAULT_QUANTILES,
                   min_events: int = 50) -> QueueTrace:
    """Simulate ``blocks`` fading blocks and fit the queue-length tail exponent.

    ``channel`` is a :class:`ChannelConfig` (one fresh realization per block)
    or :class:`FadingSamples` (states reused cyclically, e.g. a deterministic
    stub). Thresholds are empirical quantiles of the post-warm-up queue; if
    fewer than two of them are positive, quantiles of the nonzero part are used instead.
    The exponent is in 1/bit and is fitted over thresholds with at least
    ``min_events`` exceedances.
    """
    if not arrival_rate >= 0:
        raise DomainError(f"arrival_rate must be nonnegative, got {arrival_rate!r}")
    if not 0 <= warmup < 1:
        raise DomainError(f"warmup must lie in [0, 1), got {warmup!r}")
    service = _service_bits(channel, qos_err, n, blocks, seed)
    queue = lindley(arrival_rate - service)[int(warmup * blocks):]

    levels = np.asarray(quantiles, dtype=float)
    busy = queue[queue > 0]
    thresholds = np.unique(np.quantile(queue, levels))
    thresholds, source = thresholds[thresholds > 0], "quantiles"
    if not busy.size:
        thresholds, source = np.zeros(1), "empty-queue"
    elif thresholds.size < 2:
        thresholds, source = np.unique(np.quantile(busy, levels)), "busy-quantiles"
    counts = np.array([(queue > t).sum() for t in thresholds], dtype=int)
    probs = counts / queue.size

    usable = counts >= min_events
    slope, r2 = fit_tail_exponent(thresholds[usable], probs[usable])
    diagnostics = {"threshold_source": source, "busy_fraction": busy.size / max(queue.size, 1),
                   "fitted_points": int(usable.sum())}
    if usable.sum() < 2:
        diagnostics["insufficient_events"] = True
    return QueueTrace(thresholds, probs, slope, blocks, r2, counts, diagnostics)
