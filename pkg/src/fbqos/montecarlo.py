"""Seeded Monte Carlo engine over channel realizations.

All estimators draw from the counter-based streams in :mod:`fbqos.channel`.
The same ``(config, spec)`` always yields the same realization sequence, which
is what makes common-random-number comparisons across parameters possible.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import (
    ChannelConfig,
    ChannelRealization,
    batch_gram_eigenvalues,
    sample_matrices,
)
from .errors import DomainError, MonteCarloError
from .numerics import log_mean_exp


@dataclass(frozen=True)
class MonteCarloSpec:
    samples: int = 10_000
    seed: int = 0
    antithetic: bool = False

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 2:
            raise DomainError(f"samples must be an integer >= 2, got {self.samples!r}")
        object.__setattr__(self, "samples", int(self.samples))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    def joint_stderr(self, other: "MonteCarloEstimate") -> float:
        return math.hypot(self.stderr, other.stderr)


def summarize(values, spec: MonteCarloSpec, **diagnostics) -> MonteCarloEstimate:
    values = np.asarray(values, dtype=float)
    n = values.size
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MonteCarloEstimate(float(values.mean()), stderr, n, spec.seed, dict(diagnostics))


def _partitions(total, workers):
    workers = max(1, min(int(workers), total))
    edges = np.linspace(0, total, workers + 1).astype(int)
    return list(zip(edges[:-1], edges[1:]))


def evaluate(functional, config: ChannelConfig, spec: MonteCarloSpec,
             workers: int = 1, vectorized: bool = False) -> np.ndarray:
    """Per-realization values of ``functional``, in realization-index order.

    With ``vectorized=True`` the functional receives a stack of matrices
    ``(N, n_rx, n_tx)``; otherwise it receives one :class:`ChannelRealization`
    at a time. The result does not depend on ``workers``.
    """

    def run(bounds):
        start, stop = bounds
        mats = sample_matrices(config, spec.seed, start, stop, spec.antithetic)
        if vectorized:
            try:
                return np.asarray(functional(mats), dtype=float).reshape(stop - start)
            except MonteCarloError:
                raise
            except Exception:
                # replay one by one to locate the failing index
                for i, m in enumerate(mats):
                    try:
                        functional(m[None])
                    except Exception as exc:
                        raise MonteCarloError(f"functional failed: {exc!r}", start + i) from exc
                raise
        out = np.empty(stop - start)
        for i, m in enumerate(mats):
            try:
                out[i] = functional(ChannelRealization(m, config.large_scale))
            except Exception as exc:
                raise MonteCarloError(f"functional failed: {exc!r}", start + i) from exc
        return out

    parts = _partitions(spec.samples, workers)
    if len(parts) == 1:
        return run(parts[0])
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        return np.concatenate(list(pool.map(run, parts)))


def estimate(functional, config: ChannelConfig, spec: MonteCarloSpec,
             workers: int = 1, vectorized: bool = False) -> MonteCarloEstimate:
    """Mean and standard error of ``functional`` over the seeded stream."""
    return summarize(evaluate(functional, config, spec, workers, vectorized), spec)


def log_mean_estimate(log_values, spec: MonteCarloSpec) -> MonteCarloEstimate:
    """Stabilized ``log(mean(exp(log_values)))`` with a delta-method stderr."""
    value, stderr = log_mean_exp(log_values)
    return MonteCarloEstimate(value, stderr, int(np.size(log_values)), spec.seed)


def log_domain_estimate(log_functional, config: ChannelConfig, spec: MonteCarloSpec,
                        workers: int = 1, vectorized: bool = False) -> MonteCarloEstimate:
    """Log of the mean of ``exp(log_functional)`` over realizations."""
    values = evaluate(log_functional, config, spec, workers, vectorized)
    return log_mean_estimate(values, spec)


@lru_cache(maxsize=64)
def _cached_eigenvalues(config, samples, seed, antithetic):
    chunks = []
    step = 1 << 16
    for start in range(0, samples, step):
        stop = min(start + step, samples)
        chunks.append(batch_gram_eigenvalues(sample_matrices(config, seed, start, stop, antithetic)))
    eig = np.concatenate(chunks)
    eig.setflags(write=False)
    return eig


def eigenvalue_samples(config: ChannelConfig, spec: MonteCarloSpec) -> np.ndarray:
    """Read-only ``(samples, min(n_tx, n_rx))`` array of descending Gram spectra.

    Cached per ``(config, spec)``, so repeated calls share common random numbers.
    """
    return _cached_eigenvalues(config, spec.samples, spec.seed, spec.antithetic)


def _log_eigen_products(config, spec):
    eig = eigenvalue_samples(config, spec)
    with np.errstate(divide="ignore"):
        logs = np.log(eig).sum(axis=1)
    finite = np.isfinite(logs)
    return logs[finite], int((~finite).sum())


def log_eigen_product(config: ChannelConfig, spec: MonteCarloSpec) -> MonteCarloEstimate:
    """Mean of ``sum_i log(lambda_i)`` over eigenvalue samples."""
    logs, excluded = _log_eigen_products(config, spec)
    return summarize(logs, spec, excluded_zero_eigenvalue=excluded)


def variance_of_log_eigen_product(config: ChannelConfig, spec: MonteCarloSpec) -> MonteCarloEstimate:
    """Sample variance of ``log(prod_i lambda_i * SNR)``.

    The SNR factor only shifts the log by a constant, so the variance is taken
    over ``sum_i log(lambda_i)`` and is identical for every SNR. Samples with a
    zero eigenvalue are dropped and counted in ``diagnostics``.
    """
    logs, excluded = _log_eigen_products(config, spec)
    n = logs.size
    if n < 2:
        raise DomainError("fewer than two finite log-eigenvalue samples")
    centered = logs - logs.mean()
    var = float(centered @ centered / (n - 1))
    m4 = float(np.mean(centered ** 4))
    stderr = math.sqrt(max(m4 - var * var, 0.0) / n)
    return MonteCarloEstimate(var, stderr, n, spec.seed, {"excluded_zero_eigenvalue": excluded})
