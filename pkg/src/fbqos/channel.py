"""Quasi-static Rayleigh-fading MIMO link between a distributed transmit array and one device.

Path loss enters exactly once, through :func:`average_snr`. Realizations hold the
unit-variance small-scale matrix ``G``; the large-scale coefficient is folded
into the average SNR rather than into the matrix.

Random numbers come from counter-based Philox streams. Realization ``index``
lives in block ``index // BLOCK_SIZE``, and every block owns a disjoint counter
range keyed by the seed, so any slice of the realization sequence can be
regenerated independently of how the work was partitioned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InvalidMatrixError

BLOCK_SIZE = 1024


@dataclass(frozen=True)
class ChannelConfig:
    """Per-user physical parameters.

    ``power`` and ``noise_power`` are linear (watts), ``distance`` in meters.
    ``large_scale`` is the optional fading multiplier on the average SNR.
    """

    n_tx: int = 1
    n_rx: int = 1
    power: float = 1.0
    distance: float = 1.0
    path_exponent: float = 0.0
    noise_power: float = 0.1
    large_scale: float = 1.0

    def __post_init__(self):
        if int(self.n_tx) != self.n_tx or self.n_tx < 1:
            raise DomainError(f"n_tx must be a positive integer, got {self.n_tx!r}")
        if int(self.n_rx) != self.n_rx or self.n_rx < 1:
            raise DomainError(f"n_rx must be a positive integer, got {self.n_rx!r}")
        if not self.power >= 0:
            raise DomainError(f"power must be nonnegative, got {self.power!r}")
        if not self.distance > 0:
            raise DomainError(f"distance must be positive, got {self.distance!r}")
        if not self.path_exponent >= 0:
            raise DomainError(f"path_exponent must be nonnegative, got {self.path_exponent!r}")
        if not self.noise_power > 0:
            raise DomainError(f"noise_power must be positive, got {self.noise_power!r}")
        if not self.large_scale > 0:
            raise DomainError(f"large_scale must be positive, got {self.large_scale!r}")
        object.__setattr__(self, "n_tx", int(self.n_tx))
        object.__setattr__(self, "n_rx", int(self.n_rx))

    @classmethod
    def from_snr_db(cls, snr_db, n_tx=1, n_rx=1, noise_power=0.1):
        """Unit-distance configuration whose average SNR is ``snr_db``."""
        power = noise_power * 10.0 ** (snr_db / 10.0)
        return cls(n_tx=n_tx, n_rx=n_rx, power=power, noise_power=noise_power)

    @property
    def n_modes(self) -> int:
        return min(self.n_tx, self.n_rx)

    @property
    def shape(self):
        return (self.n_rx, self.n_tx)


@dataclass(frozen=True)
class ChannelRealization:
    """Small-scale fading matrix ``G`` (n_rx x n_tx) of one coherence block."""

    matrix: np.ndarray
    large_scale: float = 1.0


@dataclass(frozen=True)
class EigenSample:
    """Nonzero spectrum of the Gram matrix, sorted descending."""

    eigenvalues: np.ndarray


def average_snr(config: ChannelConfig) -> float:
    """Linear average SNR, ``xi * P * d**(-tau) / sigma**2``."""
    return (
        config.large_scale
        * config.power
        * config.distance ** (-config.path_exponent)
        / config.noise_power
    )


def _block_matrices(shape, seed, block, antithetic):
    key = int(seed) % (1 << 64)
    bitgen = np.random.Philox(key=key, counter=[0, 0, int(block), 0])
    rng = np.random.Generator(bitgen)
    n_rx, n_tx = shape
    if antithetic:
        half = rng.standard_normal((BLOCK_SIZE // 2, n_rx, n_tx, 2))
        draws = np.empty((BLOCK_SIZE, n_rx, n_tx, 2))
        draws[0::2] = half
        draws[1::2] = -half
    else:
        draws = rng.standard_normal((BLOCK_SIZE, n_rx, n_tx, 2))
    return (draws[..., 0] + 1j * draws[..., 1]) * np.sqrt(0.5)


def sample_matrices(config: ChannelConfig, seed: int, start: int, stop: int,
                    antithetic: bool = False) -> np.ndarray:
    """Fading matrices for realization indices ``start <= index < stop``.

    Returns a complex array of shape ``(stop - start, n_rx, n_tx)``.
    """
    if start < 0 or stop < start:
        raise DomainError(f"invalid index range [{start}, {stop})")
    out = np.empty((stop - start,) + config.shape, dtype=complex)
    if stop == start:
        return out
    first, last = start // BLOCK_SIZE, (stop - 1) // BLOCK_SIZE
    pos = 0
    for block in range(first, last + 1):
        mats = _block_matrices(config.shape, seed, block, antithetic)
        lo = max(start - block * BLOCK_SIZE, 0)
        hi = min(stop - block * BLOCK_SIZE, BLOCK_SIZE)
        out[pos:pos + hi - lo] = mats[lo:hi]
        pos += hi - lo
    return out


def sample_channel(config: ChannelConfig, seed: int, index: int,
                   antithetic: bool = False) -> ChannelRealization:
    mat = sample_matrices(config, seed, index, index + 1, antithetic)[0]
    return ChannelRealization(matrix=mat, large_scale=config.large_scale)


def batch_gram_eigenvalues(matrices: np.ndarray) -> np.ndarray:
    """Descending nonzero Gram spectra for a stack of matrices ``(N, r, t)``.

    Works on the smaller of ``H H^H`` and ``H^H H`` with a Hermitian solver.
    """
    matrices = np.asarray(matrices)
    if matrices.ndim == 2:
        matrices = matrices[None]
    if not np.all(np.isfinite(matrices)):
        raise InvalidMatrixError("channel matrix has non-finite entries")
    n_rx, n_tx = matrices.shape[-2:]
    if n_rx <= n_tx:
        gram = matrices @ np.conj(np.swapaxes(matrices, -1, -2))
    else:
        gram = np.conj(np.swapaxes(matrices, -1, -2)) @ matrices
    try:
        eig = np.linalg.eigvalsh(gram)
    except np.linalg.LinAlgError as exc:
        raise InvalidMatrixError(f"eigen-solver failed: {exc}") from exc
    # eigvalsh can return tiny negative values for PSD input
    return np.maximum(eig[..., ::-1], 0.0)


def gram_eigenvalues(r: ChannelRealization) -> EigenSample:
    return EigenSample(eigenvalues=batch_gram_eigenvalues(r.matrix)[0])


def eigen_snrs(config: ChannelConfig, e) -> np.ndarray:
    """Per-eigenmode SNRs ``(SNR / n_tx) * lambda_i``, order preserved.

    ``e`` is an :class:`EigenSample` or an array of eigenvalues of any shape.
    """
    lam = e.eigenvalues if isinstance(e, EigenSample) else np.asarray(e, dtype=float)
    return (average_snr(config) / config.n_tx) * lam


def snr_db_to_linear(snr_db):
    return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


def linear_to_db(snr: float | Sequence[float]):
    return 10.0 * np.log10(snr)
