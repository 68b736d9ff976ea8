"""Finite-blocklength statistical QoS for multi-antenna Rayleigh channels."""

__version__ = "0.1.0"

from .channel import ChannelConfig, ChannelRealization, average_snr, sample_channel
from .effective_capacity import (
    QosPair,
    epsilon_effective_capacity,
    log_mgf,
    optimal_reliability_exponent,
)
from .error_exponent import approx_error_exponent, error_exponent, gallager_e0
from .errors import (
    ConfigError,
    DegenerateEstimateError,
    DomainError,
    FbqosError,
    InfeasibleTargetError,
    InvalidMatrixError,
    MonteCarloError,
    NumericRangeError,
)
from .estimators import EffectiveCapacityEstimator, ErrorExponentEstimator, QosRegionClassifier
from .fbc_rate import FadingSamples, ergodic_capacity, q_function, q_inverse, solve_normal_approx_rate
from .montecarlo import MonteCarloEstimate, MonteCarloSpec
from .qos_region import RegionQuery, pareto_boundary, region_membership
from .queue_sim import simulate_queue

__all__ = [
    "ChannelConfig", "ChannelRealization", "average_snr", "sample_channel",
    "QosPair", "epsilon_effective_capacity", "log_mgf", "optimal_reliability_exponent",
    "approx_error_exponent", "error_exponent", "gallager_e0",
    "ConfigError", "DegenerateEstimateError", "DomainError", "FbqosError",
    "InfeasibleTargetError", "InvalidMatrixError", "MonteCarloError", "NumericRangeError",
    "EffectiveCapacityEstimator", "ErrorExponentEstimator", "QosRegionClassifier",
    "FadingSamples", "ergodic_capacity", "q_function", "q_inverse", "solve_normal_approx_rate",
    "MonteCarloEstimate", "MonteCarloSpec",
    "RegionQuery", "pareto_boundary", "region_membership",
    "simulate_queue",
]
