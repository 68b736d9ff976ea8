import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbqos.channel import ChannelConfig, ChannelRealization, EigenSample, gram_eigenvalues, sample_channel
from fbqos.errors import DomainError, InfeasibleTargetError
from fbqos.fbc_rate import (
    LOG2E,
    FadingSamples,
    conditional_capacity,
    conditional_dispersion,
    ergodic_capacity,
    error_prob_residual,
    expected_log2_chi2,
    high_snr_capacity,
    q_function,
    q_inverse,
    q_inverse_log,
    rate_from_reliability,
    solve_normal_approx_rate,
)
from fbqos.montecarlo import MonteCarloSpec


def test_q_function_examples():
    assert q_function(0.0) == 0.5
    assert q_function(8.0) < 1e-15
    assert q_inverse(q_function(1.5)) == pytest.approx(1.5, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(-30, 30))
def test_q_function_erfc_identity(x):
    ref = 0.5 * math.erfc(x / math.sqrt(2))
    assert q_function(x) == pytest.approx(ref, rel=1e-12)


def _bisect_qinv(p):
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if q_function(mid) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_q_inverse_examples():
    assert q_inverse(0.5) == 0.0
    assert q_inverse(0.975) == pytest.approx(_bisect_qinv(0.975), abs=1e-12)
    assert q_inverse(0.975) == pytest.approx(-1.959964, abs=1e-5)
    assert q_inverse(math.exp(-50)) == pytest.approx(10.0, rel=0.1)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-300, 1 - 1e-12))
def test_q_inverse_roundtrip(p):
    assert q_function(q_inverse(p)) == pytest.approx(p, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_q_inverse_domain(p):
    with pytest.raises(DomainError):
        q_inverse(p)


def test_q_inverse_log_far_tail():
    # exp(-2000) underflows; the log form does not
    assert q_inverse_log(-2000.0) == pytest.approx(math.sqrt(4000.0), rel=0.05)
    assert q_inverse_log(math.log(0.3)) == pytest.approx(q_inverse(0.3), rel=1e-12)


@pytest.mark.parametrize("n_theta", [15, 20, 50, 200])
def test_q_inverse_asymptotic(n_theta):
    assert q_inverse_log(-n_theta) == pytest.approx(math.sqrt(2 * n_theta), rel=0.1)


def test_q_inverse_asymptotic_is_loose_near_ten():
    # sqrt(2x) overshoots the exact quantile by about 14% at x = 10
    ratio = math.sqrt(20.0) / q_inverse_log(-10.0)
    assert 1.12 < ratio < 1.16


def test_conditional_capacity_examples():
    cfg = ChannelConfig(power=0.1, noise_power=0.1)  # SNR 1
    assert conditional_capacity(cfg, EigenSample(np.array([0.0]))) == 0.0
    assert conditional_capacity(cfg, EigenSample(np.array([1.0]))) == pytest.approx(1.0)
    assert conditional_capacity(ChannelConfig(power=0.0), EigenSample(np.array([3.0]))) == 0.0


def test_conditional_capacity_log_det_oracle():
    cfg = ChannelConfig.from_snr_db(10.0, 2, 2)
    snr = 10.0
    for idx in range(10):
        h = sample_channel(cfg, 5, idx).matrix
        _, logdet = np.linalg.slogdet(np.eye(2) + snr / 2 * h @ h.conj().T)
        e = gram_eigenvalues(ChannelRealization(h))
        assert conditional_capacity(cfg, e) == pytest.approx(logdet / math.log(2), abs=1e-9)


def test_conditional_dispersion_examples():
    cfg = ChannelConfig(power=0.1, noise_power=0.1)
    assert conditional_dispersion(cfg, EigenSample(np.array([0.0]))) == 0.0
    assert conditional_dispersion(cfg, EigenSample(np.array([1.0]))) == pytest.approx(0.75 * LOG2E ** 2)
    assert conditional_dispersion(cfg, EigenSample(np.array([1.0]))) == pytest.approx(1.5611, abs=1e-4)
    assert conditional_dispersion(cfg, EigenSample(np.array([1e12]))) == pytest.approx(2.0814, abs=1e-4)


def test_ergodic_capacity_zero_snr():
    est = ergodic_capacity(ChannelConfig(power=0.0), MonteCarloSpec(200, 0))
    assert est.mean == 0.0 and est.stderr == 0.0


def test_ergodic_capacity_high_sample_oracle():
    est = ergodic_capacity(ChannelConfig.from_snr_db(10.0), MonteCarloSpec(100_000, 1))
    # independent generator: |h|^2 is Exp(1)
    x = np.random.default_rng(2024).exponential(size=1_000_000)
    ref = np.log2(1 + 10 * x)
    ref_se = ref.std(ddof=1) / math.sqrt(ref.size)
    assert abs(est.mean - ref.mean()) < 3 * math.hypot(est.stderr, ref_se)


def test_ergodic_capacity_grows_with_rx():
    mc = MonteCarloSpec(20_000, 3)
    one = ergodic_capacity(ChannelConfig.from_snr_db(10.0, 1, 1), mc)
    two = ergodic_capacity(ChannelConfig.from_snr_db(10.0, 1, 2), mc)
    assert two.mean - one.mean > 3 * math.hypot(one.stderr, two.stderr)


def test_expected_log2_chi2_sampling_oracle():
    value = expected_log2_chi2(2)
    assert value == pytest.approx(0.167254, abs=1e-6)
    draws = np.log2(np.random.default_rng(7).chisquare(2, size=1_000_000))
    se = draws.std(ddof=1) / 1000.0
    assert abs(draws.mean() - value) < 3 * se


def test_high_snr_capacity_close_at_60db():
    cfg = ChannelConfig.from_snr_db(60.0, 2, 2)
    assert abs(high_snr_capacity(cfg) - ergodic_capacity(cfg, MonteCarloSpec(20_000, 1)).mean) < 0.1


def test_high_snr_gap_shrinks_with_snr():
    # common random numbers: the gap is a sample mean of log2 det(I/a + W), decreasing in a
    mc = MonteCarloSpec(20_000, 8)
    gaps = []
    for db in (40.0, 50.0, 60.0):
        cfg = ChannelConfig.from_snr_db(db, 2, 2)
        gaps.append(ergodic_capacity(cfg, mc).mean - high_snr_capacity(cfg))
    assert gaps[0] > gaps[1] > gaps[2]


def test_high_snr_capacity_scaling():
    a = high_snr_capacity(ChannelConfig.from_snr_db(30.0, 2, 2))
    b = high_snr_capacity(ChannelConfig(n_tx=2, n_rx=2, power=4 * 0.1 * 1e3, noise_power=0.1))
    assert b - a == pytest.approx(4.0, abs=1e-12)
    with pytest.raises(DomainError):
        high_snr_capacity(ChannelConfig(power=0.0))


def test_solver_stub_median():
    stub = FadingSamples.deterministic(3.0, 1.2)
    pt = solve_normal_approx_rate(stub, 200, 0.5)
    assert pt.rate == 3.0
    assert solve_normal_approx_rate(FadingSamples.deterministic(2.0, 0.0), 100, 0.3).rate == 2.0


def test_solver_large_n_approaches_capacity():
    cfg = ChannelConfig.from_snr_db(10.0)
    e = gram_eigenvalues(sample_channel(cfg, 1, 0))
    c, v = conditional_capacity(cfg, e), conditional_dispersion(cfg, e)
    pt = solve_normal_approx_rate(FadingSamples.deterministic(c, v), 10 ** 6, 1e-3)
    assert pt.rate == pytest.approx(c, rel=0.005)


def test_solver_grid_scan_oracle():
    cfg, mc = ChannelConfig.from_snr_db(10.0), MonteCarloSpec(10_000, 1)
    samples = FadingSamples.from_config(cfg, mc)
    pt = solve_normal_approx_rate(samples, 200, 1e-3)
    grid = np.linspace(0.0, 0.05, 2000)
    resid = np.array([error_prob_residual(samples, r, 200).mean() - 1e-3 for r in grid])
    root_cell = int(np.argmax(resid > 0))
    step = grid[1] - grid[0]
    assert grid[root_cell - 1] - step <= pt.rate <= grid[root_cell] + step
    assert abs(pt.residual) <= max(1e-6, 0.1 * pt.stderr)


def test_solver_monotone_in_eps():
    cfg, mc = ChannelConfig.from_snr_db(20.0, 2, 2), MonteCarloSpec(10_000, 1)
    rates = [solve_normal_approx_rate(cfg, 200, e, mc).rate for e in (1e-5, 1e-3, 1e-1)]
    assert rates[0] < rates[1] < rates[2]


def test_solver_errors():
    cfg, mc = ChannelConfig.from_snr_db(10.0), MonteCarloSpec(10_000, 1)
    with pytest.raises(InfeasibleTargetError):
        solve_normal_approx_rate(cfg, 200, 1e-5, mc)
    with pytest.raises(DomainError):
        solve_normal_approx_rate(cfg, 20, 0.1, mc)
    with pytest.raises(DomainError):
        solve_normal_approx_rate(cfg, 200, 1.0, mc)
    with pytest.raises(DomainError):
        solve_normal_approx_rate(cfg, 200, 0.1)


def test_solver_rate_below_capacity():
    cfg, mc = ChannelConfig.from_snr_db(10.0), MonteCarloSpec(10_000, 1)
    cap = ergodic_capacity(cfg, mc)
    assert 0 <= solve_normal_approx_rate(cfg, 200, 0.1, mc).rate <= cap.mean + 3 * cap.stderr


def test_rate_from_reliability_limits():
    n = 200
    near_half = math.log(2) / n * (1 + 1e-9)
    assert rate_from_reliability(4.0, 2.0, near_half, n) == pytest.approx(4.0, abs=1e-5)
    for t in (0.01, 0.1, 1.0):
        assert rate_from_reliability(4.0, 0.0, t, n) == 4.0
    with pytest.raises(DomainError):
        rate_from_reliability(4.0, 2.0, math.log(2) / n, n)
    with pytest.raises(DomainError):
        rate_from_reliability(4.0, -1.0, 0.1, n)


def test_rate_from_reliability_decreasing_and_convex():
    # -sqrt(V/n) * Qinv(exp(-n t)) behaves like -sqrt(2 V t): convex, not concave
    grid = np.linspace(0.01, 0.1, 10)
    r = rate_from_reliability(4.0, 2.0, grid, 200)
    assert np.all(np.diff(r) < 0)
    assert np.all(np.diff(r, 2) > 0)


@pytest.mark.parametrize("n_theta", [10, 20, 40, 100])
def test_rate_from_reliability_asymptotic(n_theta):
    n, c, v = 200, 4.0, 2.0
    t = n_theta / n
    assert rate_from_reliability(c, v, t, n) == pytest.approx(c - math.sqrt(2 * v * t), rel=0.1)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 20), st.floats(0.01, 5), st.floats(0.004, 0.2), st.integers(100, 1000))
def test_rate_from_reliability_consistency_loop(c, v, t, n):
    if n * t <= math.log(2) * 1.01:
        return
    r = rate_from_reliability(c, v, t, n)
    assert q_function((c - r) / math.sqrt(v / n)) == pytest.approx(math.exp(-n * t), rel=1e-9, abs=1e-300)
