"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import math

import numpy as np
import pytest
from scipy.stats import spearmanr

from fbqos import cli
from fbqos.channel import ChannelConfig
from fbqos.effective_capacity import (
    QosPair,
    delay_exponent_per_bit,
    ec_sweep,
    epsilon_effective_capacity,
    log_mgf,
    log_mgf_estimate,
    min_reliability_exponent,
    optimal_reliability_exponent,
    theta_limit_ec,
)
from fbqos.error_exponent import approx_error_exponent, error_exponent, gallager_e0
from fbqos.fbc_rate import FadingSamples, ergodic_capacity, error_prob_residual, rate_from_reliability, \
    solve_normal_approx_rate
from fbqos.montecarlo import MonteCarloSpec
from fbqos.numerics import is_unimodal
from fbqos.qos_region import (
    RegionQuery,
    high_snr_region_limit,
    pareto_boundary,
    region_membership,
    stub_boundary,
)
from fbqos.queue_sim import simulate_queue

N = 200
MC = MonteCarloSpec(10_000, 1)
SISO10 = ChannelConfig.from_snr_db(10.0)


def test_01_gallager_zero_point(report):
    worst = 0.0
    for shape in ((1, 1), (2, 2)):
        for db in (10.0, 20.0, 30.0):
            cfg = ChannelConfig.from_snr_db(db, *shape)
            for n in (100, 200, 500):
                worst = max(worst, abs(gallager_e0(cfg, 0.0, n, MC)))
    ok = worst <= 1e-9
    assert report(1, "E0(rho=0) = 0", ok, f"max |E0(0)| = {worst:.3g} over 18 configs")


def test_02_exponent_monotonicity(report):
    cap = ergodic_capacity(SISO10, MC).mean
    rates = np.linspace(0.2, 0.95, 10) * cap
    res = [error_exponent(SISO10, r, N, MC) for r in rates]
    bad = sum(1 for a, b in zip(res, res[1:])
              if b.theta_err - a.theta_err > 3 * math.hypot(a.stderr, b.stderr))
    base = error_exponent(SISO10, 0.5 * cap, N, MC)
    seps = []
    for other in (ChannelConfig.from_snr_db(10.0, 4, 1), ChannelConfig.from_snr_db(20.0)):
        r = error_exponent(other, 0.5 * cap, N, MC)
        seps.append((r.theta_err - base.theta_err) / math.hypot(r.stderr, base.stderr))
    ok = bad == 0 and min(seps) > 3
    assert report(2, "exponent monotone in rate; grows with N_T and SNR", ok,
                  f"{bad} rate-grid violations; separations {seps[0]:.1f}, {seps[1]:.1f} joint stderr")


def test_03_approximation_consistency(report):
    cap = ergodic_capacity(SISO10, MC).mean
    at_cap = approx_error_exponent(SISO10, cap, N, MC, capacity=cap)
    small, large = (approx_error_exponent(SISO10, 0.5 * cap, n, MC, capacity=cap) for n in (100, 10_000))
    cfg30 = ChannelConfig.from_snr_db(30.0)
    cap30 = ergodic_capacity(cfg30, MC).mean
    rates = np.linspace(0.2, 0.95, 10) * cap30
    exact = [error_exponent(cfg30, r, N, MC).theta_err for r in rates]
    approx = [approx_error_exponent(cfg30, r, N, MC, capacity=cap30) for r in rates]
    rho = spearmanr(exact, approx).statistic
    ok = at_cap == 0.0 and large < small / 50 and rho >= 0.9
    assert report(3, "approximate exponent limits and ordering", ok,
                  f"value at C = {at_cap}; n=1e4/n=1e2 ratio = {large / small:.4f}; rank corr = {rho:.3f}")


def test_04_rate_concavity_and_asymptotic(report):
    c, v = 4.0, 2.0
    grid = np.linspace(0.01, 0.1, 20)
    second = np.diff(rate_from_reliability(c, v, grid, N), 2)
    concave = bool(np.all(second <= 1e-9))
    tail = np.linspace(10.0 / N, 100.0 / N, 20)
    exact = rate_from_reliability(c, v, tail, N)
    approx = c - np.sqrt(2 * v * tail)
    rel = float(np.max(np.abs(exact - approx) / np.abs(approx)))
    ok = concave and rel <= 0.1
    assert report(4, "rate concave in theta_err; matches C - sqrt(2 V theta_err)", ok,
                  f"max second difference = {second.max():.3g} (needs <= 1e-9); "
                  f"max relative gap for n*theta_err >= 10 = {rel:.3f}")


def test_05_log_mgf_midpoint_convexity(report):
    samples = FadingSamples.from_config(SISO10, MC)
    rng = np.random.default_rng(2024)
    lo = min_reliability_exponent(N)

    def draw():
        return QosPair(float(np.exp(rng.uniform(np.log(1e-3), 0.0))), float(rng.uniform(lo, 1.0)))

    violations, worst = 0, 0.0
    for _ in range(100):
        p, q = draw(), draw()
        mid = QosPair(0.5 * (p.theta_delay + q.theta_delay), 0.5 * (p.theta_err + q.theta_err))
        ep, eq, em = (log_mgf_estimate(samples, x, N) for x in (p, q, mid))
        gap = em.mean - 0.5 * (ep.mean + eq.mean)
        tol = 3 * math.sqrt(em.stderr ** 2 + 0.25 * (ep.stderr ** 2 + eq.stderr ** 2))
        if gap > tol:
            violations += 1
            worst = max(worst, gap)
    ok = violations == 0
    assert report(5, "log-MGF jointly midpoint-convex", ok,
                  f"{violations}/100 pairs exceed 3 combined stderr (largest excess gap {worst:.3g})")


def test_06_quasi_concavity_and_ridge(report):
    samples = FadingSamples.from_config(SISO10, MC)
    grid = np.geomspace(min_reliability_exponent(N), 1.0, 41)
    thetas = np.geomspace(1e-3, 1.0, 5)
    unimodal, located, ridge = [], [], []
    for theta in thetas:
        ec, se = ec_sweep(samples, theta, N, grid)
        unimodal.append(is_unimodal(ec, 3 * se))
        k = int(np.argmax(ec))
        opt = optimal_reliability_exponent(samples, theta, N)
        located.append(grid[max(k - 1, 0)] <= opt.theta_err <= grid[min(k + 1, grid.size - 1)])
        ridge.append(opt.ec)
    decreasing = bool(np.all(np.diff(ridge) <= 0))
    ok = all(unimodal) and all(located) and decreasing
    assert report(6, "EC unimodal in theta_err; optimum located; ridge decreasing", ok,
                  f"unimodal {sum(unimodal)}/5, located {sum(located)}/5, ridge decreasing = {decreasing}")


def test_07_definition_limits(report):
    r0 = 2.5
    stub = FadingSamples.deterministic(r0, 0.0)
    exact = all(epsilon_effective_capacity(stub, QosPair(t, 20.0), N).ec == r0 for t in (1e-3, 0.1, 1.0))
    samples = FadingSamples.from_config(SISO10, MC)
    rel = abs(epsilon_effective_capacity(samples, QosPair(1e-5, 0.03), N).ec
              / theta_limit_ec(samples, 0.03, N) - 1)
    ok = exact and rel <= 0.01
    assert report(7, "EC limits (error-free stub, small theta)", ok,
                  f"stub EC == R0: {exact}; small-theta relative gap {rel:.2e}")


def test_08_region_geometry(report):
    stub = FadingSamples.deterministic(2.0, 0.0)
    query = RegionQuery(-1.0, N)
    curve = pareto_boundary(stub, query, np.geomspace(0.003, 1.0, 20))
    stub_err = float(np.max(np.abs(curve.theta_err - stub_boundary(2.0, curve.theta_delay, query))))

    samples = FadingSamples.from_config(SISO10, MC)
    mc_curve = pareto_boundary(samples, query, np.geomspace(0.005, 1.0, 40))
    rng = np.random.default_rng(8)
    bad_mid = 0
    for _ in range(50):
        i, j = rng.choice(len(mc_curve), 2, replace=False)
        m = region_membership(samples, QosPair(*(0.5 * (mc_curve.points[i] + mc_curve.points[j]))), query)
        bad_mid += m.margin > 3 * m.stderr

    tight, loose = RegionQuery(-2.0, N), RegionQuery(-1.0, N)
    probes = zip(np.exp(rng.uniform(np.log(1e-3), 0.0, 20)), rng.uniform(min_reliability_exponent(N), 0.5, 20))
    nest_bad = sum(region_membership(samples, QosPair(t, e), tight).member
                   and not region_membership(samples, QosPair(t, e), loose).member for t, e in probes)
    ok = len(curve) > 0 and stub_err <= 1e-6 and bad_mid == 0 and nest_bad == 0
    assert report(8, "region boundary, convexity, nesting", ok,
                  f"stub max error {stub_err:.2e}; midpoint failures {bad_mid}/50; nesting failures {nest_bad}/20")


def test_09_high_snr_collapse(report):
    grid = [(t, e) for t in (0.01, 0.1, 1.0) for e in (0.005, 0.01, 0.05, 0.2)]
    rem = {}
    for db in (50.0, 70.0):
        s = FadingSamples.from_config(ChannelConfig.from_snr_db(db), MC)
        rem[db] = np.array([abs(log_mgf(s, QosPair(t, e), N) + N * e) for t, e in grid])
    pointwise = bool(np.all(rem[70.0] <= rem[50.0]))

    query = RegionQuery(-2.0, N)
    thetas = np.array([0.01, 0.1, 1.0])
    line = high_snr_region_limit(query)
    dev = {}
    for db in (30.0, 60.0):
        s = FadingSamples.from_config(ChannelConfig.from_snr_db(db), MC)
        c = pareto_boundary(s, query, thetas)
        dev[db] = float(np.max(np.abs(c.theta_err - line)))
    ok = pointwise and dev[60.0] < dev[30.0]
    assert report(9, "high-SNR remainder and boundary collapse", ok,
                  f"remainder non-increasing 50->70 dB: {pointwise}; "
                  f"line deviation 30 dB {dev[30.0]:.2e} vs 60 dB {dev[60.0]:.2e}")


def test_10_normal_approximation_solver(report):
    samples = FadingSamples.from_config(SISO10, MC)
    pt = solve_normal_approx_rate(samples, N, 1e-3)
    resid_ok = abs(pt.residual) <= max(1e-6, 0.1 * pt.stderr)
    stub_ok = solve_normal_approx_rate(FadingSamples.deterministic(3.0, 1.2), N, 0.5).rate == 3.0
    grid = np.linspace(0.0, 0.05, 2000)
    resid = np.array([error_prob_residual(samples, r, N).mean() - 1e-3 for r in grid])
    k = int(np.argmax(resid > 0))
    grid_ok = abs(pt.rate - 0.5 * (grid[k - 1] + grid[k])) <= grid[1] - grid[0]
    ok = resid_ok and stub_ok and grid_ok
    assert report(10, "normal-approximation solver", ok,
                  f"residual {pt.residual:.2e} (stderr {pt.stderr:.2e}); stub R=C: {stub_ok}; "
                  f"grid-scan agreement: {grid_ok}")


def test_11_queue_large_deviations(report):
    theta = 0.01
    samples = FadingSamples.from_config(SISO10, MC)
    opt = optimal_reliability_exponent(samples, theta, N)
    target = delay_exponent_per_bit(theta)
    ratios, fits = [], []
    for seed in (1, 2, 3):
        tr = simulate_queue(SISO10, 0.9 * N * opt.ec, opt.theta_err, N, 1_000_000, seed)
        ratios.append(tr.fitted_exponent / target)
        fits.append(tr.r_squared)
    ok = min(ratios) >= 0.9 and min(fits) >= 0.95
    assert report(11, "queue tail exponent at 0.9 n EC", ok,
                  "fitted/target " + ", ".join(f"{r:.3f}" for r in ratios)
                  + "; R^2 " + ", ".join(f"{f:.4f}" for f in fits))


CLI_CONFIG = """
[channel]
snr_db = 10
[mc]
samples = 4000
seed = 7
[experiment]
blocklength = 200
[grids]
rate_fractions = linspace(0.2, 0.95, 6)
theta_delay = logspace(0.001, 1, 4)
theta_err = 0.01, 0.03, 0.1
levels = -2, -1
eps = 0.001, 0.1
[queue]
theta_delay = 0.01
blocks = 100000
seeds = 1, 2
"""


def test_12_cli_reproducibility(report, tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(CLI_CONFIG)
    identical = []
    for command in cli.COMMANDS:
        for fmt in ("csv", "json"):
            outs = []
            for run in ("a", "b"):
                out = tmp_path / f"{command}.{run}.{fmt}"
                assert cli.main([command, "--config", str(cfg), "--out", str(out), "--format", fmt]) == 0
                outs.append(out.read_bytes())
            identical.append(outs[0] == outs[1])
    ok = all(identical)
    assert report(12, "CLI byte-identical reruns", ok, f"{sum(identical)}/{len(identical)} command/format pairs")
