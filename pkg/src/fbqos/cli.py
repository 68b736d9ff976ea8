"""Command-line front end: config file in, CSV/JSON table out.

Exit codes: 0 success, 2 configuration error, 3 numeric-range error,
4 infeasible target.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .config import ExperimentConfig, load
from .effective_capacity import (
    QosPair,
    delay_exponent_per_bit,
    epsilon_effective_capacity,
    optimal_reliability_exponent,
)
from .error_exponent import approx_error_exponent, error_exponent
from .errors import ConfigError, DomainError, InfeasibleTargetError, NumericRangeError
from .fbc_rate import FadingSamples, ergodic_capacity, solve_normal_approx_rate
from .qos_region import RegionQuery, pareto_boundary, region_membership
from .queue_sim import simulate_queue

EXIT_CONFIG, EXIT_NUMERIC, EXIT_INFEASIBLE = 2, 3, 4


class Table:
    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []
        self.notes = []

    def add(self, **values):
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns {sorted(unknown)}")
        self.rows.append([values.get(c) for c in self.columns])


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(f"{float(x):.17g}")
        return None if math.isnan(x) or math.isinf(x) else x
    return x


def _meta(command, cfg: ExperimentConfig, argv_extra):
    return {
        "tool": "fbqos",
        "version": __version__,
        "command": command,
        "config_sha256": cfg.digest(),
        "seed": cfg.mc.seed,
        "samples": cfg.mc.samples,
        "blocklength": cfg.blocklength,
        "packet_size_bits": cfg.packet_size_bits,
        **argv_extra,
    }


def render(table: Table, meta: dict, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "meta": {k: _json_value(v) for k, v in meta.items()},
            "notes": table.notes,
            "columns": table.columns,
            "rows": [[_json_value(v) for v in row] for row in table.rows],
        }
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {_fmt(value)}\n")
    for note in table.notes:
        buf.write(f"# note: {note}\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def cmd_exponent_curve(cfg: ExperimentConfig, args) -> Table:
    n, ch, mc = cfg.blocklength, cfg.channel, cfg.mc
    cap = ergodic_capacity(ch, mc)
    if "rates" in cfg.grids:
        rates = cfg.grids["rates"]
    elif "rate_fractions" in cfg.grids:
        rates = cfg.grids["rate_fractions"] * cap.mean
    else:
        raise ConfigError("[grids] rates or rate_fractions is required for exponent-curve")
    if np.any(rates > cap.mean):
        raise ConfigError(f"rate grid exceeds the capacity estimate {cap.mean:.6g} bits/use")
    table = Table(["rate", "theta_err_exact", "theta_err_approx", "rho_star", "stderr"])
    table.notes.append(f"capacity_bits={_fmt(cap.mean)} capacity_stderr={_fmt(cap.stderr)}")
    table.notes.append("units: rate bits/use; exponents nats/use")
    for r in rates:
        res = error_exponent(ch, float(r), n, mc)
        approx = approx_error_exponent(ch, float(r), n, mc, capacity=cap.mean)
        table.add(rate=r, theta_err_exact=res.theta_err, theta_err_approx=approx,
                  rho_star=res.rho_star, stderr=res.stderr)
    return table


def cmd_ec_surface(cfg: ExperimentConfig, args) -> Table:
    n = cfg.blocklength
    samples = FadingSamples.from_config(cfg.channel, cfg.mc)
    thetas, terrs = cfg.grid("theta_delay"), cfg.grid("theta_err")
    table = Table(["kind", "theta_delay", "theta_err", "ec", "log_mgf", "ec_stderr"])
    table.notes.append("units: ec bits/use; log_mgf nats")
    ridge = []
    for theta in thetas:
        best = None
        for t in terrs:
            p = epsilon_effective_capacity(samples, QosPair(theta, t), n)
            table.add(kind="surface", theta_delay=theta, theta_err=t, ec=p.ec,
                      log_mgf=p.log_mgf, ec_stderr=p.ec_stderr)
            if best is None or p.ec > best.ec:
                best = p
        ridge.append(best)
    for p in ridge:
        table.add(kind="ridge", theta_delay=p.qos.theta_delay, theta_err=p.qos.theta_err,
                  ec=p.ec, log_mgf=p.log_mgf, ec_stderr=p.ec_stderr)
    return table


def cmd_pareto(cfg: ExperimentConfig, args) -> Table:
    n = cfg.blocklength
    samples = FadingSamples.from_config(cfg.channel, cfg.mc)
    thetas, levels = cfg.grid("theta_delay"), cfg.grid("levels")
    table = Table(["level", "kind", "theta_delay", "theta_err", "lambda_residual", "member", "n_roots"])
    for u in levels:
        query = RegionQuery(float(u), n)
        curve = pareto_boundary(samples, query, thetas, theta_err_max=cfg.theta_err_max,
                                scan_points=cfg.scan_points)
        if len(curve) == 0:
            table.notes.append(f"empty boundary at level {_fmt(u)}")
        for theta in curve.omitted:
            table.notes.append(f"no boundary root at level {_fmt(u)} theta_delay {_fmt(theta)}")
        for (theta, t), res in zip(curve.points, curve.residuals):
            table.add(level=u, kind="boundary", theta_delay=theta, theta_err=t,
                      lambda_residual=res, n_roots=len(curve.roots[float(theta)]))
        if args.membership:
            for theta in thetas:
                for t in cfg.grid("theta_err"):
                    m = region_membership(samples, QosPair(theta, t), query)
                    table.add(level=u, kind="membership", theta_delay=theta, theta_err=t,
                              lambda_residual=m.margin, member=m.member)
    return table


def cmd_tradeoff(cfg: ExperimentConfig, args) -> Table:
    n = cfg.blocklength
    samples = FadingSamples.from_config(cfg.channel, cfg.mc)
    results = []
    for theta in cfg.grid("theta_delay"):
        opt = optimal_reliability_exponent(samples, float(theta), n, theta_err_max=cfg.theta_err_max)
        results.append((float(theta), opt))
    cols = ["theta_delay", "theta_err_opt", "epsilon_opt", "ec_opt", "ec_stderr", "unimodal"]
    if args.sweep == "eps":
        cols = ["epsilon_opt"] + [c for c in cols if c != "epsilon_opt"]
        results.sort(key=lambda r: math.exp(-n * r[1].theta_err))
    table = Table(cols)
    for theta, opt in results:
        table.add(theta_delay=theta, theta_err_opt=opt.theta_err,
                  epsilon_opt=math.exp(-n * opt.theta_err), ec_opt=opt.ec,
                  ec_stderr=opt.ec_stderr, unimodal=opt.unimodal)
    return table


def cmd_queue_validate(cfg: ExperimentConfig, args) -> Table:
    n, q = cfg.blocklength, cfg.queue
    if "theta_delay" not in q:
        raise ConfigError("[queue] theta_delay is required for queue-validate")
    theta = q["theta_delay"]
    fraction = q.get("arrival_fraction", 0.9)
    blocks = q.get("blocks", 1_000_000)
    seeds = q.get("seeds", (cfg.mc.seed,)) if args.seed is None else (cfg.mc.seed,)
    samples = FadingSamples.from_config(cfg.channel, cfg.mc)
    t_err = q.get("theta_err", "optimal")
    if t_err == "optimal":
        t_err = optimal_reliability_exponent(samples, theta, n, theta_err_max=cfg.theta_err_max).theta_err
    ec = epsilon_effective_capacity(samples, QosPair(theta, t_err), n).ec
    arrival = fraction * n * ec
    target = delay_exponent_per_bit(theta)
    table = Table(["kind", "seed", "threshold", "overflow_prob", "log_prob", "events",
                   "fitted_exponent", "target_exponent", "r_squared"])
    table.notes.append(f"theta_err={_fmt(t_err)} ec_bits={_fmt(ec)} arrival_bits_per_block={_fmt(arrival)}")
    table.notes.append("exponents per bit of queue length")
    for seed in seeds:
        trace = simulate_queue(cfg.channel, arrival, t_err, n, blocks, seed,
                               warmup=q.get("warmup", 0.1))
        for th, p, lp, ev in zip(trace.thresholds, trace.overflow_probs, trace.log_probs, trace.events):
            table.add(kind="trace", seed=seed, threshold=th, overflow_prob=p, log_prob=lp, events=ev)
        if trace.diagnostics.get("insufficient_events"):
            table.notes.append(f"seed {seed}: insufficient exceedance events, no exponent fitted")
            table.add(kind="summary", seed=seed, target_exponent=target)
        else:
            table.add(kind="summary", seed=seed, fitted_exponent=trace.fitted_exponent,
                      target_exponent=target, r_squared=trace.r_squared)
    return table


def cmd_rate_curve(cfg: ExperimentConfig, args) -> Table:
    samples = FadingSamples.from_config(cfg.channel, cfg.mc)
    blocklengths = cfg.grids.get("blocklengths", np.array([float(cfg.blocklength)]))
    table = Table(["blocklength", "eps", "rate", "residual", "stderr"])
    table.notes.append("units: rate bits/use")
    for n in blocklengths:
        if float(n) != int(n):
            raise ConfigError("[grids] blocklengths must be integers")
        for eps in cfg.grid("eps"):
            pt = solve_normal_approx_rate(samples, int(n), float(eps))
            table.add(blocklength=int(n), eps=eps, rate=pt.rate, residual=pt.residual, stderr=pt.stderr)
    return table


COMMANDS = {
    "exponent-curve": (cmd_exponent_curve, "error-rate exponent against coding rate"),
    "ec-surface": (cmd_ec_surface, "eps-effective capacity over a (theta_delay, theta_err) grid"),
    "pareto": (cmd_pareto, "feasible-region boundaries for each level u"),
    "tradeoff": (cmd_tradeoff, "EC-optimal reliability exponent for each delay exponent"),
    "queue-validate": (cmd_queue_validate, "queue simulation against the delay exponent"),
    "rate-curve": (cmd_rate_curve, "normal-approximation rate against n and eps"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config file (INI)")
    common.add_argument("--seed", type=int, help="override [mc] seed")
    common.add_argument("--samples", type=int, help="override [mc] samples")
    common.add_argument("--out", help="output path (default: [output] path, else stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="override [output] format")

    parser = argparse.ArgumentParser(prog="fbqos", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fbqos {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "pareto":
            p.add_argument("--membership", action="store_true",
                           help="also emit a membership grid over [grids] theta_err")
        if name == "tradeoff":
            p.add_argument("--sweep", choices=("theta", "eps"), default="theta",
                           help="order rows by delay exponent (default) or by optimal eps")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg = load(args.config).with_overrides(args.seed, args.samples, args.out, args.format)
        table = func(cfg, args)
        extra = {}
        if args.command == "tradeoff":
            extra["sweep"] = args.sweep
        text = render(table, _meta(args.command, cfg, extra), cfg.format)
    except (ConfigError, DomainError) as exc:
        print(f"fbqos: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericRangeError as exc:
        print(f"fbqos: numeric-range error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InfeasibleTargetError as exc:
        print(f"fbqos: infeasible target: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
