"""Experiment configuration files (INI syntax, strict keys).

Example::

    [channel]
    n_tx = 1
    n_rx = 1
    snr_db = 10          ; or: power = 1.0
    noise_power = 0.1

    [mc]
    samples = 10000
    seed = 1

    [experiment]
    blocklength = 200

    [grids]
    theta_delay = logspace(1e-3, 1, 5)
    theta_err = 0.01, 0.02, 0.05

Grids are comma-separated numbers or ``linspace(a, b, num)`` /
``logspace(a, b, num)`` (the latter geometric between ``a`` and ``b``).
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .channel import ChannelConfig
from .errors import ConfigError, DomainError
from .montecarlo import MonteCarloSpec

SCHEMA = {
    "channel": {"n_tx", "n_rx", "power", "snr_db", "distance", "path_exponent",
                "noise_power", "large_scale"},
    "mc": {"samples", "seed", "antithetic"},
    "experiment": {"blocklength", "packet_size_bits", "users", "theta_err_max", "scan_points"},
    "grids": {"rates", "rate_fractions", "theta_delay", "theta_err", "levels",
              "blocklengths", "eps"},
    "queue": {"theta_delay", "theta_err", "arrival_fraction", "blocks", "seeds", "warmup"},
    "output": {"path", "format"},
}

GRID_KEYS = SCHEMA["grids"]
_SPACE = re.compile(r"^(linspace|logspace)\(\s*([^,]+),\s*([^,]+),\s*([^)]+)\)$")


@dataclass(frozen=True)
class ExperimentConfig:
    channel: ChannelConfig
    blocklength: int
    mc: MonteCarloSpec
    grids: dict = field(default_factory=dict)
    queue: dict = field(default_factory=dict)
    theta_err_max: float = 1.0
    scan_points: int = 64
    packet_size_bits: float = 1e10
    users: int = 1
    output_path: str | None = None
    format: str = "csv"

    def grid(self, name):
        try:
            return self.grids[name]
        except KeyError:
            raise ConfigError(f"[grids] {name} is required for this command") from None

    def with_overrides(self, seed=None, samples=None, out=None, fmt=None):
        mc = self.mc
        if seed is not None or samples is not None:
            mc = MonteCarloSpec(samples if samples is not None else mc.samples,
                                seed if seed is not None else mc.seed, mc.antithetic)
        return replace(self, mc=mc,
                       output_path=out if out is not None else self.output_path,
                       format=fmt if fmt is not None else self.format)

    def as_dict(self):
        d = asdict(self)
        d["grids"] = {k: [float(x) for x in v] for k, v in sorted(self.grids.items())}
        return d

    def digest(self) -> str:
        """SHA-256 of the numerical content; output routing is excluded."""
        d = self.as_dict()
        del d["output_path"], d["format"]
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


def _line_of(text, section, key=None):
    current = None
    for no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            if key is None and current == section:
                return no
        elif key is not None and current == section:
            name = re.split(r"[=:]", stripped, maxsplit=1)[0].strip().lower()
            if name == key:
                return no
    return None


def _where(text, section, key=None):
    no = _line_of(text, section, key)
    return f"line {no}: " if no else ""


def parse_grid(raw: str, name: str = "grid") -> np.ndarray:
    raw = raw.strip()
    m = _SPACE.match(raw)
    try:
        if m:
            kind, a, b, num = m.groups()
            a, b, num = float(a), float(b), int(num)
            if num < 1:
                raise ValueError("num must be positive")
            values = np.linspace(a, b, num) if kind == "linspace" else np.geomspace(a, b, num)
        else:
            values = np.array([float(x) for x in raw.split(",") if x.strip()])
    except ValueError as exc:
        raise ConfigError(f"cannot parse {name} = {raw!r}: {exc}") from None
    if values.size == 0:
        raise ConfigError(f"{name} is empty")
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"{name} has non-finite entries")
    if np.any(np.diff(values) <= 0):
        raise ConfigError(f"{name} must be sorted in strictly increasing order")
    return values


def _number(section, key, text, cast=float):
    raw = section[key]
    try:
        value = cast(float(raw)) if cast is int else cast(raw)
    except ValueError:
        raise ConfigError(f"{_where(text, section.name, key)}[{section.name}] {key} = {raw!r} is not a number") from None
    if cast is int and float(raw) != value:
        raise ConfigError(f"{_where(text, section.name, key)}[{section.name}] {key} must be an integer")
    return value


def loads(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    for name in parser.sections():
        if name not in SCHEMA:
            raise ConfigError(f"{_where(text, name)}unknown section [{name}]")
        for key in parser[name]:
            if key not in SCHEMA[name]:
                raise ConfigError(f"{_where(text, name, key)}unknown key {key!r} in [{name}]")

    ch = parser["channel"] if parser.has_section("channel") else {}
    chan_kw = {}
    for key, cast in (("n_tx", int), ("n_rx", int), ("distance", float), ("path_exponent", float),
                      ("noise_power", float), ("large_scale", float), ("power", float)):
        if key in ch:
            chan_kw[key] = _number(ch, key, text, cast)
    if "snr_db" in ch:
        if "power" in ch:
            raise ConfigError(f"{_where(text, 'channel', 'snr_db')}give either power or snr_db, not both")
        snr = 10.0 ** (_number(ch, "snr_db", text) / 10.0)
        probe = ChannelConfig(**{k: v for k, v in chan_kw.items()})
        chan_kw["power"] = (snr * probe.noise_power * probe.distance ** probe.path_exponent
                            / probe.large_scale)
    try:
        channel = ChannelConfig(**chan_kw)
    except DomainError as exc:
        raise ConfigError(f"[channel] {exc}") from None

    mcs = parser["mc"] if parser.has_section("mc") else {}
    try:
        mc = MonteCarloSpec(
            _number(mcs, "samples", text, int) if "samples" in mcs else 10_000,
            _number(mcs, "seed", text, int) if "seed" in mcs else 0,
            parser.getboolean("mc", "antithetic", fallback=False),
        )
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"[mc] {exc}") from None

    ex = parser["experiment"] if parser.has_section("experiment") else {}
    n = _number(ex, "blocklength", text, int) if "blocklength" in ex else 200
    if n < 1:
        raise ConfigError("[experiment] blocklength must be positive")
    extra = {}
    for key, cast in (("theta_err_max", float), ("scan_points", int),
                      ("packet_size_bits", float), ("users", int)):
        if key in ex:
            extra[key] = _number(ex, key, text, cast)

    grids = {}
    if parser.has_section("grids"):
        for key in parser["grids"]:
            grids[key] = parse_grid(parser["grids"][key], f"{_where(text, 'grids', key)}[grids] {key}")
    if "levels" in grids and np.any(grids["levels"] >= 0):
        raise ConfigError(f"{_where(text, 'grids', 'levels')}[grids] levels must be negative (u < 0)")
    if "theta_err" in grids and np.any(n * grids["theta_err"] <= math.log(2.0)):
        raise ConfigError(
            f"{_where(text, 'grids', 'theta_err')}[grids] theta_err must exceed ln2/n = {math.log(2.0) / n:.6g}"
        )
    for key in ("theta_delay", "rates", "rate_fractions"):
        if key in grids and np.any(grids[key] < 0 if key != "theta_delay" else grids[key] <= 0):
            raise ConfigError(f"{_where(text, 'grids', key)}[grids] {key} has out-of-range entries")
    if "eps" in grids and np.any((grids["eps"] <= 0) | (grids["eps"] >= 1)):
        raise ConfigError(f"{_where(text, 'grids', 'eps')}[grids] eps must lie in (0, 1)")

    queue = {}
    if parser.has_section("queue"):
        q = parser["queue"]
        for key, cast in (("theta_delay", float), ("arrival_fraction", float),
                          ("blocks", int), ("warmup", float)):
            if key in q:
                queue[key] = _number(q, key, text, cast)
        if "theta_err" in q:
            queue["theta_err"] = q["theta_err"].strip() if q["theta_err"].strip() == "optimal" \
                else _number(q, "theta_err", text)
        if "seeds" in q:
            try:
                queue["seeds"] = tuple(int(s) for s in q["seeds"].split(",") if s.strip())
            except ValueError:
                raise ConfigError(f"{_where(text, 'queue', 'seeds')}[queue] seeds must be integers") from None

    out = parser["output"] if parser.has_section("output") else {}
    fmt = out.get("format", "csv").strip()
    if fmt not in ("csv", "json"):
        raise ConfigError(f"{_where(text, 'output', 'format')}[output] format must be csv or json")
    return ExperimentConfig(channel=channel, blocklength=n, mc=mc, grids=grids, queue=queue,
                            output_path=out.get("path"), format=fmt, **extra)


def load(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text)
