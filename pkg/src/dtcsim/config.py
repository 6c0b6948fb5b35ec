"""Run configuration: loading, unit parsing, validation and parameter synthesis.

Config files are JSON objects. A synth manifest is also accepted as a
config, in which case its ``config`` member is used.
"""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .encoder import MAX_FRAME_WIDTH, TimingParameter
from .lfsr import DEFAULT_TAPS, LfsrBank, LfsrError, random_parameters
from .sequence import (CodeMapping, ParameterLut, PhaseAccumulator, SequenceError,
                       control_word_for, generate_fixed, generate_sequence, load_lut)

MODES = ("single", "fixed-sequence", "lut-sequence", "random")

_PREFIX = {"": 1, "m": Fraction(1, 10**3), "u": Fraction(1, 10**6), "µ": Fraction(1, 10**6),
           "n": Fraction(1, 10**9), "p": Fraction(1, 10**12), "f": Fraction(1, 10**15),
           "k": 10**3, "M": 10**6, "G": 10**9, "T": 10**12}
_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Zµ]*)\s*$")


class ConfigError(ValueError):
    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path
        self.message = message


def _number(value, field_path: str) -> tuple[Fraction, str]:
    if isinstance(value, bool):
        raise ConfigError(field_path, f"expected a quantity, got {value!r}")
    if isinstance(value, (int, float)):
        return Fraction(repr(value)) if isinstance(value, float) else Fraction(value), ""
    m = _QTY.match(str(value))
    if not m:
        raise ConfigError(field_path, f"cannot parse quantity {value!r}")
    return Fraction(m.group(1)), m.group(2)


def parse_time(value, field_path: str = "time") -> Fraction:
    """Seconds as an exact fraction; accepts ``"10ns"``, ``"40 us"``, ``1e-9``."""
    num, unit = _number(value, field_path)
    if unit.endswith("s") and unit[:-1] in _PREFIX:
        return num * _PREFIX[unit[:-1]]
    if unit == "":
        return num
    raise ConfigError(field_path, f"unknown time unit {unit!r}")


def parse_rate(value, field_path: str = "line_rate") -> Fraction:
    """Bits per second; accepts ``10e9``, ``"10G"``, ``"10 Gbps"``."""
    num, unit = _number(value, field_path)
    for suffix in ("bps", "b/s", "Hz", ""):
        if unit.endswith(suffix) and unit[:len(unit) - len(suffix)] in _PREFIX:
            rate = num * _PREFIX[unit[:len(unit) - len(suffix)]]
            break
    else:
        raise ConfigError(field_path, f"unknown rate unit {unit!r}")
    if rate <= 0:
        raise ConfigError(field_path, "must be positive")
    return rate


def to_bits(value, rate: Fraction, field_path: str) -> int:
    """Convert a time to a whole number of bit periods, refusing to round."""
    if isinstance(value, str) and value.strip().endswith(("bit", "bits")):
        n = value.strip().removesuffix("bits").removesuffix("bit")
        try:
            return int(n)
        except ValueError:
            raise ConfigError(field_path, f"cannot parse bit count {value!r}") from None
    bits = parse_time(value, field_path) * rate
    if bits.denominator != 1:
        raise ConfigError(field_path,
                          f"{value!r} is {float(bits):g} bit periods at {float(rate):g} bit/s, "
                          f"not a whole number")
    return int(bits)


@dataclass
class AccumulatorConfig:
    depth_bits: int = 12
    control_word: int | None = None
    phase: int = 0
    sample_rate_hz: float = 156.25e6


@dataclass
class MappingConfig:
    high_offset: int = 10
    high_scale: int = 1
    low_bits: int = 10
    total_bits: int | None = None


@dataclass
class LfsrConfig:
    taps: dict[str, list[int]] = field(
        default_factory=lambda: {str(n): list(t) for n, t in DEFAULT_TAPS.items()})
    seeds: list[int] | None = None


@dataclass
class RunConfig:
    mode: str = "single"
    line_rate: str = "10e9"
    frame_width: int = 32
    high: Any = None
    total: Any = None
    count: int | None = None
    max_fixed_count: int = 1000
    lut: list[int] | None = None
    lut_path: str | None = None
    accumulator: AccumulatorConfig = field(default_factory=AccumulatorConfig)
    mapping: MappingConfig = field(default_factory=MappingConfig)
    lfsr: LfsrConfig = field(default_factory=LfsrConfig)
    jitter_sigma: Any = 0
    seed: int = 0
    min_interval: Any = "1ns"
    max_interval: Any = "40us"
    output: str = "out.dtcb"
    manifest: str | None = None

    @property
    def rate(self) -> Fraction:
        return parse_rate(self.line_rate, "line_rate")

    @property
    def manifest_path(self) -> Path:
        return Path(self.manifest) if self.manifest else Path(self.output + ".json")

    def to_dict(self) -> dict:
        return asdict(self)


_NESTED = {"accumulator": AccumulatorConfig, "mapping": MappingConfig, "lfsr": LfsrConfig}


def _build(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(prefix.rstrip(".") or "config", "expected an object")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(prefix + key, "unknown option")
    kwargs = {}
    for key, value in data.items():
        if key in _NESTED and cls is RunConfig:
            value = _build(_NESTED[key], value, f"{key}.")
        kwargs[key] = value
    return cls(**kwargs)


def merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config_dict(path) -> dict:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path}: invalid JSON: {exc}") from None
    if isinstance(data, dict) and "config" in data and "bitstream" in data:
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path}: expected a JSON object")
    return data


def make_config(data: dict) -> RunConfig:
    cfg = _build(RunConfig, data, "")
    validate(cfg)
    return cfg


def _int(value, field_path, lo=None, hi=None, allow_none=False):
    if value is None and allow_none:
        return
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field_path, f"expected an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(field_path, f"must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(field_path, f"must be <= {hi}, got {value}")


def validate(cfg: RunConfig) -> None:
    if cfg.mode not in MODES:
        raise ConfigError("mode", f"must be one of {', '.join(MODES)}, got {cfg.mode!r}")
    cfg.rate
    _int(cfg.frame_width, "frame_width", 2, MAX_FRAME_WIDTH)
    _int(cfg.seed, "seed", 0)
    _int(cfg.max_fixed_count, "max_fixed_count", 1)
    _int(cfg.count, "count", 1, allow_none=True)
    if parse_time(cfg.jitter_sigma, "jitter_sigma") < 0:
        raise ConfigError("jitter_sigma", "must be >= 0")
    lo = parse_time(cfg.min_interval, "min_interval")
    hi = parse_time(cfg.max_interval, "max_interval")
    if not 0 < lo <= hi:
        raise ConfigError("min_interval", "need 0 < min_interval <= max_interval")
    acc = cfg.accumulator
    _int(acc.depth_bits, "accumulator.depth_bits", 1, 64)
    _int(acc.control_word, "accumulator.control_word", 1, (1 << acc.depth_bits) - 1, allow_none=True)
    _int(acc.phase, "accumulator.phase", 0, (1 << acc.depth_bits) - 1)
    if not isinstance(acc.sample_rate_hz, (int, float)) or acc.sample_rate_hz <= 0:
        raise ConfigError("accumulator.sample_rate_hz", "must be a positive number")
    m = cfg.mapping
    _int(m.high_offset, "mapping.high_offset", 0)
    _int(m.high_scale, "mapping.high_scale", 1)
    _int(m.low_bits, "mapping.low_bits", 0)
    _int(m.total_bits, "mapping.total_bits", 1, allow_none=True)

    if cfg.mode in ("single", "fixed-sequence"):
        if cfg.high is None:
            raise ConfigError("high", f"required in {cfg.mode} mode")
        if cfg.total is None:
            raise ConfigError("total", f"required in {cfg.mode} mode")
    if cfg.mode == "fixed-sequence":
        if cfg.count is None:
            raise ConfigError("count", "required in fixed-sequence mode")
        _int(cfg.count, "count", 1, cfg.max_fixed_count)
    if cfg.mode == "lut-sequence":
        if (cfg.lut is None) == (cfg.lut_path is None):
            raise ConfigError("lut", "give exactly one of lut or lut_path")
        if cfg.lut_path is not None and not Path(cfg.lut_path).is_file():
            raise ConfigError("lut_path", f"no such file: {cfg.lut_path}")
    if cfg.mode == "random":
        seeds = cfg.lfsr.seeds
        if seeds is not None and len(seeds) != len(cfg.lfsr.taps):
            raise ConfigError("lfsr.seeds", f"expected {len(cfg.lfsr.taps)} seeds, got {len(seeds)}")


def code_mapping(cfg: RunConfig) -> CodeMapping:
    m = cfg.mapping
    return CodeMapping(m.high_offset, m.high_scale, m.low_bits, m.total_bits)


def load_lut_codes(cfg: RunConfig) -> list[int]:
    if cfg.lut is not None:
        return [int(c) for c in cfg.lut]
    try:
        return load_lut(cfg.lut_path, code_mapping(cfg)).codes
    except SequenceError as exc:
        raise ConfigError("lut_path", str(exc)) from None


def bank_from(cfg: RunConfig) -> LfsrBank:
    try:
        taps = {int(n): tuple(t) for n, t in cfg.lfsr.taps.items()}
        return LfsrBank.default(cfg.lfsr.seeds, taps)
    except (LfsrError, ValueError) as exc:
        raise ConfigError("lfsr", str(exc)) from None


def accumulator_from(cfg: RunConfig, entries: int) -> PhaseAccumulator:
    a = cfg.accumulator
    k = a.control_word or control_word_for(entries, a.depth_bits)
    try:
        return PhaseAccumulator(a.depth_bits, k, a.phase, a.sample_rate_hz)
    except SequenceError as exc:
        raise ConfigError("accumulator", str(exc)) from None


def build_parameters(cfg: RunConfig) -> list[TimingParameter]:
    """The timing parameters a config describes, range-checked."""
    rate = cfg.rate
    mapping = code_mapping(cfg)
    try:
        if cfg.mode in ("single", "fixed-sequence"):
            high = to_bits(cfg.high, rate, "high")
            total = to_bits(cfg.total, rate, "total")
            if not 0 <= high <= total:
                raise ConfigError("high", f"must lie within [0, total], got {high} of {total} bits")
            p = TimingParameter(high, total)
            params = [p] if cfg.mode == "single" else generate_fixed(p, cfg.count, cfg.max_fixed_count)
        elif cfg.mode == "lut-sequence":
            codes = load_lut_codes(cfg)
            lut = ParameterLut(codes, mapping)
            acc = accumulator_from(cfg, len(lut))
            params, _ = generate_sequence(lut, acc, cfg.count or len(lut))
        else:
            params = random_parameters(bank_from(cfg), cfg.count or 1000, mapping)
    except SequenceError as exc:
        field_path = "mapping" if "mapping" in str(exc) else ("lut" if cfg.mode == "lut-sequence" else "count")
        raise ConfigError(field_path, str(exc)) from None
    check_range(cfg, params)
    return params


def check_range(cfg: RunConfig, params) -> None:
    rate = cfg.rate
    lo = parse_time(cfg.min_interval, "min_interval")
    hi = parse_time(cfg.max_interval, "max_interval")
    highs = np.fromiter((p.high_bits for p in params), dtype=np.int64, count=len(params))
    totals = np.fromiter((p.total_bits for p in params), dtype=np.int64, count=len(params))
    field_high = "high" if cfg.mode in ("single", "fixed-sequence") else "mapping"
    field_total = "total" if cfg.mode in ("single", "fixed-sequence") else "mapping"
    for name, arr, where in (("interval", highs, field_high), ("signal length", totals, field_total)):
        smallest = Fraction(int(arr.min())) / rate
        largest = Fraction(int(arr.max())) / rate
        if smallest < lo or largest > hi:
            raise ConfigError(where, f"{name} spans {float(smallest):g}..{float(largest):g} s, "
                                     f"outside the dynamic range {float(lo):g}..{float(hi):g} s")
