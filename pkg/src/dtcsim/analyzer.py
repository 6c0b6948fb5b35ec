"""Decoding and measurement: pulse widths, linearity, jitter, uniformity."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .encoder import TimingParameter, encode_stream
from .serdes import Bitstream, LineConfig, edge_indices, serialize


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class IntervalMeasurement:
    pulse_index: int
    width_s: float
    width_bits: int
    start_bit: int = 0
    # False when the pulse was still high at the last bit of the stream
    terminated: bool = True


@dataclass(frozen=True)
class PulseTrain:
    """Decoded pulses of one bitstream, held as arrays.

    Indexing and iteration yield :class:`IntervalMeasurement` objects.
    """

    rise_bits: np.ndarray
    fall_bits: np.ndarray
    n_bits: int
    line_rate_bps: float
    open_end: bool = False

    def __len__(self):
        return len(self.rise_bits)

    def __getitem__(self, i) -> IntervalMeasurement:
        i = range(len(self))[i]
        w = int(self.fall_bits[i] - self.rise_bits[i])
        return IntervalMeasurement(i, w / self.line_rate_bps, w, int(self.rise_bits[i]),
                                   not (self.open_end and i == len(self) - 1))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def bit_period_s(self) -> float:
        return 1.0 / self.line_rate_bps

    @property
    def widths_bits(self) -> np.ndarray:
        return self.fall_bits - self.rise_bits

    @property
    def widths_s(self) -> np.ndarray:
        return self.widths_bits / self.line_rate_bps

    @property
    def terminated(self) -> list[IntervalMeasurement]:
        """Measurements excluding a pulse cut off by the end of the stream."""
        n = len(self) - 1 if self.open_end else len(self)
        return [self[i] for i in range(n)]

    def parameters(self) -> list[TimingParameter]:
        """Recover ``(high, total)`` pairs; totals run rise to next rise.

        The last total extends to the end of the stream, so it includes any
        zero padding of the final frame.
        """
        starts = np.append(self.rise_bits, self.n_bits)
        totals = np.diff(starts)
        return [TimingParameter(int(h), int(t)) for h, t in zip(self.widths_bits, totals)]


def decode_intervals(stream: Bitstream) -> PulseTrain:
    rise, fall = edge_indices(stream)
    if len(rise) != len(fall):
        raise AnalysisError(f"unpaired edges: {len(rise)} rising vs {len(fall)} falling")
    open_end = bool(len(fall) and fall[-1] == stream.n_bits)
    return PulseTrain(rise, fall, stream.n_bits, stream.line_rate_bps, open_end)


def expected_pulse_widths(params) -> np.ndarray:
    """Pulse widths an observer should see; back-to-back high runs merge."""
    widths, run = [], 0
    for p in params:
        run += p.high_bits
        if p.high_bits < p.total_bits:
            if run:
                widths.append(run)
            run = 0
    if run:
        widths.append(run)
    return np.asarray(widths, dtype=np.int64)


def synthesize(params: Sequence[TimingParameter], cfg: LineConfig) -> Bitstream:
    """Encode and serialize in one go."""
    return serialize(encode_stream(params, cfg.frame_width), cfg)


@dataclass(frozen=True)
class JitterModel:
    """Independent Gaussian displacement of every rising and falling edge."""

    sigma_s: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma_s >= 0:
            raise AnalysisError(f"jitter sigma must be >= 0, got {self.sigma_s}")

    def widths(self, width_s, repeats: int, rng: np.random.Generator | None = None) -> np.ndarray:
        """``repeats`` noisy measurements of each nominal width.

        Returns shape ``(len(width_s), repeats)`` (or ``(repeats,)`` for a
        scalar width).
        """
        rng = rng or np.random.default_rng(self.seed)
        width_s = np.asarray(width_s, dtype=float)
        shape = width_s.shape + (repeats,)
        if self.sigma_s == 0:
            return np.broadcast_to(width_s[..., None], shape).copy()
        rise = rng.normal(0.0, self.sigma_s, shape)
        fall = rng.normal(0.0, self.sigma_s, shape)
        return width_s[..., None] + fall - rise


def interval_statistics(widths_s) -> tuple[float, float]:
    """Sample mean and sample standard deviation (ddof=1)."""
    widths_s = np.asarray(widths_s, dtype=float).ravel()
    if widths_s.size == 0:
        raise AnalysisError("no measurements")
    std = float(np.std(widths_s, ddof=1)) if widths_s.size > 1 else float("nan")
    return float(np.mean(widths_s)), std


@dataclass
class LinearityReport:
    codes: np.ndarray
    widths_lsb: np.ndarray
    dnl_lsb: np.ndarray
    inl_lsb: np.ndarray
    lsb_s: float
    note: str = ""

    @property
    def max_abs_dnl(self) -> float:
        return float(np.abs(self.dnl_lsb).max()) if self.dnl_lsb.size else 0.0

    @property
    def max_abs_inl(self) -> float:
        return float(np.abs(self.inl_lsb).max()) if self.inl_lsb.size else 0.0


def linearity_from_widths(codes, widths_lsb, lsb_s: float) -> LinearityReport:
    """DNL per adjacent code pair, INL as its running sum.

    ``DNL[k] = (w[k+1] - w[k]) / (c[k+1] - c[k]) - 1`` with widths in LSB.
    """
    codes = np.asarray(codes)
    widths_lsb = np.asarray(widths_lsb)
    if codes.size == 0:
        raise AnalysisError("empty code range")
    if codes.size == 1:
        empty = np.zeros(0)
        return LinearityReport(codes, widths_lsb, empty, empty, lsb_s,
                               note="DNL needs at least two codes")
    steps = np.diff(codes)
    if (steps <= 0).any():
        raise AnalysisError("codes must be strictly increasing")
    dnl = np.diff(widths_lsb) / steps - 1
    return LinearityReport(codes, widths_lsb, dnl, np.cumsum(dnl), lsb_s)


def sweep_linearity(codes, cfg: LineConfig = LineConfig(), *, low_bits: int = 10,
                    total_bits: int | None = None, jitter: JitterModel | None = None,
                    repeats: int = 1) -> LinearityReport:
    """Synthesize one pulse per code, decode, and measure the transfer curve.

    Each pulse lasts ``total_bits`` if given, else ``code + low_bits``. With
    a jitter model the width for each code is the mean of ``repeats`` noisy
    measurements.
    """
    codes = np.asarray(list(codes), dtype=np.int64)
    if codes.size == 0:
        raise AnalysisError("empty code range")
    if total_bits is None and low_bits < 1:
        raise AnalysisError("low_bits must be >= 1 so adjacent pulses stay separate")
    if total_bits is not None and total_bits <= codes.max():
        raise AnalysisError(f"total_bits {total_bits} leaves no low time after code {codes.max()}")
    if (codes < 1).any():
        raise AnalysisError("codes must be >= 1 to produce a pulse")
    params = [TimingParameter(int(c), total_bits if total_bits is not None else int(c) + low_bits)
              for c in codes]
    train = decode_intervals(synthesize(params, cfg))
    if len(train) != codes.size:
        raise AnalysisError(f"decoded {len(train)} pulses for {codes.size} codes")
    widths_lsb = train.widths_bits.astype(float)
    if jitter is not None and jitter.sigma_s > 0:
        noisy = jitter.widths(np.zeros(codes.size), repeats)
        widths_lsb = widths_lsb + noisy.mean(axis=1) * cfg.line_rate_bps
    else:
        widths_lsb = train.widths_bits
    return linearity_from_widths(codes, widths_lsb, cfg.bit_period_s)


@dataclass(frozen=True)
class UniformityResult:
    statistic: float
    critical: float
    dof: int
    p_value: float
    alpha: float
    counts: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical


def uniformity_test(codes, bins: int = 64, code_range: int = 4096,
                    alpha: float = 0.01) -> UniformityResult:
    """Pearson chi-square of binned codes against a uniform distribution."""
    codes = np.asarray(codes, dtype=np.int64).ravel()
    if bins < 2 or bins > code_range:
        raise AnalysisError(f"bins must be in [2, {code_range}], got {bins}")
    if codes.size < 10 * bins:
        raise AnalysisError(f"need at least {10 * bins} samples for {bins} bins, got {codes.size}")
    if codes.min() < 0 or codes.max() >= code_range:
        raise AnalysisError(f"codes outside [0, {code_range})")
    which = codes * bins // code_range
    counts = np.bincount(which, minlength=bins)
    # bins may cover unequal numbers of codes when bins does not divide the range
    per_bin = np.bincount(np.arange(code_range) * bins // code_range, minlength=bins)
    expected = codes.size * per_bin / code_range
    statistic = float(((counts - expected) ** 2 / expected).sum())
    dof = bins - 1
    critical = float(stats.chi2.isf(alpha, dof))
    p_value = float(stats.chi2.sf(statistic, dof))
    return UniformityResult(statistic, critical, dof, p_value, alpha, counts)


def sequence_period_check(widths, expected_cycle, atol: float = 0.0) -> bool:
    """True iff ``widths`` is ``expected_cycle`` repeated, at least twice.

    A trailing partial cycle is allowed as long as it matches the prefix.
    """
    widths = np.asarray(widths, dtype=float)
    cycle = np.asarray(expected_cycle, dtype=float)
    if cycle.size == 0 or widths.size < 2 * cycle.size:
        return False
    want = np.resize(cycle, widths.size)
    return bool(np.all(np.abs(widths - want) <= atol))


def write_intervals_csv(path, train: PulseTrain) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["pulse_index", "start_bit", "width_bits", "width_s", "terminated"])
        widths = train.widths_bits
        for i, (start, wb) in enumerate(zip(train.rise_bits.tolist(), widths.tolist())):
            term = not (train.open_end and i == len(train) - 1)
            w.writerow([i, start, wb, repr(wb / train.line_rate_bps), int(term)])


def write_linearity_csv(path, report: LinearityReport) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["code", "width_lsb", "dnl_lsb", "inl_lsb"])
        for k, code in enumerate(report.codes.tolist()):
            dnl = repr(float(report.dnl_lsb[k])) if k < report.dnl_lsb.size else ""
            inl = repr(float(report.inl_lsb[k])) if k < report.inl_lsb.size else ""
            w.writerow([code, repr(float(report.widths_lsb[k])), dnl, inl])


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
