"""Randomised encoder-versus-reference equivalence run, shared by the CLI and tests."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analyzer import decode_intervals, expected_pulse_widths
from .encoder import FrameEncoder, TimingParameter, encode_stream
from .reference import reference_bits
from .serdes import Bitstream, LineConfig, serialize


@dataclass
class SelftestResult:
    cases: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def random_parameter_list(rng: np.random.Generator, max_len: int = 20,
                          max_total: int = 1000) -> list[TimingParameter]:
    """Mix of ordinary and edge-case parameters (all-high, all-low, tiny, long)."""
    n = int(rng.integers(1, max_len + 1))
    totals = rng.integers(1, max_total + 1, size=n)
    kind = rng.integers(0, 4, size=n)
    params = []
    for t, k in zip(totals.tolist(), kind.tolist()):
        h = 0 if k == 0 else t if k == 1 else int(rng.integers(0, t + 1))
        params.append(TimingParameter(h, t))
    return params


def stream_bits(frames, w: int) -> np.ndarray:
    return serialize(frames, LineConfig(10e9, w)).bits


def check_case(params, w: int, rng: np.random.Generator | None = None) -> str | None:
    """Return a description of the first discrepancy, or None."""
    ref = reference_bits(params, w)
    got = stream_bits(encode_stream(params, w), w)
    if not np.array_equal(got, ref):
        bad = int(np.flatnonzero(got != ref)[0]) if len(got) == len(ref) else -1
        return f"W={w}: encode_stream differs from reference at bit {bad}"
    # chunked feeding through the incremental encoder must match too
    split = int(rng.integers(0, len(params) + 1)) if rng is not None else len(params) // 2
    enc = FrameEncoder(w)
    frames = enc.push(params[:split]) + enc.push(params[split:]) + enc.finish()
    if not np.array_equal(stream_bits(frames, w), ref):
        return f"W={w}: chunked encoding (split at {split}) differs from reference"
    # pulses must decode back to the requested high times
    train = decode_intervals(Bitstream.from_bits(ref, frame_width=w))
    expected = expected_pulse_widths(params)
    if not np.array_equal(train.widths_bits, expected):
        return f"W={w}: decoded widths differ from requested intervals"
    return None


def run(cases: int = 1000, seed: int = 0, widths=(8, 16, 32, 64)) -> SelftestResult:
    rng = np.random.default_rng(seed)
    result = SelftestResult()
    for i in range(cases):
        w = int(widths[i % len(widths)])
        params = random_parameter_list(rng)
        err = check_case(params, w, rng)
        result.cases += 1
        if err:
            result.failures.append(f"case {i}: {err}")
    return result
