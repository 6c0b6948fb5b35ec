"""Naive run-length reference bitstream, used to cross-check the encoder."""
from __future__ import annotations

import numpy as np


def reference_bits(params, frame_width: int | None = None) -> np.ndarray:
    """Concatenate ``1 * high + 0 * low`` for every parameter.

    With ``frame_width`` the result is zero-padded up to a whole number of
    frames. Returns a ``uint8`` array of 0/1 values in transmission order.
    """
    highs = np.fromiter((p.high_bits for p in params), dtype=np.int64)
    totals = np.fromiter((p.total_bits for p in params), dtype=np.int64)
    levels = np.zeros(2 * len(highs), dtype=np.uint8)
    levels[0::2] = 1
    runs = np.empty(2 * len(highs), dtype=np.int64)
    runs[0::2] = highs
    runs[1::2] = totals - highs
    bits = np.repeat(levels, runs)
    if frame_width:
        pad = -len(bits) % frame_width
        bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    return bits


def reference_frames(params, frame_width: int) -> list[int]:
    """Chunk the reference bitstream into MSB-first integer words."""
    bits = reference_bits(params, frame_width)
    frames = []
    for k in range(0, len(bits), frame_width):
        word = 0
        for b in bits[k:k + frame_width]:
            word = (word << 1) | int(b)
        frames.append(word)
    return frames
