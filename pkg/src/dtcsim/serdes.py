"""Transmit-side transceiver model: parallel frames in, timed bits out.

The serializer is ideal (no jitter, no 8B/10B) and sends the most
significant bit of each frame first. Bits are held packed, MSB-first per
byte, in transmission order.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

MAGIC = b"DTCB"
VERSION = 1
# magic, version, frame width, line rate (bit/s), bit count
HEADER = struct.Struct(">4sHHdQ")


class SerdesError(ValueError):
    pass


class BitstreamFormatError(SerdesError):
    pass


@dataclass(frozen=True)
class LineConfig:
    line_rate_bps: float = 10e9
    frame_width: int = 32

    def __post_init__(self):
        if not self.line_rate_bps > 0:
            raise SerdesError(f"line rate must be positive, got {self.line_rate_bps}")
        if not 2 <= self.frame_width <= 64:
            raise SerdesError(f"frame width must be in [2, 64], got {self.frame_width}")

    @property
    def bit_period_s(self) -> float:
        return 1.0 / self.line_rate_bps

    @property
    def bit_period(self) -> Fraction:
        """Exact bit period, for unit conversions that must not round."""
        return 1 / Fraction(self.line_rate_bps)


@dataclass(frozen=True)
class Bitstream:
    packed: np.ndarray  # uint8, MSB-first per byte
    n_bits: int
    line_rate_bps: float = 10e9
    frame_width: int = 32

    @classmethod
    def from_bits(cls, bits, line_rate_bps=10e9, frame_width=32) -> "Bitstream":
        bits = np.asarray(bits, dtype=np.uint8)
        return cls(np.packbits(bits), len(bits), line_rate_bps, frame_width)

    @property
    def bit_period_s(self) -> float:
        return 1.0 / self.line_rate_bps

    @property
    def bits(self) -> np.ndarray:
        return np.unpackbits(self.packed, count=self.n_bits)

    @property
    def duration_s(self) -> float:
        return self.n_bits * self.bit_period_s

    def __len__(self):
        return self.n_bits

    def __eq__(self, other):
        if not isinstance(other, Bitstream):
            return NotImplemented
        return (self.n_bits == other.n_bits and self.line_rate_bps == other.line_rate_bps
                and self.frame_width == other.frame_width
                and np.array_equal(self.packed, other.packed))

    def frames(self) -> np.ndarray:
        """Chunk back into W-bit words (the inverse of :func:`serialize`)."""
        w = self.frame_width
        if self.n_bits % w:
            raise SerdesError(f"{self.n_bits} bits is not a whole number of {w}-bit frames")
        bits = self.bits.reshape(-1, w).astype(np.uint64)
        weights = np.uint64(1) << np.arange(w - 1, -1, -1, dtype=np.uint64)
        return (bits * weights).sum(axis=1, dtype=np.uint64)


def serialize(frames, cfg: LineConfig) -> Bitstream:
    """Serialize frames MSB-first at ``cfg.line_rate_bps``."""
    w = cfg.frame_width
    if not isinstance(frames, np.ndarray):
        try:
            frames = np.array(frames, dtype=np.uint64)
        except OverflowError:
            raise SerdesError("frames must be non-negative and at most 64 bits wide") from None
    if frames.dtype.kind not in "ui":
        raise SerdesError(f"frames must be integers, got dtype {frames.dtype}")
    if frames.size and (int(frames.min()) < 0 or (w < 64 and int(frames.max()) >> w)):
        bad = int(np.argmax((frames < 0) | (frames.astype(np.uint64) >> np.uint64(w) > 0)))
        raise SerdesError(f"frame {bad} does not fit in {w} bits: {int(frames[bad]):#x}")
    n_bits = frames.size * w
    if w in (8, 16, 32, 64):
        # big-endian byte view keeps MSB-first order with no unpacking
        packed = frames.astype(f">u{w // 8}").view(np.uint8).reshape(-1)
    elif w % 8 == 0:
        nbytes = w // 8
        raw = frames.astype(">u8").view(np.uint8).reshape(-1, 8)[:, 8 - nbytes:]
        packed = np.ascontiguousarray(raw).reshape(-1)
    else:
        frames = frames.astype(np.uint64)
        shifts = np.arange(w - 1, -1, -1, dtype=np.uint64)
        bits = ((frames[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
        packed = np.packbits(bits.reshape(-1))
    return Bitstream(packed, n_bits, cfg.line_rate_bps, w)


def edge_indices(stream: Bitstream, chunk_bytes: int = 1 << 24) -> tuple[np.ndarray, np.ndarray]:
    """Bit indices of rising and falling transitions.

    The line is low before the first bit and returns low after the last,
    so a stream ending high gets a falling edge at ``n_bits``. Works in
    chunks so very long streams never unpack whole.
    """
    rises, falls = [], []
    prev = 0
    nbytes = len(stream.packed)
    for start in range(0, nbytes, chunk_bytes):
        stop = min(start + chunk_bytes, nbytes)
        count = min(stream.n_bits - start * 8, (stop - start) * 8)
        bits = np.unpackbits(stream.packed[start:stop], count=count).astype(np.int8)
        d = np.diff(bits, prepend=np.int8(prev))
        rises.append(np.flatnonzero(d == 1) + start * 8)
        falls.append(np.flatnonzero(d == -1) + start * 8)
        prev = bits[-1] if count else prev
    rise = np.concatenate(rises) if rises else np.zeros(0, dtype=np.int64)
    fall = np.concatenate(falls) if falls else np.zeros(0, dtype=np.int64)
    if prev == 1:
        fall = np.append(fall, stream.n_bits)
    return rise.astype(np.int64), fall.astype(np.int64)


def edge_times(stream: Bitstream) -> list[tuple[float, int]]:
    """Every transition as ``(time_s, direction)``, +1 rising, -1 falling."""
    rise, fall = edge_indices(stream)
    idx = np.concatenate([rise, fall])
    direction = np.concatenate([np.ones(len(rise), int), -np.ones(len(fall), int)])
    order = np.argsort(idx, kind="stable")
    # dividing by the rate rounds once, so whole-bit times land on exact decimals
    return [(float(idx[i]) / stream.line_rate_bps, int(direction[i])) for i in order]


def write_bitstream(path, stream: Bitstream) -> None:
    header = HEADER.pack(MAGIC, VERSION, stream.frame_width, stream.line_rate_bps, stream.n_bits)
    nbytes = -(-stream.n_bits // 8)
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    with open(tmp, "wb") as f:
        f.write(header)
        f.write(stream.packed[:nbytes].tobytes())
    tmp.replace(path)


def read_bitstream(path) -> Bitstream:
    with open(path, "rb") as f:
        head = f.read(HEADER.size)
        if len(head) < HEADER.size:
            raise BitstreamFormatError(f"{path}: truncated header ({len(head)} bytes)")
        magic, version, width, rate, n_bits = HEADER.unpack(head)
        if magic != MAGIC:
            raise BitstreamFormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise BitstreamFormatError(f"{path}: unsupported version {version}")
        if not (2 <= width <= 64 and rate > 0):
            raise BitstreamFormatError(f"{path}: bad header fields W={width} rate={rate}")
        payload = np.fromfile(f, dtype=np.uint8)
    if len(payload) != -(-n_bits // 8):
        raise BitstreamFormatError(
            f"{path}: header says {n_bits} bits but payload holds {len(payload)} bytes")
    return Bitstream(payload, n_bits, rate, width)
