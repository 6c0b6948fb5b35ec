"""Timing-sequence generation from a phase accumulator and a parameter LUT."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .encoder import TimingParameter

CODE_BITS = 12
LUT_CAPACITY = 1 << CODE_BITS
MAX_FIXED_COUNT = 1000


class SequenceError(ValueError):
    pass


@dataclass(frozen=True)
class CodeMapping:
    """Affine rule from a 12-bit interval code to a timing parameter.

    ``high_bits = high_scale * code + high_offset``. The signal length is
    ``total_bits`` when that is set, otherwise ``high_bits + low_bits``.
    """

    high_offset: int = 0
    high_scale: int = 1
    low_bits: int = 10
    total_bits: int | None = None

    def high(self, code: int) -> int:
        return self.high_scale * int(code) + self.high_offset

    def total(self, code: int) -> int:
        return self.total_bits if self.total_bits is not None else self.high(code) + self.low_bits

    def __call__(self, code: int) -> TimingParameter:
        return TimingParameter(self.high(code), self.total(code))

    def code_of(self, high_bits):
        """Invert the high-time part of the rule (works on arrays too)."""
        return (np.asarray(high_bits) - self.high_offset) // self.high_scale

    def validate(self, code_count: int = LUT_CAPACITY) -> None:
        if self.high_scale < 1 or self.high_offset < 0 or self.low_bits < 0:
            raise SequenceError(f"mapping coefficients out of range: {self}")
        for code in (0, code_count - 1):
            try:
                self(code)
            except ValueError as exc:
                raise SequenceError(f"mapping gives an invalid parameter for code {code}: {exc}") from None

    def to_parameters(self, codes) -> list[TimingParameter]:
        codes = np.asarray(codes, dtype=np.int64)
        highs = self.high_scale * codes + self.high_offset
        totals = (np.full_like(highs, self.total_bits) if self.total_bits is not None
                  else highs + self.low_bits)
        if len(codes) and ((highs < 0).any() or (totals < 1).any() or (highs > totals).any()):
            raise SequenceError("mapping produced an invalid timing parameter")
        return [TimingParameter(h, t) for h, t in zip(highs.tolist(), totals.tolist())]


@dataclass
class PhaseAccumulator:
    depth_bits: int = CODE_BITS
    control_word: int = 1
    phase: int = 0
    sample_rate_hz: float = 156.25e6

    def __post_init__(self):
        if self.depth_bits < 1:
            raise SequenceError(f"accumulator depth must be positive, got {self.depth_bits}")
        if not 1 <= self.control_word < (1 << self.depth_bits):
            raise SequenceError(
                f"control word must be in [1, 2**{self.depth_bits}), got {self.control_word}")
        if not 0 <= self.phase < (1 << self.depth_bits):
            raise SequenceError(f"phase {self.phase} outside accumulator range")
        if not self.sample_rate_hz > 0:
            raise SequenceError(f"sample rate must be positive, got {self.sample_rate_hz}")

    @property
    def modulus(self) -> int:
        return 1 << self.depth_bits

    def address(self, entries: int, phase: int | None = None) -> int:
        """LUT address of ``phase``: its top bits, scaled to ``entries`` slots.

        For a power-of-two ``entries`` this is exactly the top
        ``log2(entries)`` bits of the phase word.
        """
        phase = self.phase if phase is None else phase
        return (phase * entries) >> self.depth_bits


def accumulator_step(acc: PhaseAccumulator, entries: int | None = None) -> tuple[int, PhaseAccumulator]:
    """Advance by one control word and return the new phase's LUT address."""
    entries = entries or acc.modulus
    nxt = replace(acc, phase=(acc.phase + acc.control_word) % acc.modulus)
    return nxt.address(entries), nxt


def sequence_length(acc: PhaseAccumulator) -> float:
    """Time to traverse the LUT once: ``2**D / (K * f_s)`` seconds."""
    if acc.control_word < 1:
        raise SequenceError("control word must be >= 1")
    return acc.modulus / (acc.control_word * acc.sample_rate_hz)


def traversal_steps(acc: PhaseAccumulator, limit: int | None = None) -> int:
    """Count steps until the phase first comes back to its start value."""
    limit = limit or acc.modulus
    start = phase = acc.phase
    for k in range(1, limit + 1):
        phase = (phase + acc.control_word) % acc.modulus
        if phase == start:
            return k
    raise SequenceError(f"phase did not return within {limit} steps")


def control_word_for(entries: int, depth_bits: int) -> int:
    """Smallest control word that advances the address by one entry per step."""
    return -(-(1 << depth_bits) // entries)


@dataclass
class ParameterLut:
    codes: list[int] = field(default_factory=list)
    mapping: CodeMapping = field(default_factory=CodeMapping)

    def __post_init__(self):
        self.codes = [int(c) for c in self.codes]
        if len(self.codes) > LUT_CAPACITY:
            raise SequenceError(f"LUT holds at most {LUT_CAPACITY} entries, got {len(self.codes)}")
        for i, c in enumerate(self.codes):
            if not 0 <= c < LUT_CAPACITY:
                raise SequenceError(f"LUT entry {i}: code {c} does not fit in {CODE_BITS} bits")
            try:
                self.mapping(c)
            except ValueError as exc:
                raise SequenceError(f"LUT entry {i}: {exc}") from None

    def __len__(self):
        return len(self.codes)

    @property
    def entries(self) -> list[TimingParameter]:
        return [self.mapping(c) for c in self.codes]


def load_lut(path, mapping: CodeMapping | None = None) -> ParameterLut:
    """Read interval codes, one per line (first CSV column; ``#`` comments)."""
    codes = []
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), 1):
            if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                continue
            try:
                codes.append(int(row[0].strip(), 0))
            except ValueError:
                raise SequenceError(f"{path}:{lineno}: not an integer code: {row[0]!r}") from None
    if not codes:
        raise SequenceError(f"{path}: no codes found")
    return ParameterLut(codes, mapping or CodeMapping())


def generate_fixed(interval: TimingParameter, count: int,
                   max_count: int = MAX_FIXED_COUNT) -> list[TimingParameter]:
    if not 1 <= count <= max_count:
        raise SequenceError(f"fixed sequence count must be in [1, {max_count}], got {count}")
    return [interval] * count


def generate_sequence(lut: ParameterLut, acc: PhaseAccumulator,
                      count: int) -> tuple[list[TimingParameter], PhaseAccumulator]:
    """Emit ``count`` parameters, reading the LUT at each phase then stepping.

    The first output is the entry addressed by the starting phase.
    """
    if not len(lut):
        raise SequenceError("parameter LUT is empty")
    if count < 0:
        raise SequenceError(f"count must be non-negative, got {count}")
    if len(lut) > acc.modulus:
        raise SequenceError(
            f"{len(lut)}-entry LUT needs at least {len(lut).bit_length()} accumulator bits")
    entries = lut.entries
    out = []
    phase = acc.phase
    n = len(entries)
    for _ in range(count):
        out.append(entries[acc.address(n, phase)])
        phase = (phase + acc.control_word) % acc.modulus
    return out, replace(acc, phase=phase)

