"""Fibonacci LFSRs and the twelve-register bank behind random intervals.

Register convention: an n-bit integer whose bit ``n-1`` is the most
significant stage. Each step outputs that MSB, shifts left by one and feeds
the XOR of the tapped stages into bit 0. A tap at position ``p`` (1..n)
reads bit ``p-1`` and corresponds to the ``x**p`` term of the
characteristic polynomial ``1 + sum(x**p for p in taps)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import gcd, prod
from typing import Sequence

import numpy as np

from .sequence import CodeMapping

WORD_BITS = 12

# Primitive polynomials, one per degree, given as tap positions. Sparse
# trinomials are avoided: started from the all-ones seed they stay visibly
# unbalanced for millions of steps. All taps sit in the upper half of the
# register so the vectorised generator can emit long blocks per operation.
DEFAULT_TAPS: dict[int, tuple[int, ...]] = {
    17: (17, 15, 14, 8),
    18: (18, 17, 15, 13, 11, 9),
    20: (20, 19, 16, 14),
    21: (21, 17, 15, 12, 11, 10),
    22: (22, 21, 16, 15, 13, 12),
    23: (23, 14, 13, 12),
    25: (25, 21, 20, 17, 16, 15),
    28: (28, 25, 18, 17),
    29: (29, 28, 25, 24, 23, 20),
    31: (31, 24, 23, 16),
    33: (33, 29, 20, 17),
    35: (35, 31, 27, 22),
}
DEFAULT_DEGREES = tuple(DEFAULT_TAPS)


class LfsrError(ValueError):
    pass


@dataclass
class Lfsr:
    degree: int
    taps: tuple[int, ...]
    state: int = field(default=-1)

    def __post_init__(self):
        self.taps = tuple(sorted(set(self.taps), reverse=True))
        if self.degree < 1:
            raise LfsrError(f"degree must be positive, got {self.degree}")
        if not self.taps or any(not 1 <= p <= self.degree for p in self.taps):
            raise LfsrError(f"taps {self.taps} out of range for degree {self.degree}")
        if self.state == -1:
            self.state = (1 << self.degree) - 1
        if not 0 < self.state < (1 << self.degree):
            raise LfsrError(f"seed must be a nonzero {self.degree}-bit word, got {self.state}")
        self._mask = (1 << self.degree) - 1
        self._tapmask = sum(1 << (p - 1) for p in self.taps)

    def step(self) -> int:
        s = self.state
        out = s >> (self.degree - 1)
        fb = (s & self._tapmask).bit_count() & 1
        self.state = ((s << 1) | fb) & self._mask
        return out

    def copy(self) -> "Lfsr":
        return Lfsr(self.degree, self.taps, self.state)

    def output_bits(self, count: int) -> np.ndarray:
        """The next ``count`` output bits, vectorised; advances the state.

        The output sequence obeys ``s[k] = XOR(s[k - p] for p in taps)``,
        so blocks of ``min(taps)`` bits can be produced per operation.
        """
        n = self.degree
        s = np.empty(n + count, dtype=np.uint8)
        for i in range(n):
            s[i] = (self.state >> (n - 1 - i)) & 1
        block = min(self.taps)
        k = n
        end = n + count
        while k < end:
            m = min(block, end - k)
            acc = s[k - self.taps[0]:k - self.taps[0] + m].copy()
            for p in self.taps[1:]:
                acc ^= s[k - p:k - p + m]
            s[k:k + m] = acc
            k += m
        # new register holds the n most recent sequence bits
        tail = s[count:count + n]
        self.state = int("".join(map(str, tail.tolist())), 2)
        return s[:count].copy()


def lfsr_step(lfsr: Lfsr) -> tuple[int, Lfsr]:
    nxt = lfsr.copy()
    bit = nxt.step()
    return bit, nxt


def period_of(lfsr: Lfsr, limit: int | None = None) -> int:
    """Steps until the register returns to its starting state, by enumeration.

    Returns 0 if the start state is never revisited within ``limit`` steps
    (only possible for taps that make the map non-invertible).
    """
    r = lfsr.copy()
    start = r.state
    limit = limit or (1 << r.degree)
    mask, tapmask = r._mask, r._tapmask
    s = start
    for k in range(1, limit + 1):
        fb = (s & tapmask).bit_count() & 1
        s = ((s << 1) | fb) & mask
        if s == start:
            return k
    return 0


def is_maximal(degree: int, taps: Sequence[int]) -> bool:
    return period_of(Lfsr(degree, tuple(taps), 1)) == (1 << degree) - 1


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


def _polymulmod(a: int, b: int, mod: int, degree: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> degree & 1:
            a ^= mod
    return r


def _polypowmod(base: int, e: int, mod: int, degree: int) -> int:
    r = 1
    while e:
        if e & 1:
            r = _polymulmod(r, base, mod, degree)
        base = _polymulmod(base, base, mod, degree)
        e >>= 1
    return r


def is_primitive(degree: int, taps: Sequence[int]) -> bool:
    """Algebraic check that ``1 + sum(x**p)`` is primitive over GF(2).

    True iff ``x`` has multiplicative order exactly ``2**degree - 1``
    modulo the polynomial. Independent of register simulation.
    """
    if degree not in taps:
        return False
    poly = 1
    for p in taps:
        poly ^= 1 << p
    order = (1 << degree) - 1
    if degree == 1:
        return True
    if _polypowmod(2, order, poly, degree) != 1:
        return False
    return all(_polypowmod(2, order // q, poly, degree) != 1 for q in _prime_factors(order))


class LfsrBank:
    """Twelve LFSRs of distinct degree; one MSB from each makes a 12-bit word.

    Bit ``j`` of each word comes from ``lfsrs[j]``.
    """

    def __init__(self, lfsrs: Sequence[Lfsr]):
        if len(lfsrs) != WORD_BITS:
            raise LfsrError(f"bank needs exactly {WORD_BITS} LFSRs, got {len(lfsrs)}")
        degrees = [l.degree for l in lfsrs]
        if len(set(degrees)) != len(degrees):
            raise LfsrError(f"LFSR degrees must be distinct, got {degrees}")
        self.lfsrs = list(lfsrs)

    @classmethod
    def default(cls, seeds: Sequence[int] | None = None,
                taps: dict[int, Sequence[int]] | None = None) -> "LfsrBank":
        table = taps or DEFAULT_TAPS
        seeds = list(seeds) if seeds is not None else [-1] * len(table)
        if len(seeds) != len(table):
            raise LfsrError(f"expected {len(table)} seeds, got {len(seeds)}")
        return cls([Lfsr(n, tuple(t), s) for (n, t), s in zip(table.items(), seeds)])

    @property
    def degrees(self) -> list[int]:
        return [l.degree for l in self.lfsrs]

    def copy(self) -> "LfsrBank":
        return LfsrBank([l.copy() for l in self.lfsrs])

    def sample(self) -> int:
        word = 0
        for j, l in enumerate(self.lfsrs):
            word |= l.step() << j
        return word

    def words(self, count: int) -> np.ndarray:
        """``count`` successive words, equivalent to repeated :meth:`sample`."""
        out = np.zeros(count, dtype=np.uint16)
        for j, l in enumerate(self.lfsrs):
            out |= l.output_bits(count).astype(np.uint16) << j
        return out


def bank_sample(bank: LfsrBank) -> tuple[int, LfsrBank]:
    nxt = bank.copy()
    return nxt.sample(), nxt


def combined_period(degrees: Sequence[int]) -> int:
    """Product of the individual m-sequence periods.

    This equals the true joint period only when the periods are pairwise
    coprime; see :func:`joint_period` for the general value.
    """
    return prod((1 << n) - 1 for n in degrees)


def joint_period(degrees: Sequence[int]) -> int:
    """Least common multiple of the individual maximal periods."""
    return reduce(lambda a, b: a * b // gcd(a, b), ((1 << n) - 1 for n in degrees), 1)


def joint_period_bruteforce(lfsrs: Sequence[Lfsr], limit: int = 10_000_000) -> int:
    """Step all registers together until the joint state repeats."""
    regs = [l.copy() for l in lfsrs]
    start = tuple(r.state for r in regs)
    for k in range(1, limit + 1):
        for r in regs:
            r.step()
        if tuple(r.state for r in regs) == start:
            return k
    return 0


def random_codes(bank: LfsrBank, count: int) -> np.ndarray:
    if count < 1:
        raise LfsrError(f"count must be positive, got {count}")
    return bank.words(count)


def random_parameters(bank: LfsrBank, count: int, mapping: CodeMapping | None = None):
    """``count`` timing parameters whose codes are the bank's next words."""
    mapping = mapping or CodeMapping()
    mapping.validate(1 << WORD_BITS)
    return mapping.to_parameters(random_codes(bank, count))
