"""Segmented sieve engine.

For every integer of a segment this computes primality, the largest
prime-power divisor when the integer is B-power-smooth (B otherwise), and
the smoothness flag.  The rolling previous-prime scan is built on the same
primality sieve.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterator

import numba
import numpy as np

from invgen.arith import _small_primes

DEFAULT_SEGMENT_LENGTH = 1 << 20
MIN_SMOOTH_BOUND = 64
MAX_RANGE_END = 2**63


class OverlapExhausted(RuntimeError):
    """No prime inside the back-overlap window; the caller should widen it."""

    def __init__(self, upper: int, window: int):
        super().__init__(f"no prime in [{upper - window}, {upper}]")
        self.upper = upper
        self.window = window


def smooth_bound_for(range_end: int, multiplier: float = 5.0) -> int:
    """B = multiplier * (log2 m)**2, floored at 64."""
    return max(MIN_SMOOTH_BOUND, int(multiplier * math.log2(range_end) ** 2))


def primes_up_to(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


@dataclass(frozen=True)
class SieveConfig:
    range_start: int
    range_end: int
    segment_length: int = DEFAULT_SEGMENT_LENGTH
    smooth_bound: int = 0
    basis_primes: np.ndarray = field(default=None, repr=False, compare=False)
    smooth_primes: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not 5 <= self.range_start <= self.range_end <= MAX_RANGE_END:
            raise ValueError(
                f"need 5 <= start <= end <= 2**63, got [{self.range_start}, {self.range_end}]"
            )
        if self.smooth_bound == 0:
            object.__setattr__(self, "smooth_bound", smooth_bound_for(self.range_end))
        if not MIN_SMOOTH_BOUND <= self.smooth_bound <= self.segment_length:
            raise ValueError(
                f"smooth bound {self.smooth_bound} must lie in [64, segment_length={self.segment_length}]"
            )
        if self.basis_primes is None:
            both = primes_up_to(max(math.isqrt(self.range_end), self.smooth_bound))
            object.__setattr__(
                self, "basis_primes", both[both <= math.isqrt(self.range_end)]
            )
            object.__setattr__(self, "smooth_primes", both[both <= self.smooth_bound])
        elif self.smooth_primes is None:
            object.__setattr__(self, "smooth_primes", primes_up_to(self.smooth_bound))

    @classmethod
    def for_range(cls, start: int, end: int, segment_length: int = DEFAULT_SEGMENT_LENGTH,
                  smooth_mult: float = 5.0) -> "SieveConfig":
        return cls(start, end, segment_length, smooth_bound_for(end, smooth_mult))


@dataclass
class SegmentScan:
    base: int
    is_prime_flags: np.ndarray
    lppd: np.ndarray
    smooth_flags: np.ndarray

    def __len__(self) -> int:
        return len(self.lppd)

    def values(self) -> np.ndarray:
        return np.arange(self.base, self.base + len(self), dtype=np.int64)


def _window_length(cfg: SieveConfig, base: int, length: int | None) -> int:
    if base < 2:
        raise ValueError(f"segment base must be >= 2, got {base}")
    if length is None:
        length = min(cfg.segment_length, cfg.range_end + 1 - base)
    if length < 0 or base + length > cfg.range_end + 1:
        raise ValueError(f"segment [{base}, {base + length}) leaves the configured range")
    return length


def _strike_composites(flags: np.ndarray, lo: int, primes: np.ndarray) -> None:
    hi = lo + len(flags)
    primes = primes[primes * primes < hi]
    # Primes below the cutoff hit the segment many times: one strided store each.
    cutoff = max(64, len(flags) // 16)
    split = int(np.searchsorted(primes, cutoff))
    for p in primes[:split].tolist():
        start = max(p * p, -(-lo // p) * p)
        if start < hi:
            flags[start - lo :: p] = False
    big = primes[split:]
    if len(big):
        start = np.maximum(big * big, -(-lo // big) * big)
        while len(big):
            live = start < hi
            big, start = big[live], start[live]
            flags[start - lo] = False
            start = start + big


def sieve_primality(cfg: SieveConfig, base: int, length: int | None = None) -> np.ndarray:
    """Primality flags for ``[base, base + length)``."""
    length = _window_length(cfg, base, length)
    flags = np.ones(length, dtype=bool)
    _strike_composites(flags, base, cfg.basis_primes)
    return flags


# Low prime powers whose contribution repeats with period WHEEL_PERIOD.
WHEEL_POWERS = ((2, 4), (3, 2), (5, 1), (7, 1), (11, 1), (13, 1))
WHEEL_PERIOD = math.prod(p**k for p, k in WHEEL_POWERS)

# Fixed-point log2 scale.  floor(LOG_SCALE * log2 p) summed over the prime
# factors of any n <= 2**63 stays below 2**16.
LOG_SCALE = 1024


@functools.cache
def _log_weight(p: int) -> int:
    w = int(LOG_SCALE * math.log2(p))
    # Guard the float against landing one above the true floor.
    while 2 ** (w / LOG_SCALE) > p:
        w -= 1
    return w


def _slot_dtype(bound: int):
    return np.uint16 if bound < 2**16 - 1 else np.uint32


@functools.cache
def _wheel(bound: int, span: int) -> np.ndarray:
    """Columns (log sum, lppd) for residues 0 .. WHEEL_PERIOD + span - 1."""
    table = np.zeros((WHEEL_PERIOD, 2), dtype=_slot_dtype(bound))
    table[:, 1] = 1
    for p, k in WHEEL_POWERS:
        w = _log_weight(p)
        for pk in (p**j for j in range(1, k + 1)):
            table[::pk, 0] += w
            col = table[::pk, 1]
            np.maximum(col, pk, out=col)
    table = np.resize(table, (WHEEL_PERIOD + span, 2))
    table.flags.writeable = False
    return table


_BLOCK_ROWS = 1 << 15


@numba.njit(cache=True, nogil=True)
def _accumulate(slots, starts, steps, weights, tops):
    """Add weights[t] and raise to tops[t] at rows starts[t] + i * steps[t].

    Rows are visited block by block so the working set stays in cache.
    """
    n = slots.shape[0]
    nxt = starts.copy()
    for lo in range(0, n, _BLOCK_ROWS):
        hi = min(lo + _BLOCK_ROWS, n)
        for t in range(starts.shape[0]):
            j = nxt[t]
            if j >= hi:
                continue
            w, top, step = weights[t], tops[t], steps[t]
            while j < hi:
                slots[j, 0] += w
                if slots[j, 1] < top:
                    slots[j, 1] = top
                j += step
            nxt[t] = j


@functools.cache
def _power_table_for(primes: tuple[int, ...], bound: int, end: int):
    pks, weights, tops = [], [], []
    skip = dict(WHEEL_POWERS)
    for p in primes:
        pk = p ** (skip.get(p, 0) + 1)
        while pk <= end:
            pks.append(pk)
            weights.append(_log_weight(p))
            tops.append(min(pk, bound + 1))
            pk *= p
    return (np.array(pks, dtype=np.uint64), np.array(weights, dtype=np.int64),
            np.array(tops, dtype=np.int64))


def _power_table(cfg: SieveConfig):
    """Prime powers p**k <= end outside the wheel, their log weights and capped values."""
    return _power_table_for(tuple(cfg.smooth_primes.tolist()), cfg.smooth_bound, cfg.range_end)


@numba.njit(cache=True, nogil=True)
def _finish(slots, ends, thresholds, bound, lppd, smooth):
    j = 0
    for t in range(ends.shape[0]):
        thr = thresholds[t]
        while j < ends[t]:
            ok = slots[j, 1] <= bound and slots[j, 0] >= thr
            smooth[j] = ok
            lppd[j] = slots[j, 1] if ok else bound
            j += 1


def _tile(cfg: SieveConfig, offset: int, length: int) -> np.ndarray:
    table = _wheel(cfg.smooth_bound, cfg.segment_length)
    if offset + length <= len(table):
        return table[offset : offset + length].copy()
    period = table[:WHEEL_PERIOD]
    rolled = np.concatenate((period[offset:], period[:offset]))
    return np.resize(rolled, (length, 2))


def scan_power_smooth(cfg: SieveConfig, base: int,
                      length: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Largest prime-power divisors and B-power-smooth flags for a segment.

    Each prime p <= B adds floor(1024 log2 p) to a fixed-point log sum at
    every multiple of p, p**2, ...  With s the B-smooth part of n, the sum
    lies within 63/1024 of 1024 log2 s, and n / s is either 1 or at least
    B + 1 > 2**6.  So comparing the sum to 1024 (log2 n - 1) decides
    s == n exactly.  n is B-power-smooth iff s == n and no recorded prime
    power exceeds B.  Non-smooth slots get lppd = B.

    The lppd array uses a narrow unsigned dtype; every value is <= B.
    """
    length = _window_length(cfg, base, length)
    hi = base + length
    bound = cfg.smooth_bound
    cap = bound + 1
    # Column 0 is the log sum, column 1 the largest prime power seen; sharing
    # rows keeps each strided update to one cache line.
    slots = _tile(cfg, base % WHEEL_PERIOD, length)
    pks, weights, tops = _power_table(cfg)
    dt = slots.dtype
    starts = (pks - np.uint64(base) % pks) % pks
    live = starts < np.uint64(length)
    _accumulate(slots, starts[live].astype(np.int64),
                np.minimum(pks[live], np.uint64(length)).astype(np.int64),
                weights[live].astype(dt), tops[live].astype(dt))
    # Within an octave [2**j, 2**(j+1)) one threshold separates the cases.
    ends, thresholds = [], []
    j = base.bit_length() - 1
    while 2**j < hi:
        ends.append(min(2 ** (j + 1), hi) - base)
        thresholds.append(LOG_SCALE * (j - 1))
        j += 1
    lppd = np.empty(length, dtype=dt)
    smooth = np.empty(length, dtype=bool)
    _finish(slots, np.array(ends, dtype=np.int64), np.array(thresholds, dtype=np.int64),
            bound, lppd, smooth)
    return lppd, smooth


def scan_segment(cfg: SieveConfig, base: int, length: int | None = None) -> SegmentScan:
    length = _window_length(cfg, base, length)
    lppd, smooth = scan_power_smooth(cfg, base, length)
    return SegmentScan(base, sieve_primality(cfg, base, length), lppd, smooth)


def prime_running_max(flags: np.ndarray, lo: int, carry: int) -> np.ndarray:
    """Largest prime <= lo + j for each j; ``carry`` stands for primes before ``lo``."""
    vals = np.where(flags, np.arange(lo, lo + len(flags), dtype=np.int64), 0)
    if len(vals):
        vals[0] = max(int(vals[0]), carry)
    return np.maximum.accumulate(vals)


def prime_at_or_below(cfg: SieveConfig, x: int, window: int) -> int:
    """Largest prime <= x, sieving only ``[x - window, x]``.

    Returns 0 when x < 2.  Raises OverlapExhausted when the window holds no
    prime and does not reach down to 2.
    """
    if x < 2:
        return 0
    lo = max(2, x - window)
    flags = np.ones(x + 1 - lo, dtype=bool)
    _strike_composites(flags, lo, cfg.basis_primes)
    hits = np.flatnonzero(flags)
    if len(hits):
        return lo + int(hits[-1])
    if lo == 2:
        return 0
    raise OverlapExhausted(x, window)


class RollingPrevPrime:
    """Yields ``(n, r)`` for ascending n in the configured range, r the largest prime <= n - 2.

    Iteration begins by locating the last prime below the first segment
    inside a back-overlap window of ``overlap`` integers (default B).
    """

    def __init__(self, cfg: SieveConfig, overlap: int | None = None):
        self.cfg = cfg
        self.overlap = cfg.smooth_bound if overlap is None else overlap

    def __iter__(self) -> Iterator[tuple[int, int]]:
        cfg = self.cfg
        carry = prime_at_or_below(cfg, cfg.range_start - 3, self.overlap)
        n = cfg.range_start
        while n <= cfg.range_end:
            length = min(cfg.segment_length, cfg.range_end + 1 - n)
            lo = n - 2
            flags = sieve_primality(cfg, lo, length)
            best = prime_running_max(flags, lo, carry)
            for j, r in enumerate(best.tolist()):
                yield n + j, r
            carry = int(best[-1])
            n += length
