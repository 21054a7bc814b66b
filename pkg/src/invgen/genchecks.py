"""Decision procedures certifying that A_n is invariably generated by an
element of prime order r and an element of prime-power order.

Every certificate is a :class:`Witness`.  Rejections are conservative: a
candidate is rejected as soon as one of the exclusion tests cannot rule out
a maximal subgroup, without confirming that the subgroup really exists.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from invgen.arith import (
    Factorization,
    base_digits,
    carry_free_product,
    factorize,
    integer_sqrt,
    is_power_of_two,
    is_prime,
    largest_prime_power_divisor,
    prime_power_base,
    prime_power_parts,
    repunit_forms,
    repunit_length,
)

SMALL_CASE = "small-case"
PRIME_POWER = "prime-power"
PHASE1 = "phase1"
PHASE2 = "phase2"
KINDS = (SMALL_CASE, PRIME_POWER, PHASE1, PHASE2)

# n -> (r, p, a).  6 and 12 escape both phases.  For 5 and 7 the prime-power
# route needs a prime in (n/2, n-3], which is empty; the pairs below hold
# because no maximal subgroup of A_5 (A_4, D_10, S_3) has order divisible
# by 15 and none of A_7 (A_6, PSL(2,7) twice, S_5, (A_4 x 3):2) by 35.
SMALL_CASES = {5: (3, 5, 1), 6: (5, 2, 1), 7: (5, 7, 1), 12: (11, 3, 1)}

DEFAULT_P_DEPTH = 2

# Largest block of integers materialized at once by the vectorized digit scans.
_BLOCK = 1 << 18


@dataclass(frozen=True)
class Witness:
    n: int
    kind: str
    r: int
    p: int
    a: int
    c: int | None = None
    k: int | None = None
    p_rank: int | None = None


@dataclass(frozen=True)
class LeftoverRecord:
    n: int
    lppd: int
    smooth: bool


class Phase2Candidate(NamedTuple):
    c: int
    r: int
    k: int


@dataclass(frozen=True)
class Blocked:
    """A subgroup obstruction that could not be excluded; falsy."""

    data: tuple

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str | None = None
    data: tuple = ()


CycleType = tuple[tuple[int, int], ...]


def prev_prime(x: int) -> int:
    """Largest prime <= x, or 0 when there is none."""
    while x >= 2:
        if is_prime(x):
            return x
        x -= 1
    return 0


# ---------------------------------------------------------------- small n


def small_case_witness(n: int) -> Witness | None:
    if n not in SMALL_CASES:
        return None
    r, p, a = SMALL_CASES[n]
    return Witness(n, SMALL_CASE, r, p, a)


def prime_power_witness(n: int) -> Witness | None:
    """An r-cycle with n/2 < r <= n-3 plus a p-element, when n = p**a.

    Returns None if that interval holds no prime.
    """
    pa = prime_power_base(n)
    if pa is None:
        raise ValueError(f"{n} is not a prime power")
    r = prev_prime(n - 3)
    if 2 * r <= n:
        return None
    return Witness(n, PRIME_POWER, r, pa[0], pa[1])


# ---------------------------------------------------------------- phase 1


def phase1_passes(n: int, r: int, lppd: int, r_prev: int | None = None) -> int | None:
    """The prime r certifying n under the sieve lemma, or None.

    ``r`` is the largest prime <= n - 2.  When r = n - 2 but n - 1 is a power
    of two, the prime preceding n - 2 (``r_prev``) is tried instead.
    """
    if r < n - 2:
        return r if r + lppd > n else None
    if not is_power_of_two(n - 1) and lppd >= 3:
        return r
    if r_prev is None:
        r_prev = prev_prime(n - 3)
    return r_prev if r_prev + lppd > n else None


def phase1_check(n: int, r: int, lppd: int, smooth: bool,
                 r_prev: int | None = None) -> Witness | LeftoverRecord:
    """Phase-1 predicate; a Witness on success, else the leftover record.

    A lower-bound lppd (``smooth`` false) can only understate the true
    divisor, so a pass stays sound; the witness then carries the exact one.
    """
    r_ok = phase1_passes(n, r, lppd, r_prev)
    if r_ok is None:
        return LeftoverRecord(n, lppd, smooth)
    if smooth:
        p, a = prime_power_base(lppd)
    else:
        p, a, _ = largest_prime_power_divisor(factorize(n))
    return Witness(n, PHASE1, r_ok, p, a)


# ---------------------------------------------------------------- phase 2


def enumerate_candidates(n: int, pa: int) -> Iterator[Phase2Candidate]:
    """Products c*r strictly between n - pa and n - 2, with r prime >= 2*isqrt(n).

    First c = 2 .. pa//2 with r descending; then the prime factors of every
    integer in the window, ordered by c ascending and r descending.
    """
    floor_r = 2 * integer_sqrt(n)
    seen = set()
    for c in range(2, pa // 2 + 1):
        lo = max((n - pa) // c + 1, floor_r)
        for r in range((n - 3) // c, lo - 1, -1):
            if is_prime(r):
                k = n - c * r
                if k < r and c < r:
                    seen.add((c, r))
                    yield Phase2Candidate(c, r, k)
    extra = []
    for t in range(n - 3, n - pa, -1):
        for q, _ in factorize(t):
            if q >= floor_r and (t // q, q) not in seen:
                c, k = t // q, n - t
                if k < q and c < q:
                    extra.append(Phase2Candidate(c, q, k))
    extra.sort(key=lambda cand: (cand.c, -cand.r))
    yield from extra


def ls_primitive_excluded(n: int, cand: Phase2Candidate) -> bool:
    """True iff no common q makes both n and k repunits with n the longer one.

    That shape is the only primitive overgroup left once r >= 2*sqrt(n),
    k >= 3, n != 24 and n is not a prime power.
    """
    c, r, k = cand
    if c * r + k != n or not 0 < k < r:
        raise ValueError(f"{cand} is not a base-r digit pair of {n}")
    if r < 2 * integer_sqrt(n) or k < 3 or n == 24 or prime_power_base(n) is not None:
        raise ValueError(f"{cand} for n = {n} is outside the excluded primitive cases")
    return _ls_ok(n, k)


def _ls_ok(n: int, k: int) -> bool:
    # Both repunits in base q force q | gcd(n - 1, k - 1).
    if math.gcd(n - 1, k - 1) == 1:
        return True
    for q, length in repunit_forms(k):
        n_len = repunit_length(n, q)
        if n_len is not None and n_len > length:
            return False
    return True


def imprimitivity_excluded(n: int, cand: Phase2Candidate, p: int) -> bool | Blocked:
    """Every admissible block system forces a carry in base p.

    Block sizes d with e = n/d blocks are admissible when d or e divides
    gcd(c, k).  Returns ``Blocked((d, e))`` for the first carry-free pair.
    """
    g = math.gcd(cand.c, cand.k)
    for d0 in range(2, g + 1):
        if g % d0 == 0 and n % d0 == 0 and n // d0 >= 2:
            if carry_free_product(n // d0, d0, p):
                return Blocked((n // d0, d0))
    return True


def _dominated_mask(values: np.ndarray, n: int, p: int) -> np.ndarray:
    ok = np.ones(len(values), dtype=bool)
    rest = values.copy()
    for digit in base_digits(n, p):
        ok &= rest % p <= digit
        rest //= p
        if not rest.any():
            break
    return ok & (rest == 0)


def _dominated_count(n: int, p: int) -> int:
    return math.prod(d + 1 for d in base_digits(n, p))


def _dominated_chunks(n: int, p: int) -> Iterator[np.ndarray]:
    """All i digit-dominated by n in base p, ascending, in bounded chunks."""
    digits = base_digits(n, p)
    low = np.zeros(1, dtype=np.int64)
    place = 0
    while place < len(digits) and len(low) * (digits[place] + 1) <= _BLOCK:
        steps = np.arange(digits[place] + 1, dtype=np.int64) * p**place
        low = (steps[:, None] + low[None, :]).ravel()
        place += 1
    high = [range(d + 1) for d in digits[place:]]
    for combo in itertools.product(*reversed(high)):
        offset = sum(d * p ** (place + j) for j, d in enumerate(reversed(combo)))
        yield low + offset


def _first_intransitive_part(n: int, cand: Phase2Candidate, p: int) -> int | None:
    c, r, k = cand
    if _dominated_count(n, p) < (c + 1) * (k + 1):
        for block in _dominated_chunks(n, p):
            hit = (block % r <= k) & (block > 0) & (block < n)
            if hit.any():
                return int(block[np.argmax(hit)])
        return None
    bs = np.arange(k + 1, dtype=np.int64)
    rows = max(1, _BLOCK // (k + 1))
    for a0 in range(0, c + 1, rows):
        a = np.arange(a0, min(c + 1, a0 + rows), dtype=np.int64)
        parts = (a[:, None] * r + bs[None, :]).ravel()
        hit = _dominated_mask(parts, n, p) & (parts > 0) & (parts < n)
        if hit.any():
            return int(parts[np.argmax(hit)])
    return None


def intransitivity_excluded(n: int, cand: Phase2Candidate, p: int) -> bool | Blocked:
    """No set size a*r + b (a <= c, b <= k) is fixed by a base-p element.

    A base-p element fixes a set of size i iff p does not divide C(n, i).
    Returns ``Blocked((i,))`` with the smallest such i otherwise.
    """
    if n % p:
        raise ValueError(f"{p} does not divide {n}")
    i = _first_intransitive_part(n, cand, p)
    return True if i is None else Blocked((i,))


def check_candidate(n: int, cand: Phase2Candidate, p: int, a: int) -> Verdict:
    if p == 2 or n % p**a:
        raise ValueError(f"need an odd prime power {p}**{a} dividing {n}")
    if not ls_primitive_excluded(n, cand):
        return Verdict(False, "primitive", (cand.k,))
    return _check_blocks(n, cand, p)


def _check_blocks(n: int, cand: Phase2Candidate, p: int) -> Verdict:
    # A fixed set is reported ahead of a block system it may also induce.
    res = intransitivity_excluded(n, cand, p)
    if not res:
        return Verdict(False, "intransitive", res.data)
    res = imprimitivity_excluded(n, cand, p)
    if not res:
        return Verdict(False, "imprimitive", res.data)
    return Verdict(True)


class _LazyList:
    """Memoizes a generator so it can be walked more than once."""

    def __init__(self, it: Iterator):
        self._it = it
        self._items: list = []

    def __iter__(self):
        i = 0
        while True:
            if i < len(self._items):
                yield self._items[i]
            else:
                try:
                    item = next(self._it)
                except StopIteration:
                    return
                self._items.append(item)
                yield item
            i += 1


def odd_prime_powers(f: Factorization) -> list[tuple[int, int, int]]:
    return [t for t in prime_power_parts(f) if t[0] != 2]


def phase2_search(n: int, f: Factorization | None = None,
                  depth: int = DEFAULT_P_DEPTH) -> Witness | None:
    """Search (c, r, p) passing all three exclusion tests.

    Candidates are paired with the ``depth`` largest odd prime-power
    divisors first.  If that fails, each smaller odd divisor is tried in
    turn against the whole candidate stream, so the reported ``p_rank`` is
    the smallest rank that works.  None means unresolved.
    """
    if n == 24 or n < 5 or prime_power_base(n) is not None:
        return None
    if f is None:
        f = factorize(n)
    _, _, pa = largest_prime_power_divisor(f)
    odd = odd_prime_powers(f)
    cands = _LazyList(
        cand for cand in enumerate_candidates(n, pa) if cand.k >= 3 and _ls_ok(n, cand.k)
    )

    def accept(cand, rank):
        p, a, _ = odd[rank - 1]
        if _check_blocks(n, cand, p).accepted:
            return Witness(n, PHASE2, cand.r, p, a, cand.c, cand.k, rank)
        return None

    first = list(range(1, min(depth, len(odd)) + 1))
    for cand in cands:
        for rank in first:
            w = accept(cand, rank)
            if w:
                return w
    for rank in range(len(first) + 1, len(odd) + 1):
        for cand in cands:
            w = accept(cand, rank)
            if w:
                return w
    return None


# ---------------------------------------------------------------- per-n pipeline


def certify(n: int, depth: int = DEFAULT_P_DEPTH) -> Witness | None:
    """Full certificate for a single n using exact factorization."""
    if n < 5:
        raise ValueError(f"n must be >= 5, got {n}")
    w = small_case_witness(n)
    if w:
        return w
    if prime_power_base(n) is not None:
        return prime_power_witness(n)
    f = factorize(n)
    _, _, lppd = largest_prime_power_divisor(f)
    res = phase1_check(n, prev_prime(n - 2), lppd, True)
    if isinstance(res, Witness):
        return res
    return phase2_search(n, f, depth)


# ---------------------------------------------------------------- cycle types


def _cycle_type(counts: dict[int, int]) -> CycleType:
    return tuple(sorted((length, m) for length, m in counts.items() if m))


def p_power_cycle_type(n: int, p: int, a: int) -> CycleType:
    """Even, fixed-point-free p-element whose cycles all have length >= p**a."""
    pa = p**a
    if n % pa or n <= pa:
        raise ValueError(f"need {p}**{a} to be a proper divisor of {n}")
    m = n // pa
    if p == 2 and m % 2:
        ct = _cycle_type({pa: m - 2, 2 * pa: 1})
    else:
        ct = _cycle_type({pa: m})
    if not cycle_type_is_even(ct) or cycle_type_size(ct) != n:
        raise AssertionError(f"internal invariant: bad cycle type {ct} for n = {n}")
    return ct


def base_p_cycle_type(n: int, p: int) -> CycleType:
    """alpha_i cycles of length p**i, alpha the base-p digits of n."""
    if p == 2:
        raise ValueError("base-2 elements are not supported")
    return _cycle_type({p**i: d for i, d in enumerate(base_digits(n, p))})


def cycle_type_size(ct: CycleType) -> int:
    return sum(length * m for length, m in ct)


def cycle_type_is_even(ct: CycleType) -> bool:
    return sum((length - 1) * m for length, m in ct) % 2 == 0


# ---------------------------------------------------------------- checking


def binomial_cover(n: int, p: int, r: int) -> bool:
    """True iff every C(n, k) with 0 < k < n is divisible by p or by r.

    Walks the smaller of the two digit-dominated sets instead of all k.
    """
    if _dominated_count(n, r) < _dominated_count(n, p):
        p, r = r, p
    for block in _dominated_chunks(n, p):
        hit = _dominated_mask(block, n, r) & (block > 0) & (block < n)
        if hit.any():
            return False
    return True


def _require_int(w: Witness, name: str, minimum: int) -> int:
    v = getattr(w, name)
    if type(v) is not int or v < minimum:
        raise ValueError(f"witness field {name} = {v!r} is malformed")
    return v


def verify_witness(w: Witness) -> bool:
    """Re-derive every witness invariant from scratch."""
    if w.kind not in KINDS:
        raise ValueError(f"unknown witness kind {w.kind!r}")
    n = _require_int(w, "n", 5)
    r = _require_int(w, "r", 2)
    p = _require_int(w, "p", 2)
    a = _require_int(w, "a", 1)
    phase2_fields = (w.c, w.k, w.p_rank)
    if w.kind == PHASE2:
        c = _require_int(w, "c", 1)
        k = _require_int(w, "k", 0)
        rank = _require_int(w, "p_rank", 1)
    elif any(v is not None for v in phase2_fields):
        raise ValueError(f"{w.kind} witness carries phase-2 fields")

    if w.kind == SMALL_CASE:
        return SMALL_CASES.get(n) == (r, p, a)
    if not (is_prime(r) and is_prime(p)):
        return False
    if w.kind == PRIME_POWER:
        return prime_power_base(n) == (p, a) and n < 2 * r and r <= n - 3
    pa = p**a
    if n % pa or pa >= n:
        return False
    if w.kind == PHASE1:
        if r < n - 2:
            return n < r + pa
        return r == n - 2 and not is_power_of_two(n - 1) and pa >= 3

    f = factorize(n)
    if p == 2 or n == 24 or len(f) < 2 or dict(f)[p] != a:
        return False
    odd = odd_prime_powers(f)
    _, _, lppd = largest_prime_power_divisor(f)
    if rank > len(odd) or odd[rank - 1][0] != p:
        return False
    if k != n - c * r or not (3 <= k < r and c < r):
        return False
    if r < 2 * integer_sqrt(n) or not n - lppd < c * r < n - 2:
        return False
    cand = Phase2Candidate(c, r, k)
    return _ls_ok(n, k) and _check_blocks(n, cand, p).accepted
