"""Exact integer arithmetic for 64-bit inputs.

Base-p digits, the digit-domination and carry criteria used by the
generation checks, deterministic primality, factorization and repunit
detection.  Digit vectors are little-endian: index i holds the
coefficient of p**i.
"""

from __future__ import annotations

import math
from typing import NamedTuple

U64_MAX = 2**64 - 1

Factorization = list[tuple[int, int]]


class RepunitForm(NamedTuple):
    q: int
    length: int


def _small_primes(limit: int) -> list[int]:
    flags = bytearray(b"\x01") * (limit + 1)
    flags[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(limit) + 1):
        if flags[i]:
            flags[i * i :: i] = bytes(len(range(i * i, limit + 1, i)))
    return [i for i, v in enumerate(flags) if v]


TRIAL_BOUND = 100_000
SMALL_PRIMES = _small_primes(TRIAL_BOUND)
_SMALL_PRIME_SET = frozenset(SMALL_PRIMES)

# (exclusive upper limit, bases) pairs; each base set is deterministic below its limit.
_MR_BASES = (
    (2_047, (2,)),
    (1_373_653, (2, 3)),
    (25_326_001, (2, 3, 5)),
    (3_215_031_751, (2, 3, 5, 7)),
    (2_152_302_898_747, (2, 3, 5, 7, 11)),
    (3_474_749_660_383, (2, 3, 5, 7, 11, 13)),
    (341_550_071_728_321, (2, 3, 5, 7, 11, 13, 17)),
    (3_825_123_056_546_413_051, (2, 3, 5, 7, 11, 13, 17, 19, 23)),
    (2**64, (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)),
)


def _check_u64(n: int) -> None:
    if n > U64_MAX:
        raise ValueError(f"{n} exceeds the 64-bit input range")


def base_digits(n: int, p: int) -> list[int]:
    """Little-endian base-``p`` digits of ``n``; ``[]`` for zero."""
    if p < 2:
        raise ValueError(f"base must be >= 2, got {p}")
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    digits = []
    while n:
        n, d = divmod(n, p)
        digits.append(d)
    return digits


def from_digits(digits: list[int], p: int) -> int:
    value = 0
    for d in reversed(digits):
        value = value * p + d
    return value


def digits_dominated(i: int, n: int, p: int) -> bool:
    """True iff every base-p digit of i is at most the matching digit of n.

    By Kummer's theorem this is exactly the condition that p does not
    divide C(n, i).
    """
    if i > n:
        raise ValueError(f"i = {i} exceeds n = {n}")
    if i < 0:
        raise ValueError(f"i must be non-negative, got {i}")
    while i:
        if i % p > n % p:
            return False
        i //= p
        n //= p
    return True


def digit_convolution(d: int, e: int, p: int) -> list[int]:
    """Unreduced product of the base-p digit polynomials of d and e."""
    dd = base_digits(d, p)
    ee = base_digits(e, p)
    if not dd or not ee:
        return []
    out = [0] * (len(dd) + len(ee) - 1)
    for i, x in enumerate(dd):
        if x:
            for j, y in enumerate(ee):
                out[i + j] += x * y
    return out


def carry_free_product(d: int, e: int, p: int) -> bool:
    """True iff multiplying d by e in base p produces no carry."""
    return all(c < p for c in digit_convolution(d, e, p))


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality for ``n <= 2**64 - 1``."""
    if n < 2:
        return False
    if n <= TRIAL_BOUND:
        return n in _SMALL_PRIME_SET
    _check_u64(n)
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return False
    d = n - 1
    s = (d & -d).bit_length() - 1
    d >>= s
    for limit, bases in _MR_BASES:
        if n < limit:
            break
    for a in bases:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _brent_split(n: int) -> int:
    """Nontrivial factor of the odd composite ``n`` by Pollard-Brent rho.

    Seeds are tried in a fixed order so results are reproducible.
    """
    for c in range(1, 200):
        y, m, g, r, q = 2, 128, 1, 1, 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
    raise RuntimeError(f"rho failed to split {n}")


def _split_all(n: int, out: dict[int, int]) -> None:
    if n == 1:
        return
    if is_prime(n):
        out[n] = out.get(n, 0) + 1
        return
    root = math.isqrt(n)
    if root * root == n:
        _split_all(root, out)
        _split_all(root, out)
        return
    f = _brent_split(n)
    _split_all(f, out)
    _split_all(n // f, out)


def factorize(n: int, trial_bound: int = TRIAL_BOUND) -> Factorization:
    """Complete factorization of ``n`` as ascending ``(prime, exponent)`` pairs."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    _check_u64(n)
    found: dict[int, int] = {}
    for p in SMALL_PRIMES:
        if p > trial_bound or p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            found[p] = e
    if n > 1:
        if n <= trial_bound or is_prime(n):
            found[n] = found.get(n, 0) + 1
        else:
            _split_all(n, found)
    return sorted(found.items())


def largest_prime_power_divisor(f: Factorization) -> tuple[int, int, int]:
    if not f:
        raise ValueError("empty factorization has no prime-power divisor")
    p, a = max(f, key=lambda pe: pe[0] ** pe[1])
    return p, a, p**a


def prime_power_parts(f: Factorization) -> list[tuple[int, int, int]]:
    """All ``(p, a, p**a)`` of a factorization, largest value first."""
    return sorted(((p, a, p**a) for p, a in f), key=lambda t: -t[2])


def integer_root(n: int, k: int) -> int:
    """Floor of the k-th root of a non-negative integer."""
    if n < 2 or k == 1:
        return n
    x = int(round(n ** (1.0 / k)))
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def prime_power_base(n: int) -> tuple[int, int] | None:
    """``(p, a)`` with ``n == p**a`` and p prime, or None."""
    if n < 2:
        return None
    for a in range(n.bit_length(), 0, -1):
        p = integer_root(n, a)
        if p >= 2 and p**a == n and is_prime(p):
            return p, a
    return None


def repunit_value(q: int, length: int) -> int:
    return (q**length - 1) // (q - 1)


def repunit_forms(k: int) -> list[RepunitForm]:
    """All ``(q, length)`` with length >= 2 and ``1 + q + ... + q**(length-1) == k``."""
    forms = []
    length = 2
    while 2**length - 1 <= k:
        # q**(length-1) < k <= (q+1)**(length-1) leaves two choices for q.
        root = integer_root(k, length - 1)
        for q in (root - 1, root):
            if q >= 2 and repunit_value(q, length) == k:
                forms.append(RepunitForm(q, length))
        length += 1
    forms.sort()
    return forms


def repunit_length(n: int, q: int) -> int | None:
    """Length j >= 1 with n = 1 + q + ... + q**(j-1), or None."""
    length, v, term = 0, 0, 1
    while v < n:
        v += term
        term *= q
        length += 1
    return length if v == n else None


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def integer_sqrt(n: int) -> int:
    return math.isqrt(n)
