import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invgen.arith import base_digits, factorize, is_prime, prime_power_base
from invgen.driver import RunConfig, run_range
from invgen.genchecks import (
    PHASE1,
    PHASE2,
    PRIME_POWER,
    SMALL_CASE,
    Blocked,
    LeftoverRecord,
    Phase2Candidate,
    Witness,
    _ls_ok,
    base_p_cycle_type,
    binomial_cover,
    certify,
    check_candidate,
    cycle_type_is_even,
    cycle_type_size,
    enumerate_candidates,
    imprimitivity_excluded,
    intransitivity_excluded,
    ls_primitive_excluded,
    p_power_cycle_type,
    phase1_check,
    phase2_search,
    prime_power_witness,
    small_case_witness,
    verify_witness,
)
from invgen.records import parse_witness, read_records

from oracles import binom_mod_lucas, convolution, digits, eratosthenes, trial_factor

N1 = 199445521968
CAND_31416 = Phase2Candidate(4, 7853, 4)
CAND_N1 = Phase2Candidate(359, 555558557, 5)


@pytest.fixture(scope="module")
def leftover_witnesses(tmp_path_factory):
    path = tmp_path_factory.mktemp("run") / "witnesses.jsonl"
    stats = run_range(RunConfig(start=5, end=10**7, witnesses_path=path))
    assert stats.unresolved_count == 0
    return list(read_records(path, parse_witness))


# ---------------------------------------------------------------- phase 1


def test_phase1_24():
    assert phase1_check(24, 19, 8, True) == Witness(24, PHASE1, 19, 2, 3)


def test_phase1_31416_is_leftover():
    assert phase1_check(31416, 31397, 17, True) == LeftoverRecord(31416, 17, True)


def test_phase1_6_is_leftover():
    assert isinstance(phase1_check(6, 3, 3, True), LeftoverRecord)


def test_phase1_pass_from_lower_bound_reports_exact_divisor():
    # 2 * 1000003 is not 64-power-smooth; r + B > n certifies it anyway.
    n = 2 * 1000003
    r = max(x for x in range(n - 3, n - 200, -1) if is_prime(x))
    w = phase1_check(n, r, 64, False)
    assert w.kind == PHASE1 and w.p**w.a == 1000003


def test_phase1_twin_clause():
    # 21 - 2 = 19 is prime, 20 is not a power of two, lppd(21) = 7.
    assert phase1_check(21, 19, 7, True) == Witness(21, PHASE1, 19, 7, 1)


def test_phase1_matches_lemma_brute_force():
    top = 10**5
    flags = eratosthenes(top)
    prev = [0] * (top + 1)
    for x in range(2, top + 1):
        prev[x] = x if flags[x] else prev[x - 1]
    for n in range(25, top + 1):
        lppd = max(p**e for p, e in trial_factor(n).items())
        # The largest prime below n - 2 is the best r for the strict clause.
        strict = prev[n - 3] + lppd > n
        twin = bool(flags[n - 2]) and (n - 1) & (n - 2) != 0 and lppd >= 3
        got = isinstance(phase1_check(n, prev[n - 2], lppd, True), Witness)
        assert got == (strict or twin), n


# ---------------------------------------------------------------- small n


@pytest.mark.parametrize("n, r, p", [(6, 5, 2), (12, 11, 3), (5, 3, 5), (7, 5, 7)])
def test_small_cases(n, r, p):
    w = small_case_witness(n)
    assert (w.kind, w.r, w.p) == (SMALL_CASE, r, p)


def test_small_case_none():
    assert small_case_witness(24) is None


@pytest.mark.parametrize("n, r", [(8, 5), (9, 5), (125, 113), (2**20, 1048573)])
def test_prime_power_witness(n, r):
    w = prime_power_witness(n)
    assert w.kind == PRIME_POWER and w.r == r and verify_witness(w)


def test_prime_power_not_covered():
    assert prime_power_witness(5) is None


def test_prime_power_witness_rejects_composite():
    with pytest.raises(ValueError):
        prime_power_witness(12)


# ---------------------------------------------------------------- candidates


def test_candidates_31416_contains_example():
    assert CAND_31416 in list(enumerate_candidates(31416, 17))


def test_candidates_n1_contains_example():
    for cand in enumerate_candidates(N1, 83):
        if cand == CAND_N1:
            break
    else:
        pytest.fail("candidate (359, 555558557, 5) not produced")


def test_candidates_12_empty():
    assert list(enumerate_candidates(12, 4)) == []


@settings(max_examples=80)
@given(st.integers(30, 10**6))
def test_candidate_invariants(n):
    if prime_power_base(n) is not None:
        return
    pa = max(p**e for p, e in factorize(n))
    cands = list(enumerate_candidates(n, pa))
    assert len(set(cands)) == len(cands)
    for c, r, k in cands:
        assert is_prime(r) and c * r + k == n
        assert k < r and c < r and 3 <= k < pa
        assert r >= 2 * math.isqrt(n)


# ---------------------------------------------------------------- primitive


def test_ls_n1():
    assert ls_primitive_excluded(N1, CAND_N1) is True


def test_ls_shared_base_two():
    assert _ls_ok(31, 3) is False


@settings(max_examples=200)
@given(st.integers(10, 10**12))
def test_ls_k3_only_mersenne_blocks(n):
    assert _ls_ok(n, 3) == ((n + 1) & n != 0)


def test_ls_rejects_bad_candidate():
    with pytest.raises(ValueError):
        ls_primitive_excluded(31416, Phase2Candidate(4, 7853, 5))
    with pytest.raises(ValueError):
        ls_primitive_excluded(30, Phase2Candidate(1, 29, 1))
    with pytest.raises(ValueError):
        ls_primitive_excluded(100, Phase2Candidate(7, 13, 9))


# ---------------------------------------------------------------- blocks


def test_intransitive_31416_base17():
    assert intransitivity_excluded(31416, CAND_31416, 17) == Blocked((15708,))


def test_intransitive_31416_base11():
    assert intransitivity_excluded(31416, CAND_31416, 11) is True


def test_intransitive_n1_base83_blocked():
    res = intransitivity_excluded(N1, CAND_N1, 83)
    assert not res
    (i,) = res.data
    # Smallest dominated part; the system 2rp listed for this row is another.
    assert i == 44 * CAND_N1.r + 2
    for part in (i, 2 * 83 * CAND_N1.r):
        assert binom_mod_lucas(N1, part, 83) != 0


def test_intransitive_requires_divisor():
    with pytest.raises(ValueError):
        intransitivity_excluded(31416, CAND_31416, 13)


def _lucas_blocks(n, cand, p):
    c, r, k = cand
    parts = sorted({a * r + b for a in range(c + 1) for b in range(k + 1)} - {0, n})
    return [i for i in parts if 0 < i < n and binom_mod_lucas(n, i, p) != 0]


@settings(max_examples=150)
@given(st.integers(30, 3 * 10**4), st.data())
def test_intransitive_matches_lucas(n, data):
    odd = [p for p in trial_factor(n) if p != 2]
    if not odd:
        return
    p = data.draw(st.sampled_from(odd))
    r = data.draw(st.integers(2, n - 1).filter(is_prime))
    c, k = divmod(n, r)
    cand = Phase2Candidate(c, r, k)
    blocks = _lucas_blocks(n, cand, p)
    res = intransitivity_excluded(n, cand, p)
    assert res == (True if not blocks else Blocked((blocks[0],)))


def test_imprimitive_trivial_gcd():
    assert imprimitivity_excluded(31416, Phase2Candidate(4, 7853, 3), 17) is True


def test_imprimitive_31416_hypothetical():
    # c = 2 and k = 2 would make blocks of size 15708 admissible.
    assert imprimitivity_excluded(31416, Phase2Candidate(2, 15707, 2), 17) == Blocked((15708, 2))


def test_imprimitive_12_base3():
    assert convolution(4, 3, 3) == [0, 1, 1]
    assert imprimitivity_excluded(12, Phase2Candidate(3, 3, 3), 3) == Blocked((4, 3))


def _admissible_pairs(n, g):
    divs = [d for d in range(2, n // 2 + 1) if n % d == 0]
    return [(d, n // d) for d in divs if g % d == 0 or g % (n // d) == 0]


def _carry_free_oracle(d, e, p):
    return digits(d * e, p) == convolution(d, e, p)


@settings(max_examples=200)
@given(st.integers(6, 20000), st.integers(1, 60), st.integers(1, 60), st.sampled_from([3, 5, 7, 11]))
def test_imprimitive_matches_divisor_enumeration(n, c, k, p):
    g = math.gcd(c, k)
    res = imprimitivity_excluded(n, Phase2Candidate(c, n, k), p)
    free = [pair for pair in _admissible_pairs(n, g) if _carry_free_oracle(*pair, p)]
    assert (res is True) == (not free)
    if res is not True:
        d, e = res.data
        assert d * e == n and _carry_free_oracle(d, e, p)


# ---------------------------------------------------------------- check and search


def test_check_candidate_examples():
    rej = check_candidate(31416, CAND_31416, 17, 1)
    assert (rej.accepted, rej.reason, rej.data) == (False, "intransitive", (15708,))
    assert check_candidate(31416, CAND_31416, 11, 1).accepted


def test_check_candidate_n1_table():
    expected = {83: False, 53: False, 47: False, 29: True, 11: False, 7: True, 3: True}
    for p, ok in expected.items():
        a = dict(factorize(N1))[p]
        v = check_candidate(N1, CAND_N1, p, a)
        assert v.accepted is ok, p
        if not ok:
            assert v.reason == "intransitive"


def test_check_candidate_rejects_even_p():
    with pytest.raises(ValueError):
        check_candidate(31416, CAND_31416, 2, 3)


def test_phase2_31416():
    w = phase2_search(31416)
    assert w.kind == PHASE2 and w.p in (17, 11) and verify_witness(w)


def test_phase2_12_unresolved():
    assert phase2_search(12) is None


def test_phase2_n1_needs_fourth_rank():
    w = phase2_search(N1)
    assert w.p_rank == 4 and w.p == 29 and verify_witness(w)
    assert phase2_search(N1, depth=3) == w


def test_phase2_guards():
    assert phase2_search(24) is None
    assert phase2_search(2**10) is None


def test_certify_small_and_phase1():
    assert certify(6).kind == SMALL_CASE
    assert certify(24) == Witness(24, PHASE1, 19, 2, 3)
    with pytest.raises(ValueError):
        certify(4)


# ---------------------------------------------------------------- cycle types


@pytest.mark.parametrize("n, p, a, expected", [
    (21, 7, 1, ((7, 3),)),
    (12, 2, 2, ((4, 1), (8, 1))),
    (24, 2, 3, ((8, 1), (16, 1))),
    (16, 2, 2, ((4, 4),)),
])
def test_p_power_cycle_type(n, p, a, expected):
    assert p_power_cycle_type(n, p, a) == expected


def test_p_power_cycle_type_rejects():
    with pytest.raises(ValueError):
        p_power_cycle_type(8, 2, 3)


@pytest.mark.parametrize("n, p, expected", [
    (31416, 11, ((11, 7), (121, 6), (1331, 1), (14641, 2))),
    (13, 13, ((13, 1),)),
    (N1, 83, tuple((83**i, m) for i, m in enumerate([30, 72, 44, 52, 50], start=1))),
])
def test_base_p_cycle_type(n, p, expected):
    assert base_p_cycle_type(n, p) == expected


def test_base_p_cycle_type_rejects_two():
    with pytest.raises(ValueError):
        base_p_cycle_type(10, 2)


@given(st.integers(1, 10**6), st.sampled_from([2, 3, 5, 7, 11, 13]), st.integers(1, 6))
def test_p_power_cycle_type_invariants(m, p, a):
    n = m * p**a
    if m < 2:
        return
    ct = p_power_cycle_type(n, p, a)
    assert cycle_type_size(ct) == n and cycle_type_is_even(ct)
    for length, _ in ct:
        assert length >= p**a and prime_power_base(length)[0] == p


@given(st.integers(1, 10**12), st.sampled_from([3, 5, 7, 11, 13, 83]))
def test_base_p_cycle_type_invariants(n, p):
    ct = base_p_cycle_type(n, p)
    assert cycle_type_size(ct) == n
    assert dict(ct).get(1, 0) == base_digits(n, p)[0]
    assert cycle_type_is_even(ct)


# ---------------------------------------------------------------- cover


@pytest.mark.parametrize("n, p, r, expected", [(7, 7, 5, True), (24, 2, 19, True), (10, 2, 7, False)])
def test_binomial_cover_examples(n, p, r, expected):
    assert binomial_cover(n, p, r) is expected


@settings(max_examples=150)
@given(st.integers(2, 3000), st.sampled_from([2, 3, 5, 7]), st.sampled_from([11, 13, 17, 19, 23]))
def test_binomial_cover_matches_loop(n, p, r):
    expected = all(binom_mod_lucas(n, k, p) == 0 or binom_mod_lucas(n, k, r) == 0
                   for k in range(1, n))
    assert binomial_cover(n, p, r) is expected


# ---------------------------------------------------------------- verification


def test_verify_examples():
    assert verify_witness(Witness(24, PHASE1, 19, 2, 3))
    assert not verify_witness(Witness(24, PHASE1, 23, 2, 3))
    assert not verify_witness(Witness(31416, PHASE2, 7853, 17, 1, 4, 4, 1))
    assert verify_witness(Witness(31416, PHASE2, 7853, 11, 1, 4, 4, 2))


@pytest.mark.parametrize("change", [
    {"r": 7853 + 2}, {"p": 7}, {"a": 2}, {"c": 3}, {"k": 5}, {"p_rank": 1}, {"n": 31418},
])
def test_verify_rejects_corruption(change):
    good = Witness(31416, PHASE2, 7853, 11, 1, 4, 4, 2)
    assert not verify_witness(dataclasses.replace(good, **change))


@pytest.mark.parametrize("w", [
    Witness(24, "phase3", 19, 2, 3),
    Witness(24, PHASE1, 19, 2, 3, c=1),
    Witness(31416, PHASE2, 7853, 11, 1, 4, None, 2),
    Witness(24, PHASE1, 19.0, 2, 3),
    Witness(3, PHASE1, 2, 3, 1),
])
def test_verify_rejects_malformed(w):
    with pytest.raises(ValueError):
        verify_witness(w)


def test_verify_small_case_table():
    assert verify_witness(Witness(12, SMALL_CASE, 11, 3, 1))
    assert not verify_witness(Witness(12, SMALL_CASE, 7, 3, 1))


def test_every_witness_verifies_small_range():
    for n in range(5, 3000):
        w = certify(n)
        assert w is not None and verify_witness(w), n


def test_leftover_witnesses_to_1e7(leftover_witnesses):
    assert len(leftover_witnesses) == 2115
    for w in leftover_witnesses:
        assert verify_witness(w), w


def test_leftover_intransitivity_by_lucas(leftover_witnesses):
    for w in leftover_witnesses:
        assert _lucas_blocks(w.n, Phase2Candidate(w.c, w.r, w.k), w.p) == [], w


def test_leftover_imprimitivity_by_divisors(leftover_witnesses):
    for w in leftover_witnesses:
        g = math.gcd(w.c, w.k)
        if g == 1:
            continue
        for d, e in _admissible_pairs(w.n, g) if w.n < 10**5 else _pairs_from_factors(w.n, g):
            assert not _carry_free_oracle(d, e, w.p), (w, d, e)


def _pairs_from_factors(n, g):
    divs = [1]
    for p, e in trial_factor(n).items():
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return [(d, n // d) for d in sorted(divs)
            if 2 <= d <= n // 2 and (g % d == 0 or g % (n // d) == 0)]
