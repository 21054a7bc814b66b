"""Certify, for every n in a range, that the alternating group A_n is
invariably generated by an element of prime order and an element of
prime-power order."""

from invgen.arith import base_digits, factorize, is_prime
from invgen.driver import RunConfig, RunStats, run_range
from invgen.genchecks import Witness, certify, phase2_search, verify_witness

__all__ = [
    "RunConfig",
    "RunStats",
    "Witness",
    "base_digits",
    "certify",
    "factorize",
    "is_prime",
    "phase2_search",
    "run_range",
    "verify_witness",
]
