"""Certify the five integers that need a smaller prime-power divisor.

Prints one witness line per integer plus the rank of the prime power used.
"""

import argparse
import time

from invgen.genchecks import phase2_search, verify_witness
from invgen.records import witness_to_line

EXCEPTIONAL = (199445521968, 5760706652536, 6421990708848, 22062987063208, 138057417511650)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("n", nargs="*", type=int, default=list(EXCEPTIONAL))
    parser.add_argument("--depth", type=int, default=2, help="ranks tried before escalation")
    args = parser.parse_args()
    for n in args.n:
        t = time.perf_counter()
        w = phase2_search(n, depth=args.depth)
        dt = time.perf_counter() - t
        if w is None:
            print(f"{n}: unresolved ({dt:.2f} s)")
            continue
        print(f"{witness_to_line(w)}  # verified={verify_witness(w)} {dt:.2f} s")


if __name__ == "__main__":
    main()
