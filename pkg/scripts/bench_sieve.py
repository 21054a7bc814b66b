"""Time one full segment scan against a bare segmented prime sieve."""

import argparse
import statistics
import time

import numpy as np

from invgen.sieve import SieveConfig, scan_power_smooth, scan_segment, sieve_primality


def plain_sieve(cfg: SieveConfig, base: int) -> np.ndarray:
    flags = np.ones(cfg.segment_length, dtype=bool)
    for p in cfg.basis_primes.tolist():
        flags[max(p * p, -(-base // p) * p) - base :: p] = False
    return flags


def timed(fn, reps: int) -> float:
    fn()
    times = []
    for _ in range(reps):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--end", type=float, default=1e8)
    parser.add_argument("--reps", type=int, default=9)
    args = parser.parse_args()
    end = int(args.end)
    cfg = SieveConfig.for_range(5, end)
    base = max(5, end - cfg.segment_length)
    rows = {
        "plain sieve": lambda: plain_sieve(cfg, base),
        "primality": lambda: sieve_primality(cfg, base),
        "smooth scan": lambda: scan_power_smooth(cfg, base, cfg.segment_length),
        "full segment": lambda: scan_segment(cfg, base),
    }
    plain = None
    for name, fn in rows.items():
        t = timed(fn, args.reps)
        plain = plain or t
        print(f"{name:>14}: {t * 1e3:7.2f} ms  ({t / plain:.2f}x plain)")


if __name__ == "__main__":
    main()
