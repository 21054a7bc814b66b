"""Count Phase-1 leftovers per decade and compare with sqrt(m).

Leftovers are expected to grow roughly like the square root of the range end.
"""

import argparse
import math
import tempfile
from pathlib import Path

from invgen.driver import RunConfig, run_range
from invgen.records import parse_leftover, read_records


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-exp", type=int, default=8)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "leftovers.jsonl"
        stats = run_range(RunConfig(start=5, end=10**args.max_exp,
                                    workers=args.workers, leftovers_path=path))
        ns = [rec.n for rec in read_records(path, parse_leftover)]
    print(f"{'m':>12} {'leftovers<=m':>14} {'sqrt(m)':>10} {'ratio':>8}")
    for e in range(2, args.max_exp + 1):
        m = 10**e
        count = sum(1 for n in ns if n <= m)
        print(f"{m:>12} {count:>14} {math.isqrt(m):>10} {count / math.sqrt(m):>8.3f}")
    print(f"unresolved: {stats.unresolved_count}, wall time {stats.wall_time:.1f} s")


if __name__ == "__main__":
    main()
