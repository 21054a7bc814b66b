"""Command-line entry point.

Exit codes: 0 all verified, 1 some n unresolved (or cover fails),
2 usage or configuration error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

from invgen.driver import (
    InvariantError,
    RunConfig,
    run_phase2,
    run_range,
)
from invgen.genchecks import DEFAULT_P_DEPTH, binomial_cover, certify, verify_witness
from invgen.records import (
    failure_to_line,
    iter_lines,
    parse_leftover,
    parse_witness,
    read_records,
    witness_to_line,
)

EXIT_OK, EXIT_UNRESOLVED, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2, 3


def parse_int(text: str) -> int:
    """Integers, also written as ``10^8``, ``10**8`` or ``1e8``."""
    text = text.replace("_", "").strip()
    m = re.fullmatch(r"(\d+)(?:\^|\*\*)(\d+)", text)
    if m:
        return int(m[1]) ** int(m[2])
    m = re.fullmatch(r"(\d+)[eE](\d+)", text)
    if m:
        return int(m[1]) * 10 ** int(m[2])
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="invgen", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="only warnings on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="certify every n in a range")
    v.add_argument("--start", type=parse_int, required=True)
    v.add_argument("--end", type=parse_int, required=True)
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--chunk-length", type=parse_int, default=None)
    v.add_argument("--segment-length", type=parse_int, default=1 << 20)
    v.add_argument("--smooth-mult", type=float, default=5.0)
    v.add_argument("--p-depth", type=int, default=DEFAULT_P_DEPTH)
    v.add_argument("--witnesses", type=Path)
    v.add_argument("--leftovers", type=Path)
    v.add_argument("--failures", type=Path)
    v.add_argument("--checkpoint", type=Path)

    p2 = sub.add_parser("phase2", help="run Phase 2 over a saved leftover file")
    p2.add_argument("--input", type=Path, required=True)
    p2.add_argument("--witnesses", type=Path, help="default: stdout")
    p2.add_argument("--failures", type=Path)
    p2.add_argument("--p-depth", type=int, default=DEFAULT_P_DEPTH)

    w = sub.add_parser("witness", help="full certificate for one n")
    w.add_argument("--n", type=parse_int, required=True)
    w.add_argument("--p-depth", type=int, default=DEFAULT_P_DEPTH)

    c = sub.add_parser("check", help="re-verify every witness in a file")
    c.add_argument("--input", type=Path, required=True)

    cv = sub.add_parser("cover", help="does every nontrivial C(n, k) have p or r as a factor")
    cv.add_argument("--n", type=parse_int, required=True)
    cv.add_argument("--p", type=parse_int, required=True)
    cv.add_argument("--r", type=parse_int, required=True)
    return parser


def _cmd_verify(args) -> int:
    cfg = RunConfig(
        start=args.start, end=args.end, workers=args.workers,
        chunk_length=args.chunk_length, segment_length=args.segment_length,
        smooth_mult=args.smooth_mult, p_depth=args.p_depth,
        checkpoint_path=args.checkpoint, witnesses_path=args.witnesses,
        leftovers_path=args.leftovers, failures_path=args.failures,
    )
    stats = run_range(cfg)
    print(json.dumps(stats.as_dict()))
    return EXIT_OK if stats.unresolved_count == 0 else EXIT_UNRESOLVED


def _cmd_phase2(args) -> int:
    res = run_phase2(read_records(args.input, parse_leftover), args.p_depth)
    out = open(args.witnesses, "w", encoding="utf-8") if args.witnesses else sys.stdout
    try:
        for w in res.witnesses:
            out.write(witness_to_line(w) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if args.failures:
        with open(args.failures, "w", encoding="utf-8") as fh:
            fh.writelines(failure_to_line(n) + "\n" for n in res.failures)
    print(json.dumps(res.stats.as_dict()), file=sys.stderr)
    return EXIT_OK if not res.failures else EXIT_UNRESOLVED


def _cmd_witness(args) -> int:
    w = certify(args.n, args.p_depth)
    if w is None:
        print(f"n = {args.n} is unresolved", file=sys.stderr)
        return EXIT_UNRESOLVED
    print(witness_to_line(w))
    return EXIT_OK


def _cmd_check(args) -> int:
    bad = total = 0
    with open(args.input, encoding="utf-8") as fh:
        for lineno, line in iter_lines(fh):
            total += 1
            try:
                ok = verify_witness(parse_witness(line))
                why = "invariant check failed"
            except ValueError as exc:
                ok, why = False, str(exc)
            if not ok:
                bad += 1
                print(f"line {lineno}: {why}: {line}", file=sys.stderr)
    print(json.dumps({"checked": total, "failed": bad}))
    return EXIT_OK if bad == 0 else EXIT_INVARIANT


def _cmd_cover(args) -> int:
    ok = binomial_cover(args.n, args.p, args.r)
    print("true" if ok else "false")
    return EXIT_OK if ok else EXIT_UNRESOLVED


COMMANDS = {
    "verify": _cmd_verify,
    "phase2": _cmd_phase2,
    "witness": _cmd_witness,
    "check": _cmd_check,
    "cover": _cmd_cover,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantError, AssertionError) as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
