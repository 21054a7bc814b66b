"""Line-oriented certificate files: one JSON object per line.

Keys are written in a fixed order with no whitespace, so files are byte
stable and diffable.  Parsing is strict: unknown or missing fields,
floats, and non-integer values are rejected with the offending line number.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Iterable, Iterator

from invgen.genchecks import KINDS, PHASE2, LeftoverRecord, Witness

BASE_FIELDS = ("n", "kind", "r", "p", "a")
PHASE2_FIELDS = BASE_FIELDS + ("c", "k", "p_rank")
LEFTOVER_FIELDS = ("n", "lppd", "smooth")
MAX_INT = 2**63


class RecordError(ValueError):
    def __init__(self, msg: str, lineno: int | None = None):
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)
        self.lineno = lineno


def _no_float(s: str):
    raise ValueError(f"non-integer number {s}")


def _load(line: str) -> dict:
    try:
        obj = json.loads(line, parse_float=_no_float, parse_constant=_no_float)
    except ValueError as exc:
        raise RecordError(str(exc)) from None
    if not isinstance(obj, dict):
        raise RecordError("record is not an object")
    return obj


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _int_field(obj: dict, name: str) -> int:
    v = obj[name]
    if type(v) is not int or not 0 <= v <= MAX_INT:
        raise RecordError(f"field {name!r} must be a non-negative integer, got {v!r}")
    return v


def _check_keys(obj: dict, fields: tuple[str, ...]) -> None:
    if set(obj) != set(fields):
        extra = sorted(set(obj) - set(fields))
        missing = sorted(set(fields) - set(obj))
        raise RecordError(f"bad fields: unknown {extra}, missing {missing}")


def witness_to_line(w: Witness) -> str:
    fields = PHASE2_FIELDS if w.kind == PHASE2 else BASE_FIELDS
    return _dump({name: getattr(w, name) for name in fields})


def parse_witness(line: str) -> Witness:
    obj = _load(line)
    kind = obj.get("kind")
    if kind not in KINDS:
        raise RecordError(f"unknown kind {kind!r}")
    fields = PHASE2_FIELDS if kind == PHASE2 else BASE_FIELDS
    _check_keys(obj, fields)
    return Witness(**{name: obj[name] if name == "kind" else _int_field(obj, name)
                      for name in fields})


def leftover_to_line(rec: LeftoverRecord) -> str:
    return _dump({"n": rec.n, "lppd": rec.lppd, "smooth": rec.smooth})


def parse_leftover(line: str) -> LeftoverRecord:
    obj = _load(line)
    _check_keys(obj, LEFTOVER_FIELDS)
    if type(obj["smooth"]) is not bool:
        raise RecordError("field 'smooth' must be true or false")
    return LeftoverRecord(_int_field(obj, "n"), _int_field(obj, "lppd"), obj["smooth"])


def failure_to_line(n: int) -> str:
    return _dump({"n": n})


def parse_failure(line: str) -> int:
    obj = _load(line)
    _check_keys(obj, ("n",))
    return _int_field(obj, "n")


def iter_lines(stream: IO[str]) -> Iterator[tuple[int, str]]:
    """Non-blank lines with 1-based line numbers."""
    for lineno, line in enumerate(stream, 1):
        line = line.strip()
        if line:
            yield lineno, line


def read_records(path: str | Path, parse) -> Iterator:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in iter_lines(fh):
            try:
                yield parse(line)
            except RecordError as exc:
                raise RecordError(str(exc), lineno) from None


def write_lines(stream: IO[str], lines: Iterable[str]) -> None:
    for line in lines:
        stream.write(line)
        stream.write("\n")
