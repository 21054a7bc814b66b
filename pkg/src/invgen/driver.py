"""Range runner: chunking, worker pool, Phase 1 streaming, inline Phase 2,
checkpointing and statistics.

Outputs depend only on the integers covered, never on chunk or segment
sizes or the number of workers: chunks are merged in ascending order and
every non-smooth leftover is re-decided with its exact divisor.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from invgen.arith import factorize, largest_prime_power_divisor, prime_power_base
from invgen.genchecks import (
    DEFAULT_P_DEPTH,
    LeftoverRecord,
    Witness,
    phase1_check,
    phase1_passes,
    phase2_search,
    prev_prime,
    prime_power_witness,
    small_case_witness,
)
from invgen.records import (
    RecordError,
    failure_to_line,
    leftover_to_line,
    parse_failure,
    parse_leftover,
    parse_witness,
    witness_to_line,
)
from invgen.sieve import (
    DEFAULT_SEGMENT_LENGTH,
    MAX_RANGE_END,
    OverlapExhausted,
    SieveConfig,
    prime_at_or_below,
    prime_running_max,
    scan_power_smooth,
    sieve_primality,
    smooth_bound_for,
)

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
DEFAULT_CHUNK_SEGMENTS = 96  # 96 * 2**20 ~ 1.0e8 integers
SIEVE_FLOOR = 1000  # integers below this are decided one at a time


class ConfigError(ValueError):
    pass


class CheckpointError(ConfigError):
    pass


class InvariantError(RuntimeError):
    pass


@dataclass
class RunConfig:
    start: int
    end: int
    workers: int = 1
    chunk_length: int | None = None
    segment_length: int = DEFAULT_SEGMENT_LENGTH
    smooth_mult: float = 5.0
    p_depth: int = DEFAULT_P_DEPTH
    checkpoint_path: Path | None = None
    witnesses_path: Path | None = None
    leftovers_path: Path | None = None
    failures_path: Path | None = None

    def __post_init__(self):
        if not 5 <= self.start <= self.end <= MAX_RANGE_END:
            raise ConfigError(f"need 5 <= start <= end <= 2**63, got [{self.start}, {self.end}]")
        if self.workers < 1 or self.p_depth < 1 or self.segment_length < 1:
            raise ConfigError("workers, p_depth and segment_length must be positive")
        if self.smooth_mult <= 0:
            raise ConfigError("smooth multiplier must be positive")
        bound = smooth_bound_for(self.end, self.smooth_mult)
        if bound > self.segment_length:
            raise ConfigError(f"segment length {self.segment_length} is below the smooth bound {bound}")
        if self.chunk_length is None:
            self.chunk_length = self.segment_length * DEFAULT_CHUNK_SEGMENTS
        if self.chunk_length < self.segment_length or self.chunk_length % self.segment_length:
            raise ConfigError("chunk length must be a positive multiple of the segment length")

    def config_hash(self) -> str:
        """Hash of the settings that affect outputs or counters.

        The end point is excluded so that a finished run can be extended.
        """
        key = f"start={self.start};p_depth={self.p_depth};smooth_mult={self.smooth_mult!r}"
        return hashlib.sha256(key.encode()).hexdigest()[:16]


@dataclass
class RunStats:
    integers_processed: int = 0
    phase1_passes: int = 0
    leftovers: int = 0
    phase2_witnesses: int = 0
    escalations: int = 0
    non_smooth_leftover_warnings: int = 0
    unresolved_count: int = 0
    prime_power_count: int = 0
    small_case_count: int = 0
    overlap_widenings: int = 0
    wall_time: float = 0.0

    COUNTERS = (
        "integers_processed", "phase1_passes", "leftovers", "phase2_witnesses",
        "escalations", "non_smooth_leftover_warnings", "unresolved_count",
        "prime_power_count", "small_case_count", "overlap_widenings",
    )

    def add(self, other: "RunStats") -> None:
        for name in self.COUNTERS:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def check(self) -> None:
        classified = (self.phase1_passes + self.leftovers
                      + self.prime_power_count + self.small_case_count)
        if classified != self.integers_processed:
            raise InvariantError(
                f"{classified} integers classified but {self.integers_processed} processed")
        if self.phase2_witnesses + self.unresolved_count != self.leftovers:
            raise InvariantError("every leftover must be resolved or reported")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ChunkResult:
    lo: int
    hi: int
    stats: RunStats = field(default_factory=RunStats)
    witnesses: list[Witness] = field(default_factory=list)
    leftovers: list[LeftoverRecord] = field(default_factory=list)
    failures: list[int] = field(default_factory=list)


# ---------------------------------------------------------------- chunk work


def _resolve(res: ChunkResult, rec: LeftoverRecord, depth: int) -> None:
    res.stats.leftovers += 1
    res.leftovers.append(rec)
    w = phase2_search(rec.n, factorize(rec.n), depth)
    if w is None or w.p_rank > depth:
        res.stats.escalations += 1
    if w is None:
        res.stats.unresolved_count += 1
        res.failures.append(rec.n)
        log.warning("n = %d is unresolved", rec.n)
    else:
        res.stats.phase2_witnesses += 1
        res.witnesses.append(w)


def _decide_one(n: int, res: ChunkResult, depth: int) -> None:
    if small_case_witness(n):
        res.stats.small_case_count += 1
        return
    if prime_power_base(n) is not None:
        if prime_power_witness(n) is None:
            raise InvariantError(f"prime power {n} has no r-cycle witness")
        res.stats.prime_power_count += 1
        return
    _, _, lppd = largest_prime_power_divisor(factorize(n))
    out = phase1_check(n, prev_prime(n - 2), lppd, True)
    if isinstance(out, Witness):
        res.stats.phase1_passes += 1
    else:
        _resolve(res, out, depth)


_sieve_cache: dict[tuple, SieveConfig] = {}


def _sieve_config(cfg: RunConfig) -> SieveConfig:
    key = (cfg.start, cfg.end, cfg.segment_length, cfg.smooth_mult)
    if key not in _sieve_cache:
        _sieve_cache.clear()
        _sieve_cache[key] = SieveConfig.for_range(
            max(cfg.start, 5), cfg.end, cfg.segment_length, cfg.smooth_mult)
    return _sieve_cache[key]


def _higher_prime_powers(primes: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Sorted p**e (e >= 2) in [lo, hi)."""
    out = []
    e = 2
    while 2**e < hi:
        cap = math.isqrt(hi) if e == 2 else int(round(hi ** (1.0 / e))) + 1
        ps = primes[primes <= cap]
        pe = [p**e for p in ps.tolist()]
        out.extend(v for v in pe if lo <= v < hi)
        e += 1
    return np.array(sorted(out), dtype=np.int64)


def _carry_into(scfg: SieveConfig, x: int, res: ChunkResult) -> int:
    window = scfg.smooth_bound
    while True:
        try:
            return prime_at_or_below(scfg, x, window)
        except OverlapExhausted:
            res.stats.overlap_widenings += 1
            log.warning("no prime within %d below %d; widening the overlap", window, x)
            window *= 2


def _sieve_range(cfg: RunConfig, lo: int, hi: int, res: ChunkResult) -> None:
    """Phase 1 over [lo, hi], lo >= SIEVE_FLOOR, one segment at a time."""
    scfg = _sieve_config(cfg)
    depth = cfg.p_depth
    powers = _higher_prime_powers(scfg.basis_primes, lo, hi + 1)
    carry = _carry_into(scfg, lo - 4, res)
    base = lo
    while base <= hi:
        length = min(scfg.segment_length, hi + 1 - base)
        # Window values base-3 .. base+length-1 cover n-3, n-2 and n itself.
        flags = sieve_primality(scfg, base - 3, length + 3)
        best = prime_running_max(flags, base - 3, carry)
        carry = int(best[length - 1])
        r_lt, r_le = best[:length], best[1 : length + 1]
        n2_prime, n_prime = flags[1 : length + 1], flags[3:]
        lppd, smooth = scan_power_smooth(scfg, base, length)
        vals = np.arange(base, base + length, dtype=np.int64)

        prime_power = n_prime.copy()
        hit = powers[(powers >= base) & (powers < base + length)]
        prime_power[hit - base] = True
        m1 = vals - 1
        m1_pow2 = (m1 & (m1 - 1)) == 0
        passed = (r_lt + lppd > vals) | (n2_prime & ~m1_pow2 & (lppd >= 3))
        passed &= ~prime_power
        failed = np.flatnonzero(~passed & ~prime_power)

        res.stats.prime_power_count += int(prime_power.sum())
        res.stats.phase1_passes += int(passed.sum())
        for j in failed.tolist():
            n = base + j
            rec = LeftoverRecord(n, int(lppd[j]), bool(smooth[j]))
            if not rec.smooth:
                res.stats.non_smooth_leftover_warnings += 1
                log.warning("n = %d is not %d-power-smooth but failed phase 1",
                            n, scfg.smooth_bound)
                _, _, exact = largest_prime_power_divisor(factorize(n))
                if phase1_passes(n, int(r_le[j]), exact, int(r_lt[j])) is not None:
                    res.stats.phase1_passes += 1
                    continue
                rec = LeftoverRecord(n, exact, False)
            _resolve(res, rec, depth)
        base += length


def process_chunk(cfg: RunConfig, lo: int, hi: int) -> ChunkResult:
    """Classify every n in [lo, hi]."""
    res = ChunkResult(lo, hi)
    res.stats.integers_processed = hi - lo + 1
    for n in range(lo, min(hi, SIEVE_FLOOR - 1) + 1):
        _decide_one(n, res, cfg.p_depth)
    if hi >= SIEVE_FLOOR:
        _sieve_range(cfg, max(lo, SIEVE_FLOOR), hi, res)
    return res


def _chunk_task(args: tuple[RunConfig, int, int]) -> ChunkResult:
    return process_chunk(*args)


def iter_chunks(lo: int, hi: int, length: int) -> list[tuple[int, int]]:
    return [(a, min(a + length - 1, hi)) for a in range(lo, hi + 1, length)]


# ---------------------------------------------------------------- checkpoint


def checkpoint_save(path: Path, cfg: RunConfig, stats: RunStats, completed: int) -> None:
    """Atomically write ``version,config-hash,completed,counters,crc32``."""
    counters = " ".join(f"{name}={getattr(stats, name)}" for name in RunStats.COUNTERS)
    body = f"{CHECKPOINT_VERSION},{cfg.config_hash()},{completed},{counters}"
    tmp = Path(f"{path}.tmp")
    tmp.write_text(f"{body},{zlib.crc32(body.encode()):08x}\n", encoding="ascii")
    os.replace(tmp, path)


def checkpoint_load(path: Path, cfg: RunConfig) -> tuple[int, RunStats]:
    """Return ``(completed_upper_bound, stats)``; refuses anything inconsistent."""
    try:
        text = Path(path).read_text(encoding="ascii")
        if not text.endswith("\n") or text.count("\n") != 1:
            raise ValueError("not a single newline-terminated record")
        body, crc = text[:-1].rsplit(",", 1)
        if f"{zlib.crc32(body.encode()):08x}" != crc:
            raise ValueError("checksum mismatch")
        version, chash, completed, counters = body.split(",")
        if int(version) != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported version {version}")
        stats = RunStats()
        pairs = dict(item.split("=") for item in counters.split())
        if set(pairs) != set(RunStats.COUNTERS):
            raise ValueError("counter set mismatch")
        for name, value in pairs.items():
            setattr(stats, name, int(value))
        completed = int(completed)
    except (OSError, ValueError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from None
    if chash != cfg.config_hash():
        raise CheckpointError(f"checkpoint {path} was written for a different configuration")
    if completed < cfg.start - 1:
        raise CheckpointError(f"checkpoint bound {completed} precedes the start {cfg.start}")
    return completed, stats


def _truncate_output(path: Path, completed: int, parse) -> None:
    """Drop records beyond ``completed`` and any torn final line."""
    if not path.exists():
        raise CheckpointError(f"output {path} is missing; cannot resume")
    keep = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.endswith("\n"):
                break
            try:
                rec = parse(line)
            except RecordError:
                break
            n = rec if isinstance(rec, int) else rec.n
            if n > completed:
                break
            keep.append(line)
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(keep)


# ---------------------------------------------------------------- run


_OUTPUTS = (
    ("witnesses_path", "witnesses", witness_to_line, parse_witness),
    ("leftovers_path", "leftovers", leftover_to_line, parse_leftover),
    ("failures_path", "failures", failure_to_line, parse_failure),
)


def run_range(cfg: RunConfig) -> RunStats:
    """Classify every n in [cfg.start, cfg.end] and write the ordered outputs."""
    t0 = time.perf_counter()
    stats = RunStats()
    first = cfg.start
    resuming = cfg.checkpoint_path is not None and Path(cfg.checkpoint_path).exists()
    if resuming:
        completed, stats = checkpoint_load(cfg.checkpoint_path, cfg)
        first = completed + 1
        log.info("resuming after n = %d", completed)
    files = {}
    try:
        for attr, key, _, parse in _OUTPUTS:
            path = getattr(cfg, attr)
            if path is None:
                continue
            path = Path(path)
            if resuming:
                _truncate_output(path, first - 1, parse)
                files[key] = open(path, "a", encoding="utf-8")
            else:
                files[key] = open(path, "w", encoding="utf-8")
        chunks = iter_chunks(first, cfg.end, cfg.chunk_length)
        tasks = [(cfg, lo, hi) for lo, hi in chunks]
        if cfg.workers == 1 or len(tasks) <= 1:
            results = map(_chunk_task, tasks)
            _merge(cfg, results, files, stats)
        else:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                _merge(cfg, pool.map(_chunk_task, tasks), files, stats)
    finally:
        for fh in files.values():
            fh.close()
    stats.wall_time = time.perf_counter() - t0
    stats.check()
    return stats


def _merge(cfg: RunConfig, results: Iterable[ChunkResult], files: dict, stats: RunStats) -> None:
    for res in results:
        for attr, key, dump, _ in _OUTPUTS:
            fh = files.get(key)
            if fh is not None:
                for item in getattr(res, key):
                    fh.write(dump(item) + "\n")
                fh.flush()
        stats.add(res.stats)
        if cfg.checkpoint_path is not None:
            checkpoint_save(cfg.checkpoint_path, cfg, stats, res.hi)
        log.info("done [%d, %d]: %d leftovers, %d unresolved so far",
                 res.lo, res.hi, stats.leftovers, stats.unresolved_count)


def run_phase2(records: Iterable[LeftoverRecord],
               depth: int = DEFAULT_P_DEPTH) -> ChunkResult:
    """Phase 2 alone over saved leftovers."""
    res = ChunkResult(0, 0)
    for rec in records:
        if not rec.smooth:
            res.stats.non_smooth_leftover_warnings += 1
        _resolve(res, rec, depth)
    res.stats.integers_processed = res.stats.leftovers
    return res
