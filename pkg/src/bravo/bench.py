"""User-space lock microbenchmarks.

Four workloads, each run for a fixed wall-clock interval:

``alternator``    threads pass a token around a ring; the holder takes and
                  drops read permission on one shared lock.
``testrwlock``    one writer (10 units inside, 1000 outside) against
                  ``threads`` readers (10 units inside).
``rwbench``       every thread writes with probability ``write_prob``,
                  10 generator steps inside, uniform [0, 200) outside.
``interference``  read-only, each acquisition picks a random lock from a
                  pool; run once with the shared slot table and once with a
                  private table per lock.

Every workload doubles as a correctness run: writers bump a plain counter
non-atomically across their critical section and readers read it at both
ends of theirs.  A mismatch raises ``SafetyViolation``.
"""

from __future__ import annotations

import csv
import logging
import os
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .core import BravoLock, VisibleReadersTable
from .rng import SplitMix64
from .rwlock import Backoff, CentralizedLock, DistributedLock, RwLock, current_thread_id
from .stats import LockStats, StatsRecorder

log = logging.getLogger(__name__)

BENCHMARKS = ("alternator", "testrwlock", "rwbench", "interference")
LOCK_IMPLS = ("centralized", "distributed", "bravo-centralized", "bravo-distributed")

CSV_COLUMNS = (
    "benchmark", "lock_impl", "threads", "write_prob", "lock_pool", "table_size",
    "n", "seed", "run_index", "total_ops", "ops_per_sec", "fast_reads",
    "slow_reads", "revocations", "total_revocation_ns",
)

# testrwlock shape: test_rwlock T 1 10 -c 10 -e 10 -d 1000
TESTRWLOCK_READ_WORK = 10
TESTRWLOCK_WRITE_WORK = 10
TESTRWLOCK_WRITER_DELAY = 1000
RWBENCH_CS_STEPS = 10
RWBENCH_NCS_MAX = 200
INTERFERENCE_CS_STEPS = 20
INTERFERENCE_NCS_STEPS = 100


class ConfigError(ValueError):
    pass


class SafetyViolation(AssertionError):
    """The guarded-counter oracle saw two holders overlap."""


@dataclass(frozen=True)
class BenchConfig:
    benchmark: str = "rwbench"
    lock_impl: str = "bravo-centralized"
    threads: int = 1
    duration_s: float = 3.0
    write_prob: float = 0.0
    lock_pool: int = 1
    table_size: int = 4096
    n_multiplier: int = 9
    seed: int = 0
    csv_path: str | None = None
    pin: bool = False
    # sublocks in a DistributedLock; None means one per logical CPU
    sublocks: int | None = None

    def __post_init__(self) -> None:
        if self.benchmark not in BENCHMARKS:
            raise ConfigError(f"unknown benchmark {self.benchmark!r}; pick one of {BENCHMARKS}")
        if self.lock_impl not in LOCK_IMPLS:
            raise ConfigError(f"unknown lock {self.lock_impl!r}; pick one of {LOCK_IMPLS}")
        # testrwlock counts readers only; its writer always runs
        min_threads = 0 if self.benchmark == "testrwlock" else 1
        if self.threads < min_threads:
            raise ConfigError(f"threads must be >= {min_threads}, got {self.threads}")
        if self.duration_s < 1:
            raise ConfigError(f"duration_s must be >= 1, got {self.duration_s}")
        if not 0.0 <= self.write_prob <= 1.0:
            raise ConfigError(f"write_prob must be in [0, 1], got {self.write_prob}")
        if self.lock_pool < 1:
            raise ConfigError(f"lock_pool must be >= 1, got {self.lock_pool}")
        if self.benchmark == "interference" and self.lock_pool & (self.lock_pool - 1):
            raise ConfigError(f"interference lock_pool must be a power of two, got {self.lock_pool}")
        if self.table_size < 1 or self.table_size & (self.table_size - 1):
            raise ConfigError(f"table_size must be a power of two, got {self.table_size}")
        if self.n_multiplier < 0:
            raise ConfigError(f"n_multiplier must be >= 0, got {self.n_multiplier}")


@dataclass
class BenchResult:
    config: BenchConfig
    per_thread_ops: list[int]
    elapsed_s: float
    stats: LockStats = field(default_factory=LockStats)
    writes: int = 0
    run_index: int = 0
    median_of: int = 1
    # "" for the normal lock, "private" for the interference baseline
    variant: str = ""
    total_ops: int = field(init=False)
    ops_per_sec: float = field(init=False)

    def __post_init__(self) -> None:
        self.total_ops = sum(self.per_thread_ops)
        self.ops_per_sec = self.total_ops / self.elapsed_s if self.elapsed_s > 0 else 0.0

    @property
    def lock_label(self) -> str:
        if self.variant:
            return f"{self.config.lock_impl}/{self.variant}"
        return self.config.lock_impl


class _Box:
    """The guarded counter.  Deliberately a plain attribute."""

    __slots__ = ("value",)

    def __init__(self) -> None:
        self.value = 0


class _Control:
    __slots__ = ("stop", "errors", "barrier", "cpus", "pin")

    def __init__(self, parties: int, pin: bool) -> None:
        self.stop = False
        self.errors: list[BaseException] = []
        self.barrier = threading.Barrier(parties)
        self.pin = pin
        self.cpus = sorted(os.sched_getaffinity(0)) if pin else []

    def enter(self, index: int) -> None:
        if self.pin:
            os.sched_setaffinity(0, {self.cpus[index % len(self.cpus)]})
        self.barrier.wait()


def make_lock(
    impl: str,
    *,
    table: VisibleReadersTable | None = None,
    n: int = 9,
    stats: StatsRecorder | None = None,
    sublocks: int | None = None,
) -> RwLock:
    if impl == "centralized":
        return CentralizedLock()
    if impl == "distributed":
        return DistributedLock(sublocks)
    if impl == "bravo-centralized":
        return BravoLock(CentralizedLock(), table=table, n=n, stats=stats)
    if impl == "bravo-distributed":
        return BravoLock(DistributedLock(sublocks), table=table, n=n, stats=stats)
    raise ConfigError(f"unknown lock {impl!r}")


def _run_workers(
    cfg: BenchConfig,
    bodies: Sequence[Callable[[int, _Control], int]],
) -> tuple[list[int], float]:
    """Start one thread per body, let them run ``duration_s``, return op counts."""
    ctl = _Control(len(bodies) + 1, cfg.pin)
    counts = [0] * len(bodies)

    def runner(index: int) -> None:
        try:
            ctl.enter(index)
            counts[index] = bodies[index](index, ctl)
        except threading.BrokenBarrierError:
            pass
        except BaseException as exc:  # surfaced in the main thread
            ctl.errors.append(exc)
            ctl.stop = True
            ctl.barrier.abort()

    threads = [threading.Thread(target=runner, args=(i,), daemon=True,
                                name=f"{cfg.benchmark}-{i}")
               for i in range(len(bodies))]
    for t in threads:
        t.start()
    try:
        ctl.barrier.wait()
    except threading.BrokenBarrierError:
        pass
    start = time.perf_counter()
    deadline = start + cfg.duration_s
    while not ctl.stop:
        remaining = deadline - time.perf_counter()
        if remaining <= 0:
            break
        time.sleep(min(remaining, 0.05))
    ctl.stop = True
    elapsed = time.perf_counter() - start
    for t in threads:
        t.join()
    if ctl.errors:
        raise ctl.errors[0]
    return counts, elapsed


def _check_counter(box: _Box, writes: int) -> None:
    if box.value != writes:
        raise SafetyViolation(f"guarded counter is {box.value} after {writes} writes")


def run_alternator(cfg: BenchConfig) -> BenchResult:
    if cfg.benchmark != "alternator":
        raise ConfigError(f"run_alternator got benchmark={cfg.benchmark!r}")
    stats = StatsRecorder()
    lock = make_lock(cfg.lock_impl, table=VisibleReadersTable(cfg.table_size),
                     n=cfg.n_multiplier, stats=stats, sublocks=cfg.sublocks)
    box = _Box()
    t = cfg.threads
    flags = [False] * t
    flags[0] = True

    def body(index: int, ctl: _Control) -> int:
        tid = current_thread_id()
        right = (index + 1) % t
        ops = 0
        while not ctl.stop:
            if not flags[index]:
                backoff = Backoff()
                while not flags[index]:
                    if ctl.stop:
                        return ops
                    backoff.pause()
            flags[index] = False
            token = lock.read_lock(tid)
            before = box.value
            if box.value != before:
                raise SafetyViolation("counter moved under read permission")
            lock.read_unlock(token)
            ops += 1
            flags[right] = True
        return ops

    counts, elapsed = _run_workers(cfg, [body] * t)
    _check_counter(box, 0)
    return BenchResult(cfg, counts, elapsed, stats.snapshot())


def _countdown(units: int) -> int:
    while units:
        units -= 1
    return units


def run_testrwlock(cfg: BenchConfig) -> BenchResult:
    """``threads`` readers plus one writer; per_thread_ops[0] is the writer."""
    if cfg.benchmark != "testrwlock":
        raise ConfigError(f"run_testrwlock got benchmark={cfg.benchmark!r}")
    stats = StatsRecorder()
    lock = make_lock(cfg.lock_impl, table=VisibleReadersTable(cfg.table_size),
                     n=cfg.n_multiplier, stats=stats, sublocks=cfg.sublocks)
    box = _Box()
    writes = [0]

    def writer(index: int, ctl: _Control) -> int:
        ops = 0
        while not ctl.stop:
            lock.write_lock()
            v = box.value
            _countdown(TESTRWLOCK_WRITE_WORK)
            box.value = v + 1
            lock.write_unlock()
            ops += 1
            _countdown(TESTRWLOCK_WRITER_DELAY)
        writes[0] = ops
        return ops

    def reader(index: int, ctl: _Control) -> int:
        tid = current_thread_id()
        ops = 0
        while not ctl.stop:
            token = lock.read_lock(tid)
            before = box.value
            _countdown(TESTRWLOCK_READ_WORK)
            after = box.value
            lock.read_unlock(token)
            if before != after:
                raise SafetyViolation(f"reader saw counter move {before} -> {after}")
            ops += 1
        return ops

    counts, elapsed = _run_workers(cfg, [writer] + [reader] * cfg.threads)
    _check_counter(box, writes[0])
    return BenchResult(cfg, counts, elapsed, stats.snapshot(), writes=writes[0])


def run_rwbench(cfg: BenchConfig, trace: int = 0,
                traces: list[list[tuple[bool, int]]] | None = None) -> BenchResult:
    """Bernoulli read/write mix.

    With ``trace > 0`` each thread appends its first ``trace`` decisions
    ``(is_write, outside_steps)`` to ``traces[index]``.
    """
    if cfg.benchmark != "rwbench":
        raise ConfigError(f"run_rwbench got benchmark={cfg.benchmark!r}")
    stats = StatsRecorder()
    lock = make_lock(cfg.lock_impl, table=VisibleReadersTable(cfg.table_size),
                     n=cfg.n_multiplier, stats=stats, sublocks=cfg.sublocks)
    box = _Box()
    threshold = int(cfg.write_prob * (1 << 64))
    write_counts = [0] * cfg.threads
    if trace:
        if traces is None:
            raise ValueError("trace requested without a traces list")
        traces[:] = [[] for _ in range(cfg.threads)]

    def body(index: int, ctl: _Control) -> int:
        tid = current_thread_id()
        rng = SplitMix64.for_thread(cfg.seed, index)
        mine = traces[index] if trace else None
        ops = writes = 0
        while not ctl.stop:
            is_write = rng.next() < threshold
            if is_write:
                lock.write_lock()
                v = box.value
                rng.advance(RWBENCH_CS_STEPS)
                box.value = v + 1
                lock.write_unlock()
                writes += 1
            else:
                token = lock.read_lock(tid)
                before = box.value
                rng.advance(RWBENCH_CS_STEPS)
                after = box.value
                lock.read_unlock(token)
                if before != after:
                    raise SafetyViolation(f"reader saw counter move {before} -> {after}")
            outside = rng.below(RWBENCH_NCS_MAX)
            rng.advance(outside)
            if mine is not None and len(mine) < trace:
                mine.append((is_write, outside))
            ops += 1
        write_counts[index] = writes
        return ops

    counts, elapsed = _run_workers(cfg, [body] * cfg.threads)
    _check_counter(box, sum(write_counts))
    return BenchResult(cfg, counts, elapsed, stats.snapshot(), writes=sum(write_counts))


def _interference_once(cfg: BenchConfig, private: bool) -> BenchResult:
    stats = StatsRecorder()
    if private:
        locks = [make_lock(cfg.lock_impl, table=VisibleReadersTable(cfg.table_size),
                           n=cfg.n_multiplier, stats=stats, sublocks=cfg.sublocks)
                 for _ in range(cfg.lock_pool)]
    else:
        shared = VisibleReadersTable(cfg.table_size)
        locks = [make_lock(cfg.lock_impl, table=shared, n=cfg.n_multiplier,
                           stats=stats, sublocks=cfg.sublocks)
                 for _ in range(cfg.lock_pool)]
    boxes = [_Box() for _ in range(cfg.lock_pool)]
    pool = cfg.lock_pool

    def body(index: int, ctl: _Control) -> int:
        tid = current_thread_id()
        rng = SplitMix64.for_thread(cfg.seed, index)
        ops = 0
        while not ctl.stop:
            k = rng.below(pool)
            lock = locks[k]
            box = boxes[k]
            token = lock.read_lock(tid)
            before = box.value
            rng.advance(INTERFERENCE_CS_STEPS)
            after = box.value
            lock.read_unlock(token)
            if before != after:
                raise SafetyViolation(f"reader saw counter move {before} -> {after}")
            rng.advance(INTERFERENCE_NCS_STEPS)
            ops += 1
        return ops

    counts, elapsed = _run_workers(cfg, [body] * cfg.threads)
    for box in boxes:
        _check_counter(box, 0)
    return BenchResult(cfg, counts, elapsed, stats.snapshot(),
                       variant="private" if private else "")


def run_interference(cfg: BenchConfig) -> tuple[BenchResult, BenchResult | None]:
    """(shared-table result, private-table result).

    Private tables only exist for BRAVO locks; baselines return ``None`` in
    the second position.
    """
    if cfg.benchmark != "interference":
        raise ConfigError(f"run_interference got benchmark={cfg.benchmark!r}")
    shared = _interference_once(cfg, private=False)
    if not cfg.lock_impl.startswith("bravo"):
        return shared, None
    return shared, _interference_once(cfg, private=True)


def run_once(cfg: BenchConfig) -> list[BenchResult]:
    """One run of ``cfg``; interference contributes two results."""
    if cfg.benchmark == "alternator":
        return [run_alternator(cfg)]
    if cfg.benchmark == "testrwlock":
        return [run_testrwlock(cfg)]
    if cfg.benchmark == "rwbench":
        return [run_rwbench(cfg)]
    return [r for r in run_interference(cfg) if r is not None]


def median_result(results: Sequence[BenchResult]) -> BenchResult:
    """The run with the median throughput (lower middle for even counts)."""
    if not results:
        raise ValueError("no results")
    ordered = sorted(results, key=lambda r: r.ops_per_sec)
    return replace(ordered[(len(ordered) - 1) // 2], median_of=len(results))


def run_repeated(cfg: BenchConfig, reps: int = 7) -> list[BenchResult]:
    """``reps`` runs of ``cfg``, every result tagged with its run index."""
    out = []
    for i in range(reps):
        for r in run_once(cfg):
            r.run_index = i
            out.append(r)
        log.debug("%s %s T=%d run %d done", cfg.benchmark, cfg.lock_impl, cfg.threads, i)
    return out


def medians(results: Iterable[BenchResult]) -> dict[str, BenchResult]:
    """Median result per lock label (``lock_impl`` or ``lock_impl/private``)."""
    groups: dict[str, list[BenchResult]] = {}
    for r in results:
        groups.setdefault(r.lock_label, []).append(r)
    return {label: median_result(rs) for label, rs in groups.items()}


def result_row(r: BenchResult) -> dict[str, object]:
    c = r.config
    return {
        "benchmark": c.benchmark,
        "lock_impl": r.lock_label,
        "threads": c.threads,
        "write_prob": c.write_prob,
        "lock_pool": c.lock_pool,
        "table_size": c.table_size,
        "n": c.n_multiplier,
        "seed": c.seed,
        "run_index": r.run_index,
        "total_ops": r.total_ops,
        "ops_per_sec": f"{r.ops_per_sec:.3f}",
        "fast_reads": r.stats.fast_reads,
        "slow_reads": r.stats.slow_reads,
        "revocations": r.stats.revocations,
        "total_revocation_ns": r.stats.total_revocation_ns,
    }


def emit_csv(results: Sequence[BenchResult], path: str | os.PathLike[str]) -> None:
    if not results:
        raise ValueError("emit_csv needs at least one result")
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for r in results:
                writer.writerow(result_row(r))
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


_INT_COLUMNS = {"threads", "lock_pool", "table_size", "n", "seed", "run_index",
                "total_ops", "fast_reads", "slow_reads", "revocations",
                "total_revocation_ns"}
_FLOAT_COLUMNS = {"write_prob", "ops_per_sec"}


def read_csv(path: str | os.PathLike[str]) -> list[dict[str, object]]:
    """Parse a file written by ``emit_csv`` back into typed rows."""
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            row: dict[str, object] = {}
            for k, v in raw.items():
                if k in _INT_COLUMNS:
                    row[k] = int(v)
                elif k in _FLOAT_COLUMNS:
                    row[k] = float(v)
                else:
                    row[k] = v
            rows.append(row)
    return rows
