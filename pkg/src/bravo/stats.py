"""Per-lock event counters, sharded per thread.

Each thread increments its own shard, so recording never writes to memory
another thread writes.  ``snapshot`` sums the shards; the totals are exact
only when no thread is recording concurrently.
"""

from __future__ import annotations

import threading
from dataclasses import asdict, dataclass, fields

__all__ = ["LockStats", "StatsRecorder", "Event"]


class Event:
    FAST_READ = 0
    SLOW_READ = 1
    WRITE = 2
    REVOCATION = 3
    REVOCATION_NS = 4
    INHIBIT_NS = 5
    CAS_FAILURE = 6

    COUNT = 7


@dataclass
class LockStats:
    fast_reads: int = 0
    slow_reads: int = 0
    write_acquires: int = 0
    revocations: int = 0
    total_revocation_ns: int = 0
    total_inhibit_ns: int = 0
    cas_failures: int = 0

    @property
    def reads(self) -> int:
        return self.fast_reads + self.slow_reads

    def __add__(self, other: LockStats) -> LockStats:
        return LockStats(*(getattr(self, f.name) + getattr(other, f.name)
                           for f in fields(self)))

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class Revocation:
    start_ns: int
    duration_ns: int
    inhibit_ns: int


class StatsRecorder:
    """Sharded counters plus an optional log of every revocation.

    Set ``enabled = False`` to stop recording without detaching the recorder.
    """

    def __init__(self, *, enabled: bool = True, log_revocations: bool = False) -> None:
        self.enabled = enabled
        self.log_revocations = log_revocations
        self.revocation_log: list[Revocation] = []
        self._local = threading.local()
        self._shards: list[list[int]] = []

    def _shard(self) -> list[int]:
        try:
            return self._local.shard
        except AttributeError:
            shard = self._local.shard = [0] * Event.COUNT
            self._shards.append(shard)
            return shard

    def record(self, event: int, value: int = 1) -> None:
        if self.enabled:
            self._shard()[event] += value

    def record_revocation(self, start_ns: int, duration_ns: int, inhibit_ns: int) -> None:
        if not self.enabled:
            return
        shard = self._shard()
        shard[Event.REVOCATION] += 1
        shard[Event.REVOCATION_NS] += duration_ns
        shard[Event.INHIBIT_NS] += inhibit_ns
        if self.log_revocations:
            # revokers hold write permission, so appends never race each other
            self.revocation_log.append(Revocation(start_ns, duration_ns, inhibit_ns))

    def snapshot(self) -> LockStats:
        totals = [0] * Event.COUNT
        for shard in list(self._shards):
            for i, v in enumerate(list(shard)):
                totals[i] += v
        return LockStats(*totals)

    def reset(self) -> None:
        for shard in list(self._shards):
            shard[:] = [0] * Event.COUNT
        self.revocation_log.clear()
