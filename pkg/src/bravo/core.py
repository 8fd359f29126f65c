"""BRAVO: biased reader fast path layered over any ``RwLock``.

Readers of a biased lock publish themselves in a process-wide table of slots
instead of touching the underlying lock.  A writer takes the underlying lock
in write mode, clears the bias flag and scans the table, waiting for every
slot that still names its lock to be cleared.  The time spent revoking,
multiplied by ``n``, is the period during which slow-path readers may not
turn bias back on, which caps the writer slowdown at roughly ``1/(n+1)``.
"""

from __future__ import annotations

import functools
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable

from .atomics import AtomicArray
from .config import PolicyParams, checked_default
from .rwlock import Backoff, CentralizedLock, LockError, RwLock, current_thread_id
from .stats import Event, StatsRecorder

__all__ = [
    "BravoLock",
    "SlowPath",
    "VisibleReadersTable",
    "global_table",
    "hash_slot",
    "mix64",
]

M64 = (1 << 64) - 1

monotonic_ns = time.monotonic_ns


def mix64(x: int) -> int:
    """64-bit avalanche finalizer (the splitmix64 output function)."""
    x &= M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & M64
    return x ^ (x >> 31)


def hash_slot(thread_id: int, lock_id: int, table_size: int = 4096) -> int:
    """Table index for a (thread, lock) pair; ``table_size`` is a power of two."""
    lid = lock_id & M64
    rotated = ((lid << 32) | (lid >> 32)) & M64
    return mix64(thread_id ^ rotated) & (table_size - 1)


# the hash is pure, so repeat acquisitions by the same thread skip the mixer
_slot_of = functools.lru_cache(maxsize=1 << 16)(hash_slot)


class VisibleReadersTable(AtomicArray):
    """Fixed array of slots; 0 is empty, otherwise the id of a held lock."""

    __slots__ = ()

    def __init__(self, size: int = 4096, stripes: int = 256) -> None:
        if size < 1 or size & (size - 1):
            raise ValueError(f"table size must be a power of two, got {size}")
        super().__init__(size, stripes)

    def occupied(self) -> int:
        return len(self.cells) - self.cells.count(0)


_global_table: VisibleReadersTable | None = None
_global_guard = threading.Lock()


def global_table() -> VisibleReadersTable:
    """The table shared by every lock that was not given its own."""
    global _global_table
    table = _global_table
    if table is None:
        with _global_guard:
            if _global_table is None:
                _global_table = VisibleReadersTable(PolicyParams.from_env().table_size)
            table = _global_table
    return table


@dataclass(frozen=True)
class SlowPath:
    """Read token for an acquisition that went through the underlying lock."""

    inner: Any


class BravoLock(RwLock):
    """Reader-biased wrapper around ``underlying``.

    ``read_lock`` returns either an ``int`` (the table slot of a fast-path
    acquisition) or a ``SlowPath`` wrapping the underlying lock's token.
    Tokens are plain values and may be released from another thread.

    ``probe``, when set, is called as ``probe(point, index)`` at the points
    ``"published"`` (reader installed its slot, before the recheck),
    ``"bias_cleared"`` (writer cleared the flag, before scanning) and
    ``"waiting"`` (writer found a conflicting slot).  Tests use it to force
    specific interleavings.
    """

    __slots__ = (
        "underlying", "rbias", "inhibit_until", "n", "table", "lock_id",
        "_size", "stats", "checked", "probe", "_fast_held",
    )

    def __init__(
        self,
        underlying: RwLock | None = None,
        *,
        n: int | None = None,
        table: VisibleReadersTable | None = None,
        stats: StatsRecorder | None = None,
        checked: bool | None = None,
    ) -> None:
        if n is None:
            n = PolicyParams.from_env().n_multiplier
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        self.underlying = underlying if underlying is not None else CentralizedLock()
        self.table = table if table is not None else global_table()
        self._size = len(self.table)
        self.n = n
        self.rbias = False
        self.inhibit_until = 0
        self.lock_id = id(self)
        self.stats = stats
        self.checked = checked_default() if checked is None else checked
        self.probe: Callable[[str, int], None] | None = None
        self._fast_held: set[int] = set()

    def __repr__(self) -> str:
        return f"BravoLock({self.underlying!r}, rbias={self.rbias}, n={self.n})"

    def slot_for(self, thread_id: int | None = None) -> int:
        if thread_id is None:
            thread_id = current_thread_id()
        return _slot_of(thread_id, self.lock_id, self._size)

    def _try_fast(self, thread_id: int | None) -> int:
        """One fast-path attempt; slot index on success, -1 otherwise."""
        if thread_id is None:
            thread_id = current_thread_id()
        lock_id = self.lock_id
        i = _slot_of(thread_id, lock_id, self._size)
        table = self.table
        if not table.compare_and_set(i, 0, lock_id):
            if self.stats is not None:
                self.stats.record(Event.CAS_FAILURE)
            return -1
        if self.probe is not None:
            self.probe("published", i)
        if self.rbias:
            if self.stats is not None:
                self.stats.record(Event.FAST_READ)
            if self.checked:
                self._fast_held.add(i)
            return i
        # a writer revoked between our install and the recheck
        table.cells[i] = 0
        return -1

    def _maybe_enable_bias(self) -> None:
        # caller holds read permission on the underlying lock
        if not self.rbias and monotonic_ns() > self.inhibit_until:
            self.rbias = True

    def read_lock(self, thread_id: int | None = None) -> int | SlowPath:
        if self.rbias:
            i = self._try_fast(thread_id)
            if i >= 0:
                return i
        token = self.underlying.read_lock(thread_id)
        self._maybe_enable_bias()
        if self.stats is not None:
            self.stats.record(Event.SLOW_READ)
        return SlowPath(token)

    def read_unlock(self, token: int | SlowPath) -> None:
        if token.__class__ is int:
            cells = self.table.cells
            if cells[token] != self.lock_id:
                raise LockError(f"slot {token} does not hold this lock; double release?")
            if self.checked:
                try:
                    self._fast_held.remove(token)
                except KeyError:
                    raise LockError(f"fast-path token {token} is not outstanding") from None
            cells[token] = 0
        else:
            self.underlying.read_unlock(token.inner)

    def try_read_lock(self, thread_id: int | None = None) -> int | SlowPath | None:
        if self.rbias:
            i = self._try_fast(thread_id)
            if i >= 0:
                return i
        token = self.underlying.try_read_lock(thread_id)
        if token is None:
            return None
        self._maybe_enable_bias()
        if self.stats is not None:
            self.stats.record(Event.SLOW_READ)
        return SlowPath(token)

    def write_lock(self) -> None:
        self.underlying.write_lock()
        if self.stats is not None:
            self.stats.record(Event.WRITE)
        if self.rbias:
            self._revoke()

    def write_unlock(self) -> None:
        self.underlying.write_unlock()

    def try_write_lock(self) -> bool:
        if not self.underlying.try_write_lock():
            return False
        if self.rbias:
            start = monotonic_ns()
            self.rbias = False
            if self.table.find(self.lock_id) >= 0:
                # a fast-path reader is inside: put bias back and decline
                # rather than wait for it
                self.rbias = True
                self.underlying.write_unlock()
                return False
            self._finish_revocation(start)
        if self.stats is not None:
            self.stats.record(Event.WRITE)
        return True

    def _revoke(self) -> None:
        # timing starts before the flag is cleared: a deliberate over-estimate
        start = monotonic_ns()
        self.rbias = False
        if self.probe is not None:
            self.probe("bias_cleared", -1)
        self.revocation_scan()
        self._finish_revocation(start)

    def _finish_revocation(self, start: int) -> None:
        now = monotonic_ns()
        duration = now - start
        inhibit = duration * self.n
        self.inhibit_until = now + inhibit
        if self.stats is not None:
            self.stats.record_revocation(start, duration, inhibit)

    def revocation_scan(self) -> int:
        """Wait until no slot names this lock; returns the elapsed ns.

        The caller must hold write permission and have cleared ``rbias``.
        """
        start = monotonic_ns()
        table = self.table
        cells = table.cells
        lock_id = self.lock_id
        i = table.find(lock_id)
        while i >= 0:
            if self.probe is not None:
                self.probe("waiting", i)
            if cells[i] == lock_id:
                backoff = Backoff()
                while cells[i] == lock_id:
                    backoff.pause()
            i = table.find(lock_id, i + 1)
        return monotonic_ns() - start
