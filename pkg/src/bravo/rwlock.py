"""Reader-writer lock contract and the two baseline locks.

``CentralizedLock`` keeps every reader in one shared word (compact, poor
reader scalability).  ``DistributedLock`` keeps one ``CentralizedLock`` per
logical CPU (large, scalable readers, expensive writers).  Both sit at the
ends of the design spectrum that ``BravoLock`` interpolates.

Every ``read_lock`` returns a token that must be handed back to
``read_unlock``.  Tokens are never ``None`` so that ``try_read_lock`` can use
``None`` for failure.
"""

from __future__ import annotations

import abc
import itertools
import os
import threading
import time
from contextlib import contextmanager
from typing import Any, Iterator

from .atomics import AtomicInt
from .config import checked_default

__all__ = [
    "LockError",
    "RwLock",
    "CentralizedLock",
    "DistributedLock",
    "Backoff",
    "current_thread_id",
]

SPIN_CAP = 1024
# bound on CAS retries in try_read_lock when only the reader count moved
TRY_ATTEMPTS = 8

WRITER = 1 << 62
WAITING = 1 << 61
READERS = WAITING - 1
BLOCKERS = WRITER | WAITING


# Drops the GIL and gives up the CPU.  time.sleep(0) only drops the GIL, and
# on a single CPU the yielding thread usually takes it straight back.
_yield = getattr(os, "sched_yield", None) or (lambda: time.sleep(0))


class LockError(RuntimeError):
    """Raised when a permission is released that is not held."""


_tls = threading.local()
_thread_ids = itertools.count(1)


def current_thread_id() -> int:
    """Small per-thread integer, assigned on first use and cached."""
    try:
        return _tls.tid
    except AttributeError:
        tid = _tls.tid = next(_thread_ids)
        return tid


class Backoff:
    """Exponential spin capped at ``SPIN_CAP`` iterations, then yield."""

    __slots__ = ("_spins",)

    def __init__(self) -> None:
        self._spins = 1

    def pause(self) -> None:
        spins = self._spins
        if spins <= SPIN_CAP:
            for _ in range(spins):
                pass
            self._spins = spins << 1
        else:
            _yield()


class RwLock(abc.ABC):
    """Abstract reader-writer lock.

    Invariants every implementation keeps: a writer never overlaps any other
    holder, and any number of readers may overlap each other.
    """

    __slots__ = ()

    @abc.abstractmethod
    def read_lock(self, thread_id: int | None = None) -> Any:
        ...

    @abc.abstractmethod
    def read_unlock(self, token: Any) -> None:
        ...

    @abc.abstractmethod
    def write_lock(self) -> None:
        ...

    @abc.abstractmethod
    def write_unlock(self) -> None:
        ...

    @abc.abstractmethod
    def try_read_lock(self, thread_id: int | None = None) -> Any | None:
        ...

    @abc.abstractmethod
    def try_write_lock(self) -> bool:
        ...

    @contextmanager
    def reading(self, thread_id: int | None = None) -> Iterator[Any]:
        token = self.read_lock(thread_id)
        try:
            yield token
        finally:
            self.read_unlock(token)

    @contextmanager
    def writing(self) -> Iterator[None]:
        self.write_lock()
        try:
            yield
        finally:
            self.write_unlock()


class CentralizedLock(RwLock):
    """Writer-preferring lock with a single state word.

    Layout of the word: bit 62 writer-present, bit 61 writer-waiting, low
    bits the active reader count.  Arriving readers back off while either
    writer bit is set, so a waiting writer is admitted once the readers
    already inside drain.
    """

    __slots__ = ("_state",)

    def __init__(self) -> None:
        self._state = AtomicInt(0)

    def __repr__(self) -> str:
        s = self._state.load()
        return (f"CentralizedLock(readers={s & READERS}, "
                f"writer={bool(s & WRITER)}, waiting={bool(s & WAITING)})")

    @property
    def readers(self) -> int:
        return self._state.load() & READERS

    @property
    def writer_present(self) -> bool:
        return bool(self._state.load() & WRITER)

    @property
    def writer_waiting(self) -> bool:
        return bool(self._state.load() & WAITING)

    def read_lock(self, thread_id: int | None = None) -> int:
        state = self._state
        s = state.load()
        if not s & BLOCKERS and state.compare_and_set(s, s + 1):
            return 0
        backoff = Backoff()
        while True:
            backoff.pause()
            s = state.load()
            if not s & BLOCKERS and state.compare_and_set(s, s + 1):
                return 0

    def read_unlock(self, token: Any = 0) -> None:
        state = self._state
        while True:
            s = state.load()
            if not s & READERS:
                raise LockError("read_unlock without read permission")
            if state.compare_and_set(s, s - 1):
                return

    def write_lock(self) -> None:
        state = self._state
        if state.compare_and_set(0, WRITER):
            return
        backoff = Backoff()
        while True:
            s = state.load()
            if not s & (WRITER | READERS):
                # clears WAITING too; other waiting writers set it again
                if state.compare_and_set(s, WRITER):
                    return
            elif not s & WAITING:
                state.compare_and_set(s, s | WAITING)
            backoff.pause()

    def write_unlock(self) -> None:
        state = self._state
        while True:
            s = state.load()
            if not s & WRITER:
                raise LockError("write_unlock without write permission")
            if state.compare_and_set(s, s & ~WRITER):
                return

    def try_read_lock(self, thread_id: int | None = None) -> int | None:
        state = self._state
        for _ in range(TRY_ATTEMPTS):
            s = state.load()
            if s & BLOCKERS:
                return None
            if state.compare_and_set(s, s + 1):
                return 0
        return None

    def try_write_lock(self) -> bool:
        state = self._state
        s = state.load()
        if s & (WRITER | READERS):
            return False
        return state.compare_and_set(s, WRITER)


class DistributedLock(RwLock):
    """Per-CPU style lock: an array of ``k`` centralized sublocks.

    A reader takes read permission on sublock ``thread_id % k``; the token is
    that index.  A writer takes write permission on every sublock in
    ascending order and releases them in descending order.

    Cache-line padding of sublocks has no meaning for Python objects; each
    sublock is its own heap object with its own state word.
    """

    __slots__ = ("k", "sublocks", "checked", "write_log")

    def __init__(self, k: int | None = None, *, checked: bool | None = None) -> None:
        k = k if k is not None else (os.cpu_count() or 1)
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = k
        self.sublocks = [CentralizedLock() for _ in range(k)]
        self.checked = checked_default() if checked is None else checked
        # thread id -> sublock order of that thread's latest write acquisition
        self.write_log: dict[int, list[int]] = {}

    def __repr__(self) -> str:
        return f"DistributedLock(k={self.k})"

    def read_lock(self, thread_id: int | None = None) -> int:
        if thread_id is None:
            thread_id = current_thread_id()
        i = thread_id % self.k
        self.sublocks[i].read_lock()
        return i

    def read_unlock(self, token: int) -> None:
        self.sublocks[token].read_unlock()

    def try_read_lock(self, thread_id: int | None = None) -> int | None:
        if thread_id is None:
            thread_id = current_thread_id()
        i = thread_id % self.k
        if self.sublocks[i].try_read_lock() is None:
            return None
        return i

    def write_lock(self) -> None:
        if self.checked:
            order = self.write_log[current_thread_id()] = []
            for i, sub in enumerate(self.sublocks):
                sub.write_lock()
                if order and order[-1] >= i:
                    raise LockError(f"sublock {i} acquired out of order: {order}")
                order.append(i)
            return
        for sub in self.sublocks:
            sub.write_lock()

    def write_unlock(self) -> None:
        for sub in reversed(self.sublocks):
            sub.write_unlock()

    def try_write_lock(self) -> bool:
        taken = 0
        for sub in self.sublocks:
            if not sub.try_write_lock():
                break
            taken += 1
        else:
            return True
        for sub in reversed(self.sublocks[:taken]):
            sub.write_unlock()
        return False
