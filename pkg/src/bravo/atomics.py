"""Atomic cells for CPython.

Under the GIL a single load or store of an attribute or list element is
atomic and all threads observe one global order of such accesses, so plain
loads and stores already behave like sequentially consistent atomics.  What
the interpreter does not give us is a read-modify-write: ``x = x + 1`` spans
several bytecodes and a thread switch may land in between.  The classes here
add compare-and-set and fetch-and-add by running the read-modify-write under
a small guard mutex.  The guard is only ever held for a handful of bytecodes
and never while waiting for anything else.
"""

from __future__ import annotations

import threading

__all__ = ["AtomicInt", "AtomicArray"]


class AtomicInt:
    """A single integer word with load/store/CAS/fetch-add."""

    __slots__ = ("_value", "_guard")

    def __init__(self, value: int = 0) -> None:
        self._value = value
        self._guard = threading.Lock()

    def __repr__(self) -> str:
        return f"AtomicInt({self._value})"

    def load(self) -> int:
        return self._value

    def store(self, value: int) -> None:
        with self._guard:
            self._value = value

    def compare_and_set(self, expected: int, new: int) -> bool:
        # test-and-test-and-set: a failing CAS never touches the guard
        if self._value != expected:
            return False
        with self._guard:
            if self._value != expected:
                return False
            self._value = new
            return True

    def fetch_add(self, delta: int) -> int:
        """Add ``delta`` and return the previous value."""
        with self._guard:
            old = self._value
            self._value = old + delta
            return old


class AtomicArray:
    """Fixed-size array of integer cells with per-cell CAS.

    RMW guards are striped: cell ``i`` is guarded by ``guards[i % stripes]``.
    ``store`` is a plain store and is only linearizable against concurrent
    CAS on the same cell when the storing thread is the cell's current owner,
    i.e. no CAS expecting the current value can succeed.  That is how the
    visible readers table uses it: only the publisher clears its slot.
    """

    __slots__ = ("cells", "_guards", "_stripe_mask")

    def __init__(self, size: int, stripes: int = 256) -> None:
        if size <= 0:
            raise ValueError(f"size must be positive, got {size}")
        stripes = min(stripes, size)
        if stripes & (stripes - 1):
            raise ValueError(f"stripes must be a power of two, got {stripes}")
        self.cells = [0] * size
        self._guards = [threading.Lock() for _ in range(stripes)]
        self._stripe_mask = stripes - 1

    def __len__(self) -> int:
        return len(self.cells)

    def load(self, i: int) -> int:
        return self.cells[i]

    def store(self, i: int, value: int) -> None:
        self.cells[i] = value

    def compare_and_set(self, i: int, expected: int, new: int) -> bool:
        cells = self.cells
        if cells[i] != expected:
            return False
        with self._guards[i & self._stripe_mask]:
            if cells[i] != expected:
                return False
            cells[i] = new
            return True

    def find(self, value: int, start: int = 0) -> int:
        """Index of the first cell ``>= start`` equal to ``value``, or -1.

        ``list.index`` compares small ints without releasing the GIL, so the
        scan observes a single consistent snapshot.
        """
        try:
            return self.cells.index(value, start)
        except ValueError:
            return -1
