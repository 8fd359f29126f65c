"""Property tests: single-threaded operation sequences against a permission model."""

import random

from hypothesis import given, settings, strategies as st
from hypothesis.stateful import RuleBasedStateMachine, invariant, precondition, rule

from bravo import BravoLock, CentralizedLock, DistributedLock, SlowPath, VisibleReadersTable
from oracles import PermissionOracle, lock_cells, random_sequence

tids = st.integers(min_value=1, max_value=64)


class BravoMachine(RuleBasedStateMachine):
    def __init__(self):
        super().__init__()
        # tiny table so collisions are frequent
        self.lock = BravoLock(CentralizedLock(), table=VisibleReadersTable(8), n=0)
        self.oracle = PermissionOracle()
        self.held = []

    @rule(tid=tids)
    def try_read(self, tid):
        token = self.lock.try_read_lock(tid)
        assert (token is None) == self.oracle.writer
        if token is not None:
            self.held.append(token)
            self.oracle.readers += 1

    @rule()
    def try_write(self):
        got = self.lock.try_write_lock()
        assert got == self.oracle.free
        self.oracle.writer |= got

    @precondition(lambda self: not self.oracle.writer)
    @rule(tid=tids)
    def read(self, tid):
        self.held.append(self.lock.read_lock(tid))
        self.oracle.readers += 1

    @precondition(lambda self: self.oracle.free)
    @rule()
    def write(self):
        self.lock.write_lock()
        self.oracle.writer = True

    @precondition(lambda self: self.held)
    @rule(data=st.data())
    def read_unlock(self, data):
        i = data.draw(st.integers(0, len(self.held) - 1))
        self.lock.read_unlock(self.held.pop(i))
        self.oracle.readers -= 1

    @precondition(lambda self: self.oracle.writer)
    @rule()
    def write_unlock(self):
        self.lock.write_unlock()
        self.oracle.writer = False

    @invariant()
    def table_matches_fast_tokens(self):
        fast = [t for t in self.held if type(t) is int]
        assert lock_cells(self.lock) == len(fast) == len(set(fast))

    @invariant()
    def underlying_matches_slow_tokens(self):
        slow = sum(isinstance(t, SlowPath) for t in self.held)
        assert self.lock.underlying.readers == slow
        assert self.lock.underlying.writer_present == self.oracle.writer

    @invariant()
    def no_bias_while_writing(self):
        if self.oracle.writer:
            assert not self.lock.rbias


TestBravoMachine = BravoMachine.TestCase
TestBravoMachine.settings = settings(max_examples=150, stateful_step_count=60, deadline=None)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.sampled_from([0, 9]),
       size=st.sampled_from([4, 64, 4096]), distributed=st.booleans())
def test_random_sequences(seed, n, size, distributed):
    inner = DistributedLock(3) if distributed else CentralizedLock()
    lock = BravoLock(inner, table=VisibleReadersTable(size), n=n)
    counts = random_sequence(lock, 400, random.Random(seed))
    assert sum(counts.values()) > 0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32), k=st.integers(1, 5))
def test_baselines_follow_the_same_model(seed, k):
    for lock in (CentralizedLock(), DistributedLock(k)):
        random_sequence(lock, 300, random.Random(seed))
