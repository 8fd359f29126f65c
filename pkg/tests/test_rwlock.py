import threading
import time

import pytest

from bravo.rwlock import CentralizedLock, DistributedLock, LockError, current_thread_id
from oracles import NoLock, stress


def wait_until(pred, timeout=5.0):
    deadline = time.monotonic() + timeout
    while not pred():
        if time.monotonic() > deadline:
            raise TimeoutError("condition never became true")
        time.sleep(0.0005)


# -- centralized ---------------------------------------------------------

def test_uncontended_reader():
    lock = CentralizedLock()
    token = lock.read_lock()
    assert lock.readers == 1
    lock.read_unlock(token)
    assert lock.readers == 0


def test_readers_share():
    lock = CentralizedLock()
    tokens = [lock.read_lock() for _ in range(3)]
    assert lock.readers == 3
    for t in tokens:
        lock.read_unlock(t)
    assert lock.readers == 0


def test_idle_writer_takes_lock_in_one_step():
    lock = CentralizedLock()
    lock.write_lock()
    assert lock.writer_present and lock.readers == 0 and not lock.writer_waiting
    lock.write_unlock()
    assert not lock.writer_present


def test_try_variants():
    lock = CentralizedLock()
    assert lock.try_write_lock()
    assert lock.try_read_lock() is None
    assert not lock.try_write_lock()
    assert lock.writer_present and lock.readers == 0
    lock.write_unlock()
    token = lock.try_read_lock()
    assert token is not None
    assert not lock.try_write_lock()
    lock.read_unlock(token)


def test_release_without_hold_raises():
    lock = CentralizedLock()
    with pytest.raises(LockError):
        lock.read_unlock(0)
    with pytest.raises(LockError):
        lock.write_unlock()
    lock.write_lock()
    with pytest.raises(LockError):
        lock.read_unlock(0)
    assert lock.writer_present
    lock.write_unlock()


def test_writer_waits_for_readers_then_enters():
    lock = CentralizedLock()
    tokens = [lock.read_lock(), lock.read_lock()]
    order = []
    w = threading.Thread(target=lambda: (lock.write_lock(), order.append("writer in")))
    w.start()
    wait_until(lambda: lock.writer_waiting)
    assert order == []
    lock.read_unlock(tokens.pop())
    order.append("reader out")
    lock.read_unlock(tokens.pop())
    order.append("last reader out")
    w.join()
    assert order == ["reader out", "last reader out", "writer in"]
    lock.write_unlock()


def test_arriving_reader_yields_to_waiting_writer():
    lock = CentralizedLock()
    held = lock.read_lock()
    order = []

    def writer():
        lock.write_lock()
        order.append("writer in")
        lock.write_unlock()

    def reader():
        token = lock.read_lock()
        order.append("late reader in")
        lock.read_unlock(token)

    w = threading.Thread(target=writer)
    w.start()
    wait_until(lambda: lock.writer_waiting)
    # writer preference: a new reader is refused while a writer waits
    assert lock.try_read_lock() is None
    r = threading.Thread(target=reader)
    r.start()
    time.sleep(0.02)
    assert order == []
    lock.read_unlock(held)
    w.join()
    r.join()
    assert order == ["writer in", "late reader in"]


def test_context_managers():
    lock = CentralizedLock()
    with lock.reading():
        assert lock.readers == 1
    with lock.writing():
        assert lock.writer_present
    assert repr(lock) == "CentralizedLock(readers=0, writer=False, waiting=False)"


def test_concurrent_writers_serialize(fast_switching):
    lock = CentralizedLock()
    final, expected, torn = stress(lock, readers=0, writers=6, iterations=2000)
    assert final == expected


def test_centralized_guarded_counter(fast_switching):
    final, expected, torn = stress(CentralizedLock(), readers=4, writers=2)
    assert final == expected and torn == []


def test_oracle_catches_a_broken_lock(fast_switching):
    final, expected, torn = stress(NoLock(), readers=4, writers=4, iterations=3000)
    assert final != expected or torn


# -- distributed ---------------------------------------------------------

def test_reader_uses_thread_index_mod_k():
    lock = DistributedLock(4)
    token = lock.read_lock(6)
    assert token == 2
    assert [s.readers for s in lock.sublocks] == [0, 0, 1, 0]
    lock.read_unlock(token)


def test_writer_holds_every_sublock():
    lock = DistributedLock(4)
    lock.write_lock()
    assert all(s.writer_present for s in lock.sublocks)
    lock.write_unlock()
    assert not any(s.writer_present for s in lock.sublocks)


def test_default_k_is_cpu_count():
    import os
    assert DistributedLock().k == (os.cpu_count() or 1)


def test_checked_writer_order_is_ascending():
    lock = DistributedLock(5, checked=True)
    lock.write_lock()
    assert lock.write_log[current_thread_id()] == [0, 1, 2, 3, 4]
    lock.write_unlock()


def test_try_write_backs_out_when_a_sublock_is_busy():
    lock = DistributedLock(4)
    token = lock.read_lock(2)
    assert not lock.try_write_lock()
    assert not any(s.writer_present for s in lock.sublocks)
    lock.read_unlock(token)
    assert lock.try_write_lock()
    assert lock.try_read_lock(1) is None
    lock.write_unlock()


def test_read_only_threads_touch_disjoint_sublocks():
    k = 8
    lock = DistributedLock(k)
    inside = threading.Barrier(k + 1)
    leave = threading.Event()

    def reader(i):
        token = lock.read_lock(i)
        inside.wait()
        leave.wait()
        lock.read_unlock(token)

    threads = [threading.Thread(target=reader, args=(i,)) for i in range(k)]
    for t in threads:
        t.start()
    inside.wait()
    assert [s.readers for s in lock.sublocks] == [1] * k
    leave.set()
    for t in threads:
        t.join()
    assert [s.readers for s in lock.sublocks] == [0] * k


def test_distributed_guarded_counter(fast_switching):
    lock = DistributedLock(4)
    final, expected, torn = stress(lock, readers=4, writers=2, thread_ids=[0, 1, 2, 3])
    assert final == expected and torn == []
