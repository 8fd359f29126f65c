import random

import pytest
from hypothesis import given, strategies as st
from scipy import stats

from bravo.core import hash_slot, mix64

M64 = (1 << 64) - 1


def chi_square_band(samples: int, buckets: int, seed: int):
    rng = random.Random(seed)
    counts = [0] * buckets
    for _ in range(samples):
        tid = rng.randrange(1, 1 << 16)
        # heap-like, 16-byte aligned object addresses
        lock_id = 0x7F0000000000 + 16 * rng.randrange(1 << 32)
        counts[hash_slot(tid, lock_id, buckets)] += 1
    expected = samples / buckets
    chi2 = sum((c - expected) ** 2 / expected for c in counts)
    lo, hi = stats.chi2.ppf([0.025, 0.975], buckets - 1)
    return chi2, lo, hi


def test_chi_square_small_sample():
    chi2, lo, hi = chi_square_band(1 << 16, 256, seed=1)
    assert lo <= chi2 <= hi


def test_mix64_known_values():
    # splitmix64 outputs for seed 0: mix64 of the first two gamma increments
    assert mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF
    assert mix64((2 * 0x9E3779B97F4A7C15) & M64) == 0x6E789E6AA1B965F4


def test_mix64_zero_is_fixed_point():
    assert mix64(0) == 0


@given(st.integers(0, (1 << 20) - 1), st.integers(1, M64), st.sampled_from([1, 2, 64, 4096, 1 << 16]))
def test_range_and_determinism(tid, lock_id, size):
    i = hash_slot(tid, lock_id, size)
    assert 0 <= i < size
    assert hash_slot(tid, lock_id, size) == i


def test_threads_spread_over_slots_for_one_lock():
    lock_id = 0x7F12_3456_7890
    slots = {hash_slot(t, lock_id) for t in range(1, 65)}
    # 64 threads into 4096 slots: the birthday bound makes a few clashes possible
    assert len(slots) >= 60


@pytest.mark.parametrize("size", [3, 100, 0])
def test_table_rejects_non_power_of_two(size):
    from bravo.core import VisibleReadersTable
    with pytest.raises(ValueError):
        VisibleReadersTable(size)
