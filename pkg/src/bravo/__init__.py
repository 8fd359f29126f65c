"""Reader-writer locks with a BRAVO reader-biased fast path."""

from .config import PolicyParams
from .core import BravoLock, SlowPath, VisibleReadersTable, global_table, hash_slot, mix64
from .rwlock import CentralizedLock, DistributedLock, LockError, RwLock, current_thread_id
from .stats import Event, LockStats, StatsRecorder

__all__ = [
    "BravoLock",
    "CentralizedLock",
    "DistributedLock",
    "Event",
    "LockError",
    "LockStats",
    "PolicyParams",
    "RwLock",
    "SlowPath",
    "StatsRecorder",
    "VisibleReadersTable",
    "current_thread_id",
    "global_table",
    "hash_slot",
    "mix64",
]
