"""Runtime knobs, overridable from the environment.

``BRAVO_TABLE_SIZE``  visible readers table size (power of two, default 4096)
``BRAVO_N``           inhibit multiplier applied to revocation time (default 9)
``BRAVO_CHECKED``     non-empty and not ``0`` enables extra misuse checks
"""

from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_TABLE_SIZE = 4096
DEFAULT_N = 9


def checked_default() -> bool:
    return os.environ.get("BRAVO_CHECKED", "") not in ("", "0")


@dataclass(frozen=True)
class PolicyParams:
    n_multiplier: int = DEFAULT_N
    table_size: int = DEFAULT_TABLE_SIZE

    def __post_init__(self) -> None:
        if self.n_multiplier < 0:
            raise ValueError(f"n_multiplier must be >= 0, got {self.n_multiplier}")
        s = self.table_size
        if s < 1 or s & (s - 1):
            raise ValueError(f"table_size must be a power of two, got {s}")

    @classmethod
    def from_env(cls) -> PolicyParams:
        return cls(
            n_multiplier=int(os.environ.get("BRAVO_N", DEFAULT_N)),
            table_size=int(os.environ.get("BRAVO_TABLE_SIZE", DEFAULT_TABLE_SIZE)),
        )
