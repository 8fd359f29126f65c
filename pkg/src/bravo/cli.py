"""Command line front end for the microbenchmarks.

    bravo-bench --bench rwbench --lock centralized,bravo-centralized \\
                --threads 1,2,4,8 --write-prob 0.0001 --csv out.csv

Exit status: 0 on success, 2 on a configuration error, 3 when the guarded
counter oracle detects a mutual exclusion failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Sequence

from .bench import (
    BENCHMARKS,
    LOCK_IMPLS,
    BenchConfig,
    BenchResult,
    ConfigError,
    SafetyViolation,
    emit_csv,
    medians,
    run_repeated,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SAFETY = 3

POOL_SWEEP = [1 << i for i in range(14)]  # 1 .. 8192


def default_threads() -> list[int]:
    return sorted({1, 2, 4, 8, os.cpu_count() or 1})


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _pool_list(text: str) -> list[int]:
    return POOL_SWEEP if text == "sweep" else _int_list(text)


def _lock_list(text: str) -> list[str]:
    if text == "all":
        return list(LOCK_IMPLS)
    locks = [v for v in text.split(",") if v]
    for lock in locks:
        if lock not in LOCK_IMPLS:
            raise argparse.ArgumentTypeError(f"unknown lock {lock!r}; pick from {LOCK_IMPLS} or 'all'")
    return locks


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bravo-bench", description=__doc__.split("\n\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--bench", choices=BENCHMARKS, required=True)
    p.add_argument("--lock", type=_lock_list, default=["centralized", "bravo-centralized"],
                   help="comma-separated lock implementations, or 'all'")
    p.add_argument("--threads", type=_int_list, default=None,
                   help="comma-separated thread counts (default 1,2,4,8,#cpus)")
    p.add_argument("--duration", type=float, default=3.0, help="seconds per run")
    p.add_argument("--write-prob", type=float, default=0.0)
    p.add_argument("--pool", type=_pool_list, default=None,
                   help="lock pool sizes, comma-separated, or 'sweep' for 1..8192")
    p.add_argument("--table-size", type=int, default=4096)
    p.add_argument("--n", type=int, default=9, help="inhibit multiplier")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=7, help="runs per data point; the median is reported")
    p.add_argument("--csv", default=None, help="write every run to this CSV file")
    p.add_argument("--pin", action="store_true", help="pin worker threads to CPUs round-robin")
    p.add_argument("--full", action="store_true", help="10 s runs and 7 repetitions")
    p.add_argument("--sublocks", type=int, default=None,
                   help="sublocks per distributed lock (default: logical CPU count)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _print_medians(results: Sequence[BenchResult]) -> None:
    meds = medians(results)
    for label, r in meds.items():
        s = r.stats
        print(f"{r.config.benchmark:<12} {label:<28} T={r.config.threads:<3} "
              f"P={r.config.write_prob:<8g} pool={r.config.lock_pool:<5} "
              f"{r.ops_per_sec:>12.0f} ops/s  (median of {r.median_of}; "
              f"fast={s.fast_reads} slow={s.slow_reads} revocations={s.revocations})")
    if r.config.benchmark == "interference":
        shared = meds.get(r.config.lock_impl)
        private = meds.get(f"{r.config.lock_impl}/private")
        if shared and private and private.ops_per_sec:
            print(f"{'':<12} shared/private ratio = {shared.ops_per_sec / private.ops_per_sec:.3f}")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    duration, reps = (10.0, 7) if args.full else (args.duration, args.reps)
    threads = args.threads or default_threads()
    pools = args.pool or (POOL_SWEEP if args.bench == "interference" else [1])
    if reps < 1:
        print("error: --reps must be >= 1", file=sys.stderr)
        return EXIT_CONFIG

    all_results: list[BenchResult] = []
    try:
        for lock in args.lock:
            for t in threads:
                for pool in pools:
                    cfg = BenchConfig(
                        benchmark=args.bench, lock_impl=lock, threads=t,
                        duration_s=duration, write_prob=args.write_prob,
                        lock_pool=pool, table_size=args.table_size,
                        n_multiplier=args.n, seed=args.seed, csv_path=args.csv,
                        pin=args.pin, sublocks=args.sublocks,
                    )
                    results = run_repeated(cfg, reps)
                    _print_medians(results)
                    all_results.extend(results)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SafetyViolation as exc:
        print(f"SAFETY VIOLATION: {exc}", file=sys.stderr)
        if args.csv and all_results:
            emit_csv(all_results, args.csv)
        return EXIT_SAFETY

    if args.csv:
        emit_csv(all_results, args.csv)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
