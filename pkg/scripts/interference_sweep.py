"""Shared-table vs private-table throughput as the lock pool grows.

    python scripts/interference_sweep.py --max-pool 8192 --reps 3
"""

import argparse
import os

from bravo.bench import BenchConfig, emit_csv, medians, run_repeated


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--lock", default="bravo-centralized")
    p.add_argument("--threads", type=int, default=os.cpu_count())
    p.add_argument("--max-pool", type=int, default=8192)
    p.add_argument("--duration", type=float, default=3.0)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--csv")
    args = p.parse_args()

    everything = []
    worst = (float("inf"), None)
    print(f"{'pool':>6} {'shared':>12} {'private':>12} {'ratio':>7}")
    pool = 1
    while pool <= args.max_pool:
        cfg = BenchConfig("interference", args.lock, threads=args.threads,
                          duration_s=args.duration, lock_pool=pool)
        results = run_repeated(cfg, args.reps)
        everything += results
        med = medians(results)
        shared = med[args.lock].ops_per_sec
        private = med[f"{args.lock}/private"].ops_per_sec
        ratio = shared / private
        worst = min(worst, (ratio, pool))
        print(f"{pool:>6} {shared:>12.0f} {private:>12.0f} {ratio:>7.3f}")
        pool <<= 1
    print(f"minimum ratio {worst[0]:.3f} at pool {worst[1]}")
    if args.csv:
        emit_csv(everything, args.csv)


if __name__ == "__main__":
    main()
