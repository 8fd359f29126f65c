"""Throughput of every lock across thread counts for one benchmark.

    python scripts/thread_sweep.py --bench rwbench --write-prob 0.0001 --csv sweep.csv

Prints a table of median ops/s and the bravo-centralized / centralized ratio.
"""

import argparse
import os

from bravo.bench import LOCK_IMPLS, BenchConfig, emit_csv, medians, run_repeated


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--bench", default="rwbench")
    p.add_argument("--write-prob", type=float, default=1e-4)
    p.add_argument("--threads", default=f"1,2,4,8,{os.cpu_count()}")
    p.add_argument("--duration", type=float, default=3.0)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--csv")
    args = p.parse_args()

    threads = sorted({int(t) for t in args.threads.split(",")})
    everything = []
    print(f"{'threads':>7} " + " ".join(f"{impl:>18}" for impl in LOCK_IMPLS) + f" {'bravo/central':>14}")
    for t in threads:
        row = {}
        for impl in LOCK_IMPLS:
            cfg = BenchConfig(args.bench, impl, threads=t, duration_s=args.duration,
                              write_prob=args.write_prob)
            results = run_repeated(cfg, args.reps)
            everything += results
            row[impl] = medians(results)[impl].ops_per_sec
        ratio = row["bravo-centralized"] / row["centralized"]
        print(f"{t:>7} " + " ".join(f"{row[i]:>18.0f}" for i in LOCK_IMPLS) + f" {ratio:>14.3f}")
    if args.csv:
        emit_csv(everything, args.csv)


if __name__ == "__main__":
    main()
