"""How much of a writer's time goes to revocation, for several N.

A few reader threads hammer one BravoLock while a writer writes at random
intervals.  For each inhibit multiplier N the script reports revocation
count, mean revocation length and the fraction of wall time spent revoking,
next to the 1/(N+1) ceiling the policy guarantees.
"""

import argparse
import random
import threading
import time

from bravo import BravoLock, CentralizedLock, StatsRecorder, VisibleReadersTable


def measure(n, readers, duration, gap):
    rec = StatsRecorder(log_revocations=True)
    lock = BravoLock(CentralizedLock(), table=VisibleReadersTable(4096), n=n, stats=rec)
    stop = threading.Event()

    def reader(tid):
        while not stop.is_set():
            token = lock.read_lock(tid)
            lock.read_unlock(token)

    def writer():
        rng = random.Random(n)
        while not stop.is_set():
            with lock.writing():
                pass
            time.sleep(rng.random() * gap)

    threads = [threading.Thread(target=reader, args=(i + 1,)) for i in range(readers)]
    threads.append(threading.Thread(target=writer))
    for t in threads:
        t.start()
    time.sleep(duration)
    stop.set()
    for t in threads:
        t.join()
    return rec


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--n", default="0,1,3,9,19")
    p.add_argument("--readers", type=int, default=4)
    p.add_argument("--duration", type=float, default=3.0)
    p.add_argument("--gap", type=float, default=0.001, help="max seconds between writes")
    args = p.parse_args()

    print(f"{'N':>3} {'revocations':>11} {'mean us':>9} {'fraction':>9} {'ceiling':>8}")
    for n in (int(v) for v in args.n.split(",")):
        rec = measure(n, args.readers, args.duration, args.gap)
        log = rec.revocation_log
        if not log:
            print(f"{n:>3} {0:>11}")
            continue
        total = sum(r.duration_ns for r in log)
        window = log[-1].start_ns + log[-1].duration_ns - log[0].start_ns
        print(f"{n:>3} {len(log):>11} {total / len(log) / 1e3:>9.1f} "
              f"{total / window:>9.4f} {1 / (n + 1):>8.4f}")


if __name__ == "__main__":
    main()
