"""Compiled kernel vs pure-Python fallback on the bundled protocols.

    python3 benchmarks/bench_simulator.py --trials 20000

Both backends must produce identical statistics; the script aborts if
they do not.
"""
import argparse
import time

from kwhcheck.corpus import get_entry
from kwhcheck.simulator import KERNELS, estimate


def timed(ast, trials, seed, backend, workers=1):
    t = time.perf_counter()
    stats = estimate(ast, trials, seed, backend=backend, workers=workers)
    return stats, time.perf_counter() - t


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20_000, help="trials per input")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=4, help="threads for the threaded run")
    ap.add_argument("--protocols", nargs="*", default=["four_card_and", "five_card_and", "five_card_trick"])
    args = ap.parse_args(argv)

    if "cython" not in KERNELS:
        print("compiled kernel not built; only the fallback is available")
    print(f"{'protocol':<16} {'backend':<12} {'seconds':>9} {'trials/s':>12} {'speedup':>8}")
    for name in args.protocols:
        ast = get_entry(name).ast()
        ref, base = timed(ast, args.trials, args.seed, "python")
        rows = [("python", base, ref)]
        if "cython" in KERNELS:
            rows.append(("cython", *timed(ast, args.trials, args.seed, "cython")[::-1]))
            rows.append((f"cython x{args.workers}",
                         *timed(ast, args.trials, args.seed, "cython", args.workers)[::-1]))
        for label, secs, stats in rows:
            if stats != ref:
                raise SystemExit(f"{name}: {label} statistics differ from the fallback")
            rate = 4 * args.trials / secs
            print(f"{name:<16} {label:<12} {secs:>9.3f} {rate:>12,.0f} {base / secs:>7.1f}x")


if __name__ == "__main__":
    main()
