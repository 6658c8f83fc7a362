"""Timing the compiled game kernel against the pure-python fallback.

Runs the same seeded games through both variants, checks the costs agree
to the bit, and prints a per-tree table of runtimes and speedups. The
first compiled call pays JIT compilation; a warmup run absorbs it.

    python3 benchmarks/bench_kernel.py --repeats 5
"""

import argparse
import time

from hydralab.fastgame import ACTIVE_VARIANT, play_game
from hydralab.trees import build_complete_kary_tree, build_factorial_tree


def bench_one(tree, adversary, variant, repeats, seed=0):
    best = float("inf")
    cost = None
    for r in range(repeats):
        t0 = time.perf_counter()
        run = play_game(tree, adversary, seed=seed, behavioral=True,
                        variant=variant)
        best = min(best, time.perf_counter() - t0)
        assert run.checks_ok
        if cost is None:
            cost = (run.frac_cost_float, run.behavioral_cost)
        elif cost != (run.frac_cost_float, run.behavioral_cost):
            raise AssertionError("same seed must reproduce the same costs")
    return best, cost


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5,
                    help="timed repeats per cell, best-of is reported")
    args = ap.parse_args()

    if ACTIVE_VARIANT != "numba":
        print("compiled kernel unavailable (or disabled via "
              "HYDRALAB_DISABLE_NUMBA); nothing to compare")
        return 1

    cases = [
        ("factorial-6", build_factorial_tree(6)),
        ("factorial-7", build_factorial_tree(7)),
        ("factorial-8", build_factorial_tree(8)),
        ("kary-3-6", build_complete_kary_tree(3, 6)),
    ]
    play_game(cases[0][1], "greedy", variant="numba")  # JIT warmup

    header = f"{'tree':<12} {'nodes':>7} {'adversary':<9} " \
             f"{'python':>9} {'numba':>9} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, tree in cases:
        for adversary in ("greedy", "random"):
            tp, cp = bench_one(tree, adversary, "python", args.repeats)
            tn, cn = bench_one(tree, adversary, "numba", args.repeats)
            if cp != cn:
                raise AssertionError(
                    f"variants disagree on {label}/{adversary}: {cp} != {cn}")
            print(f"{label:<12} {tree.node_count:>7} {adversary:<9} "
                  f"{tp:>8.3f}s {tn:>8.3f}s {tp / tn:>7.1f}x")
    print("costs agreed bit-for-bit across variants on every cell")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
