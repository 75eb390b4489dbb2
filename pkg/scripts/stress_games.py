"""Play many seeded games on random equivalent pairs and tally extension strategies."""

import argparse
import random
import time
from collections import Counter

from warfield.backforth import HeightViolation, Stuck, run_game
from warfield.corpus import random_pair
from warfield.io import dumps


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=100)
    ap.add_argument("--rounds", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--kinds", default="torsion-families,mixed,gappy")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    kinds = args.kinds.split(",")
    steps, failures = Counter(), 0
    start = time.perf_counter()
    for i in range(args.pairs):
        kind = kinds[i % len(kinds)]
        G, H = random_pair(rng, True, kind)
        try:
            trace = run_game(G, H, rounds=args.rounds, seed=args.seed + i)
        except (Stuck, HeightViolation) as exc:
            failures += 1
            print(f"pair {i} ({kind}) failed: {exc}")
            print(dumps(G))
            print(dumps(H))
            continue
        steps.update(trace.strategy_counts())
    elapsed = time.perf_counter() - start
    print(f"{args.pairs} pairs, {args.rounds} rounds, {failures} failures, {elapsed:.1f}s")
    for tag, n in sorted(steps.items()):
        print(f"  {tag}: {n}")
    raise SystemExit(1 if failures else 0)


if __name__ == "__main__":
    main()
