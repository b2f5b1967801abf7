#!/usr/bin/env python3
"""Run the lookup and migration experiments on the simulator and summarise them.

    python scripts/reproduce_experiments.py --out results/ --jitter 0.2
"""

import argparse
from dataclasses import replace
from pathlib import Path

from indirect_dht import bench
from indirect_dht.resolver import Strategy


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--jitter", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=100)
    args = ap.parse_args()

    latency = replace(bench.DEFAULT_LATENCY, jitter_fraction=args.jitter, seed=args.seed)
    spec = bench.ExperimentSpec(latency=latency, migration_trials=args.trials, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)

    lookup = bench.run_lookup_experiment(spec)
    bench.emit_csv(bench.lookup_rows(spec, lookup), args.out / "lookup.csv")
    print("lookup time (s)")
    for name, s in (("direct", lookup.direct), ("indirect", lookup.indirect)):
        print(f"  {name:9s} {s.mean / 1000:.2f} +- {s.stddev / 1000:.2f}")
    print(f"  ratio     {lookup.indirect.mean / lookup.direct.mean:.3f}")

    table = bench.run_migration_experiment(spec)
    bench.emit_csv(bench.migration_rows(spec, table), args.out / "migration.csv")
    direct = [r for r in table if r.strategy is Strategy.DIRECT]
    indirect = [r for r in table if r.strategy is Strategy.INDIRECT]
    slope, intercept, r2 = bench.fit_line([r.n for r in direct], [r.summary.mean for r in direct])
    print("\nmigration time (s)")
    print(f"  {'n':>5s} {'direct':>16s} {'indirect':>14s}")
    for d, i in zip(direct, indirect):
        print(f"  {d.n:5d} {d.summary.mean / 1000:8.2f} +- {d.summary.stddev / 1000:5.2f} "
              f"{i.summary.mean / 1000:6.2f} +- {i.summary.stddev / 1000:4.2f}")
    print(f"\n  direct fit: {slope:.2f} ms/resource + {intercept:.0f} ms (R^2 = {r2:.5f})")
    means = [r.summary.mean for r in indirect]
    print(f"  indirect max/min across n: {max(means) / min(means):.4f}")
    print(f"\nCSV written to {args.out}/")


if __name__ == "__main__":
    main()
