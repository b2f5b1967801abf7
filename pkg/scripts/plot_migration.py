#!/usr/bin/env python3
"""Plot a migration CSV as three panels (n <= 100, 1000, 5000). Needs matplotlib."""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from indirect_dht.bench import read_csv  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", type=Path)
    ap.add_argument("--out", type=Path, default=Path("migration.png"))
    args = ap.parse_args()

    rows = [r for r in read_csv(args.csv) if r.experiment == "migration"]
    fig, axes = plt.subplots(1, 3, figsize=(15, 4))
    for ax, limit in zip(axes, (100, 1000, 5000)):
        for strategy, marker in (("direct", "o"), ("indirect", "s")):
            sel = [r for r in rows if r.strategy == strategy and r.n <= limit]
            ax.errorbar([r.n for r in sel], [r.mean_ms / 1000 for r in sel], yerr=[r.stddev_ms / 1000 for r in sel],
                        marker=marker, capsize=3, label=strategy)
        ax.set_xlabel("resources in host")
        ax.set_ylabel("migration time (s)")
        ax.set_title(f"up to {limit} resources")
        ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
