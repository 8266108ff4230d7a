#!/usr/bin/env python3
"""Plot cumulative regret curves written by `ngbandit simulate`.

    python3 scripts/plot_regret.py fig2a.csv fig2b.csv -o fig2.png
"""
import argparse
import csv
import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path):
    curves = defaultdict(lambda: ([], [], []))
    title = None
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            r, m, s = curves[row["agent"]]
            r.append(int(row["round"]))
            m.append(float(row["mean_cum_regret"]))
            s.append(float(row["stderr"]))
            title = f"α*={row['alpha_star']}, β*={row['beta_star']}, {row['replications']} reps"
    return title, curves


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv", nargs="+")
    ap.add_argument("-o", "--out", default="regret.png")
    args = ap.parse_args()

    fig, axes = plt.subplots(1, len(args.csv), figsize=(5 * len(args.csv), 4), squeeze=False)
    for ax, path in zip(axes[0], args.csv):
        title, curves = load(path)
        for agent, (rounds, mean, se) in curves.items():
            ax.plot(rounds, mean, label=agent)
            if not any(math.isnan(x) for x in se):
                lo = [m - 2 * s for m, s in zip(mean, se)]
                hi = [m + 2 * s for m, s in zip(mean, se)]
                ax.fill_between(rounds, lo, hi, alpha=0.2)
        ax.set_title(title)
        ax.set_xlabel("round")
        ax.set_ylabel("cumulative regret")
        ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
