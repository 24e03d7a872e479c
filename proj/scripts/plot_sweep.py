#!/usr/bin/env python3
"""Render sweep/trace CSVs produced by the d2dinc CLI.

Usage: plot_sweep.py <csv> [out.png]

Picks a sensible plot from the header: reward sweeps get utility and
compromise-level curves, simulation traces get the compromise trajectory.
"""
import csv
import sys


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows


def column(rows, name):
    out = []
    for r in rows:
        v = r.get(name, "")
        try:
            out.append(float(v))
        except ValueError:
            out.append(float("nan"))
    return out


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    path = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else path.rsplit(".", 1)[0] + ".png"
    rows = load(path)
    if not rows:
        sys.exit("empty csv")
    header = rows[0].keys()

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if "slot" in header:  # simulation trace
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(column(rows, "slot"), column(rows, "theta_hat"), lw=0.8)
        ax.set_xlabel("slot")
        ax.set_ylabel("compromised fraction")
        ax2 = ax.twinx()
        ax2.plot(column(rows, "slot"), column(rows, "effective_participation"),
                 color="tab:orange", lw=0.8)
        ax2.set_ylabel("effective participation", color="tab:orange")
    elif "r0" in header and "operator_utility" in header:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(column(rows, "r0"), column(rows, "operator_utility"), marker="o",
                ms=3, label="operator utility")
        ax.plot(column(rows, "r0"), column(rows, "effective_participation"),
                marker="s", ms=3, label="effective participation")
        ax.plot(column(rows, "r0"), column(rows, "theta_inf"), marker="^", ms=3,
                label="compromised fraction")
        ax.set_xlabel("unit reward r0")
        ax.legend()
    elif "t" in header:  # analytic trajectory
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(column(rows, "t"), column(rows, "theta"))
        ax.set_xlabel("time")
        ax.set_ylabel("compromised fraction")
    else:
        sys.exit("unrecognized csv header")
    fig.tight_layout()
    fig.savefig(out, dpi=140)
    print("wrote", out)


if __name__ == "__main__":
    main()
