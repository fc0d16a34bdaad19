#!/usr/bin/env python3
"""Plot any anosov-lab CSV: first column on x, the rest as lines."""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import csv


def main(path):
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(c) for c in row] for row in reader]
    cols = list(zip(*rows))
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for name, col in zip(header[1:], cols[1:]):
        ax.plot(cols[0], col, label=name, linewidth=0.8)
    ax.set_xlabel(header[0])
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    out = path.rsplit(".", 1)[0] + ".png"
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(out)


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit("usage: plot_orbit.py <csv>")
    main(sys.argv[1])
