#!/usr/bin/env python3
"""DET curve rendering on probit-scaled axes.

Reads a CSV of operating points (header fpr,fnr, rates as fractions)
and draws the detection error tradeoff curve with the EER point
annotated.

Usage: plot_det.py --csv det.csv --out fig.png
"""

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
from scipy.stats import norm


class PlotError(Exception):
    pass


def read_det_csv(path):
    path = Path(path)
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != ["fpr", "fnr"]:
                raise PlotError(f"{path}: expected header fpr,fnr")
            points = []
            for line in reader:
                if not line:
                    continue
                if len(line) != 2:
                    raise PlotError(f"{path}: malformed row {line!r}")
                points.append((float(line[0]), float(line[1])))
    except OSError as exc:
        raise PlotError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise PlotError(f"{path}: malformed value ({exc})") from exc
    if not points:
        raise PlotError(f"{path}: no operating points")
    return points


def equal_error_point(points):
    """Crossing of the piecewise-linear curve with the FPR = FNR diagonal."""
    best = min(points, key=lambda p: abs(p[0] - p[1]))
    for (fa, ma), (fb, mb) in zip(points, points[1:]):
        da, db = fa - ma, fb - mb
        if da == 0.0:
            return fa
        if da > 0.0 > db:
            frac = da / (da - db)
            return fa + frac * (fb - fa)
    return 0.5 * (best[0] + best[1])


def probit(p, floor=1e-4):
    return norm.ppf(min(max(p, floor), 1.0 - floor))


def plot_det(csv_path, out_path):
    points = read_det_csv(csv_path)
    eer = equal_error_point(points)
    xs = [probit(p[0]) for p in points]
    ys = [probit(p[1]) for p in points]

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(xs, ys, lw=1.5)
    ticks = [0.001, 0.01, 0.05, 0.2, 0.5, 0.9]
    tick_pos = [probit(t) for t in ticks]
    tick_labels = [f"{100 * t:g}" for t in ticks]
    ax.set_xticks(tick_pos)
    ax.set_xticklabels(tick_labels)
    ax.set_yticks(tick_pos)
    ax.set_yticklabels(tick_labels)
    ax.set_xlabel("false positive rate [%]")
    ax.set_ylabel("false negative rate [%]")
    lim = (probit(0.0005), probit(0.95))
    ax.plot(lim, lim, ls=":", color="gray", lw=1)
    ax.scatter([probit(eer)], [probit(eer)], color="red", zorder=3)
    ax.annotate(
        f"EER = {100 * eer:.2f}%",
        (probit(eer), probit(eer)),
        textcoords="offset points",
        xytext=(8, -12),
        fontsize=9,
    )
    ax.set_title(Path(csv_path).stem)
    ax.grid(True, which="both", ls=":", alpha=0.5)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return eer


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--csv", required=True, help="DET points CSV (fpr,fnr)")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        plot_det(args.csv, args.out)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
