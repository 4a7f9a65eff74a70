#!/usr/bin/env python3
"""Scatter plot of diffusion-map embedding CSVs.

Reads the pipeline's exported embeddings (header
file_id,gender,label,attack,dm_1..dm_K) and renders the first 2 or 3
coordinates, one color per class (genuine plus each attack id). Static
image output only.

Usage: plot_embedding.py --csv embeddings.csv --dims 2|3 --out fig.png
"""

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


class PlotError(Exception):
    pass


def read_embedding_csv(path):
    """Returns (class label per row, coordinate rows)."""
    path = Path(path)
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if not header or header[:4] != ["file_id", "gender", "label", "attack"]:
                raise PlotError(f"{path}: not an embeddings CSV (bad header)")
            dm_cols = [c for c in header[4:] if c.startswith("dm_")]
            if len(dm_cols) != len(header) - 4 or not dm_cols:
                raise PlotError(f"{path}: expected dm_1..dm_K value columns")
            classes = []
            rows = []
            for line in reader:
                if not line:
                    continue
                label, attack = line[2], line[3]
                classes.append("genuine" if attack == "None" and label == "genuine" else attack)
                rows.append([float(v) for v in line[4:]])
    except OSError as exc:
        raise PlotError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise PlotError(f"{path}: malformed value ({exc})") from exc
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return classes, rows


def plot_embedding(csv_path, dims, out_path):
    classes, rows = read_embedding_csv(csv_path)
    k = len(rows[0])
    if dims not in (2, 3):
        raise PlotError(f"dims must be 2 or 3, got {dims}")
    if k < dims:
        raise PlotError(f"need at least {dims} dm_ columns, found {k}")

    ordered = sorted(set(classes), key=lambda c: (c != "genuine", c))
    cmap = plt.get_cmap("tab10")
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(111, projection="3d" if dims == 3 else None)
    for i, cls in enumerate(ordered):
        pts = [r for r, c in zip(rows, classes) if c == cls]
        coords = list(zip(*pts))
        ax.scatter(
            *coords[:dims],
            s=8,
            alpha=0.7,
            color=cmap(i % 10),
            label=cls,
        )
    ax.set_xlabel("dm_1")
    ax.set_ylabel("dm_2")
    if dims == 3:
        ax.set_zlabel("dm_3")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(Path(csv_path).stem)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return ordered


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--csv", required=True, help="embeddings CSV")
    parser.add_argument("--dims", type=int, default=2, choices=(2, 3))
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        plot_embedding(args.csv, args.dims, args.out)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
