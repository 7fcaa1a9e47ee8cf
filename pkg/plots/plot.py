#!/usr/bin/env python3
"""Render sweep summary CSVs into mean lines with +/- 2*SE bands.

Reads only the CSV emitted by the simulation harness (header
``axis,value,replication,RT,RT_sw,RT_dev,bound,relative,stderr,seed``);
it never re-runs a simulation.  One line per group (or a single line
when no group column is given), x-positions from --x, y-values averaged
across the replications at each x.

Usage:
    plot.py --csv sweep.csv --x value [--y relative] [--group axis] --out fig.png
"""

import argparse
import csv
import math
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


class ColumnError(ValueError):
    """A referenced column is missing from the CSV header."""


def load_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        rows = list(reader)
    return header, rows


def require_columns(header, columns):
    for col in columns:
        if col is not None and col not in header:
            raise ColumnError(f"column {col!r} not in CSV header {header}")


def group_series(rows, x_col, y_col, group_col):
    """Per group: sorted x positions with the replication mean and 2*SE of y."""
    buckets = {}
    for row in rows:
        key = row[group_col] if group_col else ""
        buckets.setdefault(key, {}).setdefault(float(row[x_col]), []).append(float(row[y_col]))
    series = {}
    for key, by_x in sorted(buckets.items()):
        xs = sorted(by_x)
        means, bands = [], []
        for x in xs:
            ys = by_x[x]
            mean = sum(ys) / len(ys)
            if len(ys) > 1:
                var = sum((y - mean) ** 2 for y in ys) / (len(ys) - 1)
                band = 2.0 * math.sqrt(var / len(ys))
            else:
                band = 0.0
            means.append(mean)
            bands.append(band)
        series[key] = (xs, means, bands)
    return series


def render(input_csv, x_axis, output, y_axis="relative", group_by=None):
    header, rows = load_rows(input_csv)
    require_columns(header, [x_axis, y_axis, group_by])
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    for key, (xs, means, bands) in group_series(rows, x_axis, y_axis, group_by).items():
        label = f"{group_by}={key}" if group_by else y_axis
        line, = ax.plot(xs, means, marker="o", label=label)
        lo = [m - b for m, b in zip(means, bands)]
        hi = [m + b for m, b in zip(means, bands)]
        ax.fill_between(xs, lo, hi, alpha=0.2, color=line.get_color())
    ax.set_xlabel(x_axis)
    ax.set_ylabel(y_axis)
    if rows:
        ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(output, metadata={"Software": None})
    plt.close(fig)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--csv", required=True, help="sweep summary CSV")
    parser.add_argument("--x", required=True, help="column for the x axis")
    parser.add_argument("--y", default="relative", help="column to average (default: relative)")
    parser.add_argument("--group", default=None, help="optional column splitting the lines")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        render(args.csv, args.x, args.out, y_axis=args.y, group_by=args.group)
    except ColumnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
