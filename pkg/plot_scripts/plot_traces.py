#!/usr/bin/env python3
"""Render perturbation-experiment CSVs.

Trace mode overlays the base and perturbed runs of one output column, one
panel per step size; the inputs are the CSV files written by the simulator
(`base_dt<tag>.csv` / `pert_dt<tag>.csv`).  Summary mode draws the D(dt)
deviation table as a log-log chart with one point per step size.

    plot_traces.py --in base_dt8em-05.csv pert_dt8em-05.csv --out traces.png --col v_X1
    plot_traces.py --ddt summary.csv --out ddt.png

The script consumes only the documented CSV contract: a header row starting
with `time`, comma separation, `.` decimal point.
"""

from __future__ import annotations

import argparse
import csv
import os
import re
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


class PlotError(RuntimeError):
    pass


def read_csv_columns(path: str) -> dict[str, list[float]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotError(f"{path}: empty file") from None
        cols: dict[str, list[float]] = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                cols[name].append(float(value))
    return cols


def column_or_fail(cols: dict[str, list[float]], name: str, path: str) -> list[float]:
    if name not in cols:
        raise PlotError(
            f"{path}: column {name!r} not found (available: {', '.join(cols)})"
        )
    return cols[name]


_DT_TAG = re.compile(r"_dt([^.]+(?:\.[0-9]+)?)\.csv$")


def group_by_dt(paths: list[str]) -> dict[str, dict[str, str]]:
    """Group base_/pert_ file pairs by their dt tag; ungrouped files form
    their own single-trace panels."""
    groups: dict[str, dict[str, str]] = {}
    for path in paths:
        name = os.path.basename(path)
        m = _DT_TAG.search(name)
        tag = m.group(1) if m else name
        role = "pert" if name.startswith("pert") else "base"
        groups.setdefault(tag, {})[role] = path
    return groups


def plot_traces(paths: list[str], column: str, out: str):
    groups = group_by_dt(paths)
    n = len(groups)
    fig, axes = plt.subplots(n, 1, figsize=(7.0, 2.4 * n), squeeze=False, sharex=True)
    for ax, (tag, pair) in zip(axes[:, 0], sorted(groups.items())):
        for role, style in (("base", dict(color="#1f77b4", lw=1.0, label="base")),
                            ("pert", dict(color="#d62728", lw=0.8, label="perturbed"))):
            if role not in pair:
                continue
            cols = read_csv_columns(pair[role])
            y = column_or_fail(cols, column, pair[role])
            ax.plot(cols["time"], y, **style)
        ax.set_ylabel(column)
        ax.set_title(f"dt tag {tag}", fontsize=9)
        ax.legend(loc="upper right", fontsize=8)
    axes[-1, 0].set_xlabel("time (s)")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    return fig


def plot_ddt(summary_path: str, out: str):
    cols = read_csv_columns(summary_path)
    dts = column_or_fail(cols, "dt", summary_path)
    devs = column_or_fail(cols, "D", summary_path)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.loglog(dts, devs, marker="o", color="#2ca02c")
    ax.set_xlabel("dt (s)")
    ax.set_ylabel("max deviation D")
    ax.grid(True, which="both", alpha=0.3)
    ax.invert_xaxis()
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    return fig


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--in", dest="inputs", nargs="+", default=[], metavar="CSV")
    parser.add_argument("--out", required=True, metavar="PNG")
    parser.add_argument("--col", default=None, help="output column for trace panels")
    parser.add_argument("--ddt", default=None, metavar="SUMMARY_CSV",
                        help="draw the D(dt) log-log chart instead of traces")
    args = parser.parse_args(argv)

    try:
        if args.ddt is not None:
            plot_ddt(args.ddt, args.out)
        else:
            if not args.inputs:
                parser.error("trace mode needs --in files")
            if args.col is None:
                parser.error("trace mode needs --col")
            plot_traces(args.inputs, args.col, args.out)
    except (PlotError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
