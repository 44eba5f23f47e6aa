#!/usr/bin/env python3
"""Generic plotter for the CLI's CSV outputs.

Usage: plot.py INPUT.csv --kind {CurveWithRegions,TimeSeries,SweepHeatmap}
                [--out FILE] [--png] [--resident D1,Q1]

Renders an image next to the input (same stem) unless --out is given.
SVG by default, PNG with --png.  Pure plotting: nothing is recomputed
from model parameters.
"""

import argparse
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


class DataError(Exception):
    """Missing or malformed input data."""


def read_csv(path, required=()):
    """Read a header CSV into a dict of float columns (non-numeric cells
    become NaN).  Reports missing data and absent columns by name."""
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file, no header row")
    header = rows[0]
    body = rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows under header {header}")
    for name in required:
        if name not in header:
            raise DataError(f"{path}: missing column {name!r}")
    columns = {}
    for j, name in enumerate(header):
        vals = []
        for row in body:
            cell = row[j] if j < len(row) else ""
            try:
                vals.append(float(cell))
            except ValueError:
                if cell == "":
                    vals.append(np.nan)
                else:
                    raise DataError(
                        f"{path}: column {name!r} has non-numeric cell {cell!r}")
        columns[name] = np.asarray(vals)
    return columns


def render_curve_with_regions(path, out, resident=None):
    """Critical-curve plot: shaded regions on either side of q*(d), the
    proportional ray through the resident, and the resident point."""
    cols = read_csv(path, required=("d", "q_star"))
    d = cols["d"]
    q = cols["q_star"]
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    top = max(1.05 * np.max(q), 0.1)
    ax.fill_between(d, q, top, alpha=0.18, color="tab:red",
                    label="resident prevails")
    ax.fill_between(d, 0.0, q, alpha=0.18, color="tab:blue",
                    label="invader prevails")
    ax.plot(d, q, "k-", lw=1.8, label=r"$q = q^*(d)$")
    if "lambda1_star" in cols and np.any(np.isfinite(cols["lambda1_star"])):
        ax2 = ax.twinx()
        ax2.plot(d, cols["lambda1_star"], "g--", lw=1.2,
                 label=r"$\lambda_1^*(d)$")
        ax2.axhline(0.0, color="g", lw=0.5, alpha=0.5)
        ax2.set_ylabel(r"$\lambda_1^*(d)$", color="g")
    if resident is not None:
        d1, q1 = resident
        ray = (q1 / d1) * d
        ax.plot(d, ray, color="gray", ls=":", lw=1.2,
                label=r"$q = (q_1/d_1)\,d$")
        ax.plot([d1], [q1], "ko", ms=6, mfc="yellow", zorder=5,
                label=r"$(d_1, q_1)$")
    ax.set_xlim(d.min(), d.max())
    ax.set_ylim(0.0, top)
    ax.set_xlabel("diffusion rate $d$")
    ax.set_ylabel("advection rate $q$")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def render_time_series(path, out):
    """Per-patch abundance curves over time, one panel per species."""
    cols = read_csv(path, required=("t",))
    t = cols["t"]
    u_names = sorted(n for n in cols if n.startswith("u"))
    v_names = sorted(n for n in cols if n.startswith("v"))
    if not u_names:
        raise DataError(f"{path}: missing column 'u1'")
    panels = 2 if v_names else 1
    fig, axes = plt.subplots(1, panels, figsize=(5.0 * panels, 3.8),
                             squeeze=False)
    for name in u_names:
        axes[0][0].plot(t, cols[name], label=f"${name[0]}_{name[1:]}$")
    axes[0][0].set_title("species 1")
    for ax in axes[0]:
        ax.set_xlabel("time $t$")
        ax.set_ylabel("abundance")
    if v_names:
        for name in v_names:
            axes[0][1].plot(t, cols[name], label=f"${name[0]}_{name[1:]}$")
        axes[0][1].set_title("species 2")
    for ax in axes[0]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def render_sweep_heatmap(path, out):
    """Region/prediction map over the (d2, q2) grid of a sweep CSV."""
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{path}: no data rows")
    for col in ("d2", "q2", "predicted"):
        if col not in rows[0]:
            raise DataError(f"{path}: missing column {col!r}")
    d2 = sorted({float(r["d2"]) for r in rows})
    q2 = sorted({float(r["q2"]) for r in rows})
    labels = sorted({r["predicted"] for r in rows})
    index = {lab: i for i, lab in enumerate(labels)}
    grid = np.full((len(q2), len(d2)), np.nan)
    for r in rows:
        i = q2.index(float(r["q2"]))
        j = d2.index(float(r["d2"]))
        grid[i, j] = index[r["predicted"]]
    fig, ax = plt.subplots(figsize=(5.4, 4.2))
    im = ax.imshow(grid, origin="lower", aspect="auto",
                   extent=(min(d2), max(d2), min(q2), max(q2)),
                   cmap="viridis", vmin=0, vmax=max(len(labels) - 1, 1))
    cbar = fig.colorbar(im, ticks=range(len(labels)))
    cbar.ax.set_yticklabels(labels, fontsize=7)
    ax.set_xlabel("invader diffusion $d_2$")
    ax.set_ylabel("invader advection $q_2$")
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def parse_resident(spec):
    if spec is None:
        return None
    parts = spec.split(",")
    if len(parts) != 2:
        raise DataError(f"resident {spec!r}: expected D1,Q1")
    return float(parts[0]), float(parts[1])


def default_out(input_path, png):
    stem, _ = os.path.splitext(input_path)
    return stem + (".png" if png else ".svg")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("input", help="CSV produced by the analysis CLI")
    parser.add_argument("--kind", required=True,
                        choices=["CurveWithRegions", "TimeSeries",
                                 "SweepHeatmap"])
    parser.add_argument("--out", help="output image path")
    parser.add_argument("--png", action="store_true",
                        help="write PNG instead of SVG")
    parser.add_argument("--resident",
                        help="D1,Q1 resident point for curve plots")
    args = parser.parse_args(argv)
    out = args.out or default_out(args.input, args.png)
    try:
        if args.kind == "CurveWithRegions":
            render_curve_with_regions(args.input, out,
                                      parse_resident(args.resident))
        elif args.kind == "TimeSeries":
            render_time_series(args.input, out)
        else:
            render_sweep_heatmap(args.input, out)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
