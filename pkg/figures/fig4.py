#!/usr/bin/env python3
"""Bistability time-series figure: the two canonical runs of the
lake-outflow scenario with invader (0.08, 0.44), opposite winners.

Reads fig4_run1.csv and fig4_run2.csv (emitted by `driftlab figure
fig4`).
"""

import argparse
import os
import sys

from plot import render_time_series


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", default=".")
    parser.add_argument("--out-dir", default=".")
    parser.add_argument("--png", action="store_true")
    args = parser.parse_args(argv)
    ext = "png" if args.png else "svg"
    outputs = []
    for run in ("fig4_run1", "fig4_run2"):
        out = os.path.join(args.out_dir, f"{run}.{ext}")
        render_time_series(os.path.join(args.data_dir, f"{run}.csv"), out)
        outputs.append(out)
        print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
