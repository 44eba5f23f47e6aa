#!/usr/bin/env python3
"""Coexistence time-series figure: ocean-outflow scenario with invader
(0.05, 0.555), both species persisting.

Reads fig6_run.csv (emitted by `driftlab figure fig6`).
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
    out = os.path.join(args.out_dir, f"fig6.{ext}")
    render_time_series(os.path.join(args.data_dir, "fig6_run.csv"), out)
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
