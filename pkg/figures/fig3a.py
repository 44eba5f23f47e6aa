#!/usr/bin/env python3
"""Critical-curve figure for the lake-outflow case, resident (1, 0.5).

Reads fig3a_curve.csv (emitted by `driftlab figure fig3a`) and renders
the shaded-region curve plot with the resident marked.
"""

import argparse
import os
import sys

from plot import render_curve_with_regions


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", default=".")
    parser.add_argument("--out-dir", default=".")
    parser.add_argument("--png", action="store_true")
    args = parser.parse_args(argv)
    ext = "png" if args.png else "svg"
    out = os.path.join(args.out_dir, f"fig3a.{ext}")
    render_curve_with_regions(
        os.path.join(args.data_dir, "fig3a_curve.csv"), out,
        resident=(1.0, 0.5))
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
