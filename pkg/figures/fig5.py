#!/usr/bin/env python3
"""Critical-curve figures for the ocean-outflow case at d1 = 1, with
low (0.5) and high (3) resident advection.

Reads fig5_q05.csv and fig5_q3.csv (emitted by `driftlab figure fig5`).
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
    for stem, resident in (("fig5_q05", (1.0, 0.5)), ("fig5_q3", (1.0, 3.0))):
        out = os.path.join(args.out_dir, f"{stem}.{ext}")
        render_curve_with_regions(
            os.path.join(args.data_dir, f"{stem}.csv"), out, resident=resident)
        print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
