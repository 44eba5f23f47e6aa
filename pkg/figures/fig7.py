#!/usr/bin/env python3
"""Critical-curve figures for the ocean-outflow case at q1 = 2, with
small (0.5) and large (2) resident diffusion.

Reads fig7_d05.csv and fig7_d2.csv (emitted by `driftlab figure fig7`).
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
    for stem, resident in (("fig7_d05", (0.5, 2.0)), ("fig7_d2", (2.0, 2.0))):
        out = os.path.join(args.out_dir, f"{stem}.{ext}")
        render_curve_with_regions(
            os.path.join(args.data_dir, f"{stem}.csv"), out, resident=resident)
        print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
