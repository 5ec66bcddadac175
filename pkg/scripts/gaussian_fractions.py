"""Gaussian fractions of height at most 10 and 20, coloured by height."""

from __future__ import annotations

import argparse
import sys

from cfarey.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figures/gaussian_fractions")
    args = ap.parse_args()
    for h in ("10", "20"):
        rc = main(["enumerate", "--disc", "-4", "--height", h, "--out", args.out])
        if rc:
            sys.exit(rc)
