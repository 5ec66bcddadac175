"""Eisenstein fractions of height at most 20, coloured by height."""

from __future__ import annotations

import argparse
import sys

from cfarey.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figures/eisenstein_fractions")
    args = ap.parse_args()
    sys.exit(main(["enumerate", "--disc", "-3", "--height", "20", "--out", args.out]))
