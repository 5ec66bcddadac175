"""Tail of the gap distribution for Z[i] and Z[j]: empirical at height 30
against the limit tail, plus the log-log comparison with 1/delta^4."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from cfarey.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--height", default="30")
    ap.add_argument("--delta-grid", default="1:8:0.05")
    ap.add_argument("--mc-grid", default="512")
    ap.add_argument("--out", default="figures/tail_gauss_eisenstein")
    args = ap.parse_args()
    for disc in ("-4", "-3"):
        common = ["--disc", disc, "--out", args.out, "--delta-grid", args.delta_grid]
        rc = main(["gaps", *common, "--height", args.height])
        rc = rc or main(["limit", *common, "--mc-grid", args.mc_grid,
                         "--gaps-csv", str(Path(args.out) / f"gaps_D{disc}_h{args.height}.csv")])
        if rc:
            sys.exit(rc)
