"""Log-log empirical tail for D = -163 against 1/delta^4, and the limit tail
split into its terms.  The low band term (s below 2 ln|omega|) is the residual
that the delta^-4 law leaves out when |omega| > 1."""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from cfarey import farey, gapstats, limitdist, svg
from cfarey.ring import make_ring
from cfarey.torus import QuadratureConfig

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--height", type=float, default=30.0)
    ap.add_argument("--mc-grid", type=int, default=256)
    ap.add_argument("--deltas", default="26,30,36")
    ap.add_argument("--out", default="figures/tail_d163")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ring = make_ring(-163)
    sample = gapstats.nearest_gaps(farey.enumerate_farey(ring, height=args.height))
    hist = gapstats.empirical_tail_histogram(sample, 0.05)
    meta = {"disc": -163, "height": args.height, "anchors": len(sample)}
    fig = svg.loglog_tail(hist.edges[1:], hist.tail[1:], title="Tail, D=-163", metadata=meta)

    # below 4|omega| there is no term split, so compare 1 - F with 1/delta^4 directly
    cfg = QuadratureConfig(grid=args.mc_grid, tol=1e-3)
    low = np.round(np.arange(1.0, 12.0 + 1e-9, 0.25), 10)
    L = limitdist.limit_cdf(ring, low, cfg)
    ok = L.values < 1
    fig.line(np.log(low[ok]), np.log(1 - L.values[ok]), label="ln limit tail", color=svg.PALETTE[2])
    print(fig.save(out / "tail_loglog.svg"))
    for d in (4.0, 6.0, 8.0, 10.0, 12.0):
        print(f"delta={d:g} delta^4*(1-F)={d**4 * (1 - L(d)):.4f}")

    reports = []
    for d in (float(x) for x in args.deltas.split(",")):
        rep = limitdist.limit_tail(ring, d, cfg)
        reports.append(rep.as_dict())
        print(f"delta={d:g} delta^4*tail={rep.scaled:.4f} residual*delta^4={rep.residual * d**4:.4f}")
    doc = {"config": {**meta, "mc_grid": args.mc_grid, "omega_abs": ring.omega_abs},
           "empirical_slope_3_8": gapstats.tail_loglog_slope(sample, 3.0, 8.0) if np.any(sample.rescaled > 8) else None,
           "limit_tail_low": [[float(d), float(1 - v)] for d, v in zip(low, L.values)],
           "reports": reports}
    (out / "residual.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
