"""Command line entry point: ``cfarey {enumerate,gaps,limit,verify}``.

Every output file carries the full run configuration and package version so
a rerun with the same configuration reproduces it byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, farey, gapstats, limitdist, svg, verify
from .ring import DiscriminantError, make_ring, validate_discriminant
from .torus import QuadratureConfig

log = logging.getLogger("cfarey")

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3
FORMATS = ("csv", "json", "svg")
#: Scatter plots are thinned to at most this many points to keep SVGs small.
SCATTER_MAX = 150_000


class UsageError(ValueError):
    pass


def parse_delta_grid(text: str) -> np.ndarray:
    """``min:max:step`` to an inclusive grid rounded to 10 decimals."""
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"delta grid must look like min:max:step, got {text!r}") from exc
    if not (step > 0 and hi >= lo >= 0):
        raise UsageError(f"delta grid needs 0 <= min <= max and step > 0, got {text!r}")
    n = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(n + 1), 10)


@dataclass
class RunConfig:
    """Everything a run depends on.  Validated on construction."""

    command: str = "verify"
    disc: int = -4
    height: float | None = None
    t: float | None = None
    region: str = "0,1,0,1"
    delta_grid: str = "1:8:0.05"
    mc_grid: int = 512
    seed: int = 20240611
    tol: float = 1e-4
    out: str = "out"
    formats: tuple[str, ...] = ("csv", "json", "svg")
    threads: int = 1
    bin_width: float = 0.05
    criteria: str = "all"
    gaps_csv: str | None = None
    version: str = field(default=__version__)

    def __post_init__(self):
        try:
            validate_discriminant(int(self.disc))
        except DiscriminantError as exc:
            raise UsageError(str(exc)) from exc
        self.disc = int(self.disc)
        if self.height is not None and self.t is not None:
            raise UsageError("give either --height or --t, not both")
        if self.command in ("enumerate", "gaps") and self.height is None and self.t is None:
            raise UsageError(f"{self.command} needs --height or --t")
        if self.height is not None and not self.height >= 1:
            raise UsageError(f"height must be at least 1, got {self.height}")
        if self.t is not None and not self.t >= 0:
            raise UsageError(f"t must be nonnegative, got {self.t}")
        try:
            gapstats.Region.parse(self.region)
        except ValueError as exc:
            raise UsageError(f"bad region {self.region!r}: {exc}") from exc
        parse_delta_grid(self.delta_grid)
        if isinstance(self.formats, str):
            self.formats = tuple(f for f in self.formats.split(",") if f)
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise UsageError(f"unknown output formats {sorted(bad)}; choose from {FORMATS}")
        if self.threads < 1:
            raise UsageError("threads must be positive")
        if not self.bin_width > 0:
            raise UsageError("bin width must be positive")
        try:
            self.quadrature
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    @property
    def ring(self):
        return make_ring(self.disc)

    @property
    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(grid=self.mc_grid, seed=self.seed, tol=self.tol, workers=self.threads)

    @property
    def region_obj(self) -> gapstats.Region:
        return gapstats.Region.parse(self.region)

    @property
    def deltas(self) -> np.ndarray:
        return parse_delta_grid(self.delta_grid)

    @property
    def out_dir(self) -> Path:
        p = Path(self.out)
        p.mkdir(parents=True, exist_ok=True)
        return p

    @property
    def stem(self) -> str:
        h = f"h{self.height:g}" if self.height is not None else (f"t{self.t:g}" if self.t is not None else "")
        return "_".join(x for x in (f"D{self.disc}", h) if x)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["formats"] = ",".join(self.formats)
        # the output directory does not affect results
        d.pop("out")
        return d


#: Config-file keys spelled like their command-line flags.
CONFIG_ALIASES = {"format": "formats"}


def read_config_file(path: str | Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value, got {raw!r}")
        k, v = (x.strip() for x in line.split("=", 1))
        k = k.replace("-", "_")
        out[CONFIG_ALIASES.get(k, k)] = v
    return out


def _coerce(values: dict[str, str]) -> dict:
    types = {f.name: f.type for f in fields(RunConfig)}
    out = {}
    for k, v in values.items():
        if k not in types:
            raise UsageError(f"unknown config key {k!r}")
        if v is None:
            continue
        tp = str(types[k])
        try:
            if tp.startswith("int"):
                out[k] = int(v)
            elif tp.startswith("float"):
                out[k] = float(v)
            else:
                out[k] = v
        except ValueError as exc:
            raise UsageError(f"config key {k}: cannot parse {v!r}") from exc
    return out


# -- output helpers ------------------------------------------------------------


def _header(cfg: RunConfig) -> list[str]:
    return [f"# {k}={v}" for k, v in cfg.as_dict().items()]


def write_table(path: Path, cfg: RunConfig, columns: list[str], rows) -> Path:
    buf = io.StringIO()
    buf.write("\n".join(_header(cfg)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    path.write_text(buf.getvalue())
    return path


def write_json(path: Path, cfg: RunConfig, payload: dict) -> Path:
    doc = {"config": cfg.as_dict(), **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_gaps_csv(path: str | Path) -> np.ndarray:
    """Rescaled gap column of a gaps CSV written by :func:`cmd_gaps`."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return np.array([float(r["rescaled_gap"]) for r in reader])


# -- commands -------------------------------------------------------------------


def cmd_enumerate(cfg: RunConfig) -> list[Path]:
    fs = farey.enumerate_farey(cfg.ring, cfg.t, height=cfg.height)
    meta = cfg.as_dict()
    out = []
    base = cfg.out_dir / f"farey_{cfg.stem}"
    p = base.with_suffix(".cfry")
    farey.write_binary(fs, p)
    out.append(p)
    if "csv" in cfg.formats:
        p = base.with_suffix(".csv")
        farey.write_csv(fs, p, meta)
        out.append(p)
    if "json" in cfg.formats:
        out.append(write_json(base.with_suffix(".json"), cfg, {"count": len(fs), "t": fs.t, "scale": fs.scale}))
    if "svg" in cfg.formats:
        x, y = fs.cartesian()
        step = max(1, -(-len(fs) // SCATTER_MAX))
        hs = np.sqrt(fs.height_sq[::step].astype(float))
        fig = svg.Figure(
            width=640, height=int(640 * cfg.ring.omega.imag) + 60,
            title=f"Farey fractions D={cfg.disc}, height <= {fs.height:g}",
            xlabel="Re", ylabel="Im", metadata={**meta, "thinning": step},
        )
        ox = cfg.ring.omega.real
        fig.xlim = (min(0.0, ox), max(1.0, 1 + ox))
        fig.ylim = (0.0, cfg.ring.omega.imag)
        fig.scatter(x[::step], y[::step], colors=svg.height_ramp(hs, 1.0, fs.height), radius=0.8)
        out.append(fig.save(base.with_suffix(".svg")))
    log.info("enumerated %d fractions", len(fs))
    return out


def cmd_gaps(cfg: RunConfig) -> list[Path]:
    fs = farey.enumerate_farey(cfg.ring, cfg.t, height=cfg.height)
    region = cfg.region_obj
    sample = gapstats.nearest_gaps(fs, region)
    tag = f"{cfg.stem}" + ("" if region.kind == "whole-torus" else "_region")
    d = cfg.out_dir
    hist = gapstats.empirical_tail_histogram(sample, cfg.bin_width, max_delta=max(12.0, cfg.deltas[-1]))
    cdf = gapstats.empirical_cdf(sample, cfg.deltas)
    out = []
    summary = {
        "count": len(fs), "anchors": len(sample), "min_gap": float(sample.rescaled.min()),
        "mean_gap": float(sample.rescaled.mean()), "region": str(region), "region_kind": region.kind,
    }
    try:
        summary["tail_loglog_slope_3_8"] = gapstats.tail_loglog_slope(sample, 3.0, 8.0)
    except ValueError:
        summary["tail_loglog_slope_3_8"] = None
    if "csv" in cfg.formats:
        out.append(write_table(
            d / f"gaps_{tag}.csv", cfg, ["index", "u", "v", "rescaled_gap"],
            ((int(i), fs.u[i], fs.v[i], g) for i, g in zip(sample.anchors, sample.rescaled)),
        ))
        out.append(write_table(
            d / f"histogram_{tag}.csv", cfg, ["bin_lo", "bin_hi", "density", "tail_at_lo"],
            zip(hist.edges[:-1], hist.edges[1:], hist.density, hist.tail[:-1]),
        ))
        out.append(write_table(d / f"cdf_{tag}.csv", cfg, ["delta", "cdf", "tail"], ((x, c, 1 - c) for x, c in cdf)))
    if "json" in cfg.formats:
        out.append(write_json(d / f"gaps_{tag}.json", cfg, {"summary": summary}))
    if "svg" in cfg.formats:
        fig = svg.Figure(title=f"Rescaled gap density D={cfg.disc}", xlabel="delta", ylabel="density",
                         metadata=cfg.as_dict(), xlim=(0.0, min(6.0, float(hist.edges[-1]))))
        fig.bars(hist.edges, hist.density, label="empirical")
        out.append(fig.save(d / f"density_{tag}.svg"))
        tail_fig = svg.loglog_tail(hist.edges[1:], hist.tail[1:], title=f"Tail D={cfg.disc}", metadata=cfg.as_dict())
        out.append(tail_fig.save(d / f"tail_{tag}.svg"))
    log.info("gaps: %s", summary)
    return out


def cmd_limit(cfg: RunConfig) -> list[Path]:
    ring = cfg.ring
    qc = cfg.quadrature
    deltas = cfg.deltas
    L = limitdist.limit_cdf(ring, deltas, qc)
    rows = []
    reports = []
    for i, x in enumerate(deltas.tolist()):
        if x >= 4 * ring.omega_abs:
            rep = limitdist.limit_tail(ring, x, qc)
            reports.append(rep.as_dict())
            rows.append((x, L.values[i], rep.tail, rep.term1, rep.term2, rep.term3, rep.residual,
                         L.mc_stderr[i] + rep.mc_stderr))
        else:
            rows.append((x, L.values[i], 1 - L.values[i], "", "", "", "", L.mc_stderr[i]))
    d = cfg.out_dir
    out = []
    if "csv" in cfg.formats:
        out.append(write_table(
            d / f"limit_{cfg.stem}.csv", cfg,
            ["delta", "F", "tail", "term1", "term2", "term3", "residual", "stderr"], rows,
        ))
    if "json" in cfg.formats:
        out.append(write_json(d / f"limit_{cfg.stem}.json", cfg, {
            "cdf": L.rows(), "nodes": L.nodes.tolist(), "tail_decomposition": reports,
            "all_converged": bool(L.converged.all()),
        }))
    if "svg" in cfg.formats:
        fig = svg.Figure(title=f"Limit CDF D={cfg.disc}", xlabel="delta", ylabel="F(delta)", metadata=cfg.as_dict())
        fig.line(deltas, L.values, label="limit")
        if cfg.gaps_csv:
            gaps = np.sort(read_gaps_csv(cfg.gaps_csv))
            fig.line(deltas, np.searchsorted(gaps, deltas, side="right") / gaps.size, label="empirical", dashed=True)
        out.append(fig.save(d / f"limit_{cfg.stem}.svg"))
        tail = np.array([r[2] for r in rows], dtype=float)
        out.append(svg.loglog_tail(deltas, tail, title=f"Limit tail D={cfg.disc}", metadata=cfg.as_dict())
                   .save(d / f"limit_tail_{cfg.stem}.svg"))
    if not L.converged.all():
        log.warning("quadrature did not converge for delta in %s", deltas[~L.converged].tolist())
    return out


def cmd_verify(cfg: RunConfig) -> tuple[list[Path], bool]:
    ring = cfg.ring
    if cfg.criteria == "all":
        selected = (*verify.CRITERIA, "ring") if ring.is_principal else ("ring",)
    else:
        selected = tuple(c.strip() for c in cfg.criteria.split(",") if c.strip())
        unknown = set(selected) - {*verify.CRITERIA, "ring"}
        if unknown:
            raise UsageError(f"unknown criteria {sorted(unknown)}")
    results = verify.run_suite(cfg.disc, selected)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    path = write_json(cfg.out_dir / f"verify_{cfg.stem}.json", cfg, {
        "passed": ok, "results": [r.as_dict() for r in results],
    })
    return [path], ok


# -- argument parsing -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--disc", type=int, help="fundamental discriminant D_K < 0")
    common.add_argument("--height", type=float, help="height bound e^(t/2)")
    common.add_argument("--t", type=float, help="time parameter t (alternative to --height)")
    common.add_argument("--region", help="u0,u1,v0,v1 rectangle in basis coordinates")
    common.add_argument("--delta-grid", dest="delta_grid", help="min:max:step")
    common.add_argument("--mc-grid", dest="mc_grid", type=int, help="Monte-Carlo grid side N")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float, help="quadrature tolerance")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", dest="formats", help="comma list of csv,json,svg")
    common.add_argument("--threads", type=int)
    common.add_argument("--bin-width", dest="bin_width", type=float)
    common.add_argument("--gaps-csv", dest="gaps_csv", help="gaps CSV to overlay on the limit plot")
    common.add_argument("--criteria", help="comma list of criteria ids, or 'all'")
    common.add_argument("-v", "--verbose", action="store_true")
    p = _Parser(prog="cfarey", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cfarey {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (
        ("enumerate", "list Farey fractions up to a height"),
        ("gaps", "nearest-neighbour gap statistics"),
        ("limit", "limiting gap CDF and tail"),
        ("verify", "run the acceptance checks"),
    ):
        sub.add_parser(name, parents=[common], help=help_)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if ns.config:
        values.update(read_config_file(ns.config))
    for k, v in vars(ns).items():
        if k in ("config", "verbose") or v is None:
            continue
        values[k] = v
    return RunConfig(**_coerce(values))


COMMANDS = {"enumerate": cmd_enumerate, "gaps": cmd_gaps, "limit": cmd_limit}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(ns)
    except (UsageError, OSError) as exc:
        print(f"cfarey: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if cfg.command == "verify":
            paths, ok = cmd_verify(cfg)
        else:
            paths, ok = COMMANDS[cfg.command](cfg), True
    except UsageError as exc:
        print(f"cfarey: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, RuntimeError, MemoryError, OSError) as exc:
        print(f"cfarey: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    for p in paths:
        print(p)
    return EXIT_OK if ok else EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
