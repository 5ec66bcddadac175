"""Acceptance checks, one function per criterion, shared by the CLI and the test suite."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import farey, gapstats, limitdist
from .ring import RingSpec, coprime_mask, is_coprime, kronecker, make_ring, zeta_K_2
from .torus import QuadratureConfig


@dataclass
class CriterionResult:
    criterion: str
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.criterion}: {self.name}"

    def as_dict(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=16)
def farey_set(disc: int, height: float) -> farey.FareySet:
    return farey.enumerate_farey(make_ring(disc), height=height)


@lru_cache(maxsize=16)
def gap_sample(disc: int, height: float, region: gapstats.Region | None = None) -> gapstats.GapSample:
    return gapstats.nearest_gaps(farey_set(disc, height), region)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _result(cid: str, name: str, passed: bool, **details) -> CriterionResult:
    return CriterionResult(cid, name, bool(passed), _jsonable(details))


def mertens(disc: int, height: float = 30.0) -> CriterionResult:
    """``card F_t / (c_K e^{2t})`` must lie in ``[0.95, 1.05]``."""
    ring = make_ring(disc)
    t, scale = farey.height_scale(height=height)
    card = farey.count_only(ring, height=height)
    ratio = card / (ring.mertens_constant * scale * scale)
    return _result(
        "1", f"Mertens count D={disc} height {height:g}", 0.95 <= ratio <= 1.05,
        card=card, c_K=ring.mertens_constant, zeta_K_2=ring.zeta2, ratio=ratio,
        ratio_times_units=ratio * ring.n_units, n_units=ring.n_units,
    )


def systole(discs=(-3, -4, -7, -8, -11), heights=(2, 4, 8, 16, 30)) -> CriterionResult:
    mins = {}
    for d in discs:
        for h in heights:
            mins[f"{d}@{h}"] = float(gap_sample(d, float(h)).rescaled.min())
    f1 = {d: limitdist.limit_cdf_at(make_ring(d), 1.0)[0] for d in discs}
    ok = all(v >= 1.0 for v in mins.values()) and all(v == 0.0 for v in f1.values())
    return _result("2", "rescaled gaps >= 1 and F(1) = 0", ok, min_gaps=mins, F1=f1)


def grid_vs_brute(discs=(-4, -3), heights=(2, 3, 4, 5, 6, 7, 8)) -> CriterionResult:
    worst = {}
    for d in discs:
        for h in heights:
            fs = farey_set(d, float(h))
            g = gap_sample(d, float(h))
            bf = gapstats.brute_force_nearest(fs, g.anchors)
            worst[f"{d}@{h}"] = float(np.max(np.abs(g.rescaled / fs.scale - bf)))
    ok = all(v <= 1e-12 for v in worst.values())
    return _result("3", "grid NN equals brute force", ok, max_abs_distance_diff=worst)


def cone_vs_window(discs=(-4, -3), height: float = 6.0, pairs: int = 200, seed: int = 7) -> CriterionResult:
    rng = np.random.default_rng(seed)
    mismatches = {}
    checked = {}
    for d in discs:
        fs = farey_set(d, height)
        ring = fs.ring
        limit = 0.5 * fs.scale  # injectivity bound, radius below 1/2
        idx = rng.integers(0, len(fs), pairs)
        deltas = np.round(rng.uniform(0.0, limit * 0.999, pairs), 6)
        bad = 0
        for i, delta in zip(idx.tolist(), deltas.tolist()):
            w = gapstats.window_counts(fs, np.array([i]), delta)[0]
            c = gapstats.cone_count_oracle(fs, i, delta)
            bad += c != ring.n_units * w
        mismatches[str(d)] = bad
        checked[str(d)] = pairs
    return _result("4", "cone count = |units| x window count", all(v == 0 for v in mismatches.values()),
                   mismatches=mismatches, checked=checked)


def _regime_samples(ring: RingSpec, regime: str, n: int, rng) -> list[tuple[float, float]]:
    w = ring.omega_abs
    thr = limitdist.single_annulus_threshold(ring)
    out = []
    while len(out) < n:
        if regime == "one-spm":
            delta = rng.uniform(4 * w, 12 * w)
            lo, hi = limitdist.s_pm(ring, delta)
            s = rng.uniform(lo, hi)
        elif regime == "one-low":
            delta = rng.uniform(max(3.0, 2 * w * w * 1.5), 12 * w)
            s = rng.uniform(2 * math.log(w), math.log(delta / 2))
        elif regime == "zero":
            delta = rng.uniform(1.0, 10.0)
            s = rng.uniform(2 * math.log(delta), 2 * math.log(delta) + 2)
        else:
            delta = rng.uniform(math.exp(thr / 2) * 1.05, math.exp(thr / 2) * 2.5)
            s = rng.uniform(thr, 2 * math.log(delta))
        if regime == "single" or limitdist.classify(ring, s, delta) == (
            limitdist.SHORTCUT_ZERO if regime == "zero" else limitdist.SHORTCUT_ONE
        ):
            out.append((float(s), float(delta)))
    return out


def closed_form_regimes(discs=(-4, -3), per_regime: int = 20, grid: int = 512, seed: int = 11) -> CriterionResult:
    """Full-union Monte Carlo, with the torus-cover shortcut disabled, against the closed forms."""
    cfg = QuadratureConfig(grid=grid)
    rng = np.random.default_rng(seed)
    report = {}
    ok = True
    for d in discs:
        ring = make_ring(d)
        for regime in ("one-spm", "one-low", "zero", "single"):
            worst = 0.0
            fails = 0
            for s, delta in _regime_samples(ring, regime, per_regime, rng):
                full = limitdist.f_s(ring, s, delta, cfg, method=limitdist.FULL_UNION, cover_shortcut=False)
                if regime == "single":
                    ref = limitdist.f_s(ring, s, delta, cfg, method=limitdist.SINGLE_ANNULUS, cover_shortcut=False)
                    target, se = ref.value, math.hypot(full.stderr, ref.stderr)
                else:
                    target = limitdist.f_s(ring, s, delta, cfg).value
                    se = full.stderr
                dev = abs(full.value - target)
                worst = max(worst, dev)
                fails += dev > 3 * se
            report[f"{d}/{regime}"] = {"samples": per_regime, "failures": fails, "max_abs_dev": worst}
            ok &= fails == 0
    return _result("5", "closed-form regimes agree with full-union Monte Carlo", ok, regimes=report)


def tail_law(
    discs=(-4, -3), deltas=(8, 12, 16, 20), grid: int = 2048, height: float = 30.0
) -> CriterionResult:
    cfg = QuadratureConfig(grid=grid)
    out = {}
    ok = True
    for d in discs:
        ring = make_ring(d)
        reps = [limitdist.limit_tail(ring, float(x), cfg) for x in deltas]
        scaled = np.array([r.scaled for r in reps])
        budget = np.array([x**4 * (r.quad_error + 3 * r.mc_stderr) for x, r in zip(deltas, reps)])
        C = float(np.max((scaled - 1) * np.asarray(deltas, dtype=float)))
        lower = bool(np.all(scaled >= 1 - budget))
        slope = gapstats.tail_loglog_slope(gap_sample(d, height), 3.0, 8.0)
        ring_ok = lower and math.isfinite(C) and C <= 10 and abs(slope + 4) <= 0.25
        ok &= ring_ok
        out[str(d)] = {
            "delta4_tail": dict(zip(map(str, deltas), scaled.tolist())),
            "error_budget": dict(zip(map(str, deltas), budget.tolist())),
            "fitted_C": C,
            "empirical_slope": slope,
            "reports": [r.as_dict() for r in reps],
        }
    return _result("6", "tail law delta^4 tail -> 1 and slope -4", ok, rings=out)


def _delta_grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(n + 1), 10)


@lru_cache(maxsize=8)
def _limit_on_grid(disc: int, lo: float, hi: float, step: float, grid: int) -> limitdist.LimitCdf:
    return limitdist.limit_cdf(make_ring(disc), _delta_grid(lo, hi, step), QuadratureConfig(grid=grid))


def convergence(
    disc: int = -4, height: float = 30.0, region: gapstats.Region | None = None, tol: float = 0.05, grid: int = 512
) -> CriterionResult:
    region = region or gapstats.Region.whole()
    L = _limit_on_grid(disc, 1.0, 6.0, 0.05, grid)
    emp = np.array([c for _, c in gapstats.empirical_cdf(gap_sample(disc, height, region), L.deltas)])
    diff = np.abs(emp - L.values)
    i = int(np.argmax(diff))
    cid = "7" if region.kind == "whole-torus" else "8"
    return _result(
        cid, f"sup |empirical - limit CDF| on [1,6], D={disc}, region {region}", diff[i] <= tol,
        sup=float(diff[i]), at_delta=float(L.deltas[i]), tolerance=tol,
        quad_converged=bool(L.converged.all()), anchors=len(gap_sample(disc, height, region)),
    )


def ring_only(disc: int = -20, samples: int = 400, seed: int = 3) -> CriterionResult:
    """Ring-level self checks usable for any discriminant, including non-principal rings."""
    ring = make_ring(disc)
    rng = np.random.default_rng(seed)
    covol_ok = abs(ring.covolume - math.sqrt(abs(disc)) / 2) < 1e-12
    units_ok = ring.n_units == {-3: 6, -4: 4}.get(disc, 2)
    # the two coprimality routes (module index and gcd of minors) agree
    disagree = 0
    for _ in range(samples):
        pa, pb, qa, qb = (int(v) for v in rng.integers(-12, 13, 4))
        if (qa, qb) == (0, 0):
            continue
        vec = coprime_mask(ring, (qa, qb), np.array([pa]), np.array([pb]))[0]
        disagree += bool(vec) != is_coprime(ring.elem(pa, pb), ring.elem(qa, qb))
    # ideal-counting series sum_n (sum_{d | n} chi(d)) / n^2, truncated; tail is O(log N / N)
    z = zeta_K_2(ring)
    N = 20000
    chi = np.array([0] + [kronecker(disc, k) for k in range(1, N + 1)], dtype=np.int64)
    r = np.zeros(N + 1, dtype=np.int64)
    for d in range(1, N + 1):
        if chi[d]:
            r[d::d] += chi[d]
    n = np.arange(1, N + 1, dtype=np.float64)
    partial = float(np.sum(r[1:] / n**2))
    zeta_ok = abs(z - partial) < 20 * math.log(N) / N
    ok = covol_ok and units_ok and disagree == 0 and zeta_ok
    return _result("ring", f"ring self-checks D={disc}", ok, covolume=ring.covolume, units=ring.n_units,
                   coprime_disagreements=disagree, zeta_K_2=z, zeta_partial_sum=partial, principal=ring.is_principal)


CRITERIA = ("1", "2", "3", "4", "5", "6", "7", "8")


def run_suite(disc: int, criteria=CRITERIA) -> list[CriterionResult]:
    """Run the selected criteria specialised to one ring where they are ring-specific."""
    ring = make_ring(disc)
    results = []
    rings = (disc,)
    for c in criteria:
        if c == "ring":
            results.append(ring_only(disc))
        elif not ring.is_principal:
            continue
        elif c == "1":
            results.append(mertens(disc))
        elif c == "2":
            results.append(systole(discs=rings))
        elif c == "3":
            results.append(grid_vs_brute(discs=rings))
        elif c == "4":
            results.append(cone_vs_window(discs=rings))
        elif c == "5":
            results.append(closed_form_regimes(discs=rings))
        elif c == "6":
            results.append(tail_law(discs=rings))
        elif c == "7":
            results.append(convergence(disc))
        elif c == "8":
            results.append(convergence(disc, region=gapstats.Region(0.0, 0.5, 0.0, 0.5)))
        else:
            raise ValueError(f"unknown criterion {c!r}")
    return results
