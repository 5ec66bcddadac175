"""The limiting gap law: integrand f_s(delta), the CDF, and the tail decomposition.

With annuli ``A(c, r, R) = {r <= |z - c| <= R}`` projected to the torus,

    f_s(delta) = area( union over coprime (p, q), p != 0, of A(q/p, e^s/delta, e^(s/2)/|p|) ) / covolume
    F(delta)   = 2 * integral_0^inf f_s(delta) e^(-2s) ds

An annulus is empty unless ``|p| <= delta e^(-s/2)``, so ``f_s(delta) = 0``
once ``s >= 2 ln delta``.  Several regimes have closed forms; see :func:`f_s`.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat

import numpy as np

from .farey import _fractions_for, canonical_denominators
from .ring import RingSpec
from .torus import AnnulusSystem, QuadratureConfig, union_measure

#: Default cap on the number of annuli in one system.
MAX_ANNULI = 2_000_000

SHORTCUT_ONE = "shortcut-one"
SHORTCUT_ZERO = "shortcut-zero"
SINGLE_ANNULUS = "single-annulus"
FULL_UNION = "full-union"
METHODS = (SHORTCUT_ONE, SHORTCUT_ZERO, SINGLE_ANNULUS, FULL_UNION)


class SystemTooLargeError(RuntimeError):
    pass


def s_pm(ring: RingSpec, delta: float) -> tuple[float, float]:
    """Roots of ``e^(s/2) - e^s/delta - |omega| = 0``; the annulus ``A(0, e^s/delta, e^(s/2))``
    is at least ``|omega|`` wide between them."""
    w = ring.omega_abs
    if delta < 4 * w:
        raise ValueError(f"s_pm needs delta >= 4|omega| = {4 * w:g}, got {delta:g} (roots are complex)")
    root = math.sqrt(max(0.0, 1 - 4 * w / delta))
    lo = 2 * math.log(delta / 2 * (1 - root))
    hi = 2 * math.log(delta / 2 * (1 + root))
    for s in (lo, hi):
        resid = math.exp(s / 2) - math.exp(s) / delta - w
        if abs(resid) > 1e-9 * max(1.0, delta):
            raise ArithmeticError(f"root check failed at s={s!r}: residual {resid:g}")
    return lo, hi


def single_annulus_threshold(ring: RingSpec) -> float:
    """``2 ln(|1+omega| c / (c-1))`` with ``c`` the smallest modulus above 1 in O_K."""
    c = ring.ck2nd
    return 2 * math.log(ring.fund_diam_parallelogram * c / (c - 1))


def _single_system(ring: RingSpec, delta: float, s: float) -> AnnulusSystem:
    one = np.ones(1, dtype=np.int64)
    zero = np.zeros(1, dtype=np.int64)
    return AnnulusSystem(
        ring, delta, s, math.exp(s) / delta,
        np.zeros(1), np.zeros(1), np.array([math.exp(s / 2)]),
        one, zero, zero.copy(), zero.copy(),
    )


def build_annulus_system(ring: RingSpec, delta: float, s: float, max_annuli: int = MAX_ANNULI) -> AnnulusSystem:
    """All nonempty annuli of the union, one per torus centre.

    ``p`` runs over denominators with ``N(p) <= delta^2 e^-s``, one per unit
    orbit (associates give the same centres and radii).  For each ``p`` the
    centres ``q/p`` run over the coprime residues of ``q`` modulo ``p``; each
    ``q`` is stored as the residue nearest ``p`` times the centre in
    ``[-1/2, 1/2)^2`` basis coordinates, which keeps ``|q|`` within
    ``|p|`` times the covering radius of the parallelogram.
    """
    if not delta > 0 or s < 0:
        raise ValueError(f"need delta > 0 and s >= 0, got delta={delta!r}, s={s!r}")
    inner = math.exp(s) / delta
    max_norm = delta * delta * math.exp(-s)
    empty = np.zeros(0)
    empty_i = np.zeros(0, dtype=np.int64)
    if s >= 2 * math.log(delta) or max_norm < 1:
        return AnnulusSystem(ring, delta, s, inner, empty, empty, empty, empty_i, empty_i, empty_i, empty_i)
    pa_all, pb_all = canonical_denominators(ring, max_norm)
    # sum of coset counts is at most sum of norms
    norms = pa_all * pa_all + ring.trace * pa_all * pb_all + ring.omega_norm * pb_all * pb_all
    if int(norms.sum()) > max_annuli:
        raise SystemTooLargeError(
            f"annulus system for delta={delta:g}, s={s:g} would exceed {max_annuli} annuli; "
            "lower delta or raise s"
        )
    cu, cv, outer, pa, pb, qa, qb = [], [], [], [], [], [], []
    t, n = ring.trace, ring.omega_norm
    for a, b in zip(pa_all.tolist(), pb_all.tolist()):
        _, _, X, Y, N = _fractions_for(ring, a, b)
        # centre (X + Y omega)/N, shifted into [-1/2, 1/2)
        X = X - N * (2 * X >= N)
        Y = Y - N * (2 * Y >= N)
        # q = p * centre, exact because N = N(p) and X + Y omega = residue * conj(p)
        xa = a * X - n * b * Y
        xb = a * Y + b * X + t * b * Y
        qa.append(xa // N)
        qb.append(xb // N)
        cu.append(np.mod(X / N, 1.0))
        cv.append(np.mod(Y / N, 1.0))
        outer.append(np.full(X.size, math.exp(s / 2) / math.sqrt(a * a + t * a * b + n * b * b)))
        pa.append(np.full(X.size, a, dtype=np.int64))
        pb.append(np.full(X.size, b, dtype=np.int64))
    cat = np.concatenate
    return AnnulusSystem(ring, delta, s, inner, cat(cu), cat(cv), cat(outer), cat(pa), cat(pb), cat(qa), cat(qb))


@dataclass(frozen=True)
class FsEvaluation:
    s: float
    delta: float
    value: float
    method: str
    stderr: float = 0.0


def classify(ring: RingSpec, s: float, delta: float) -> str:
    """Which closed form (if any) applies at ``(s, delta)``; first match wins."""
    if delta <= 0 or s >= 2 * math.log(delta):
        return SHORTCUT_ZERO
    w = ring.omega_abs
    if delta >= 4 * w:
        lo, hi = s_pm(ring, delta)
        if lo <= s <= hi:
            return SHORTCUT_ONE
    if 2 * math.log(w) <= s <= math.log(delta / 2):
        return SHORTCUT_ONE
    if s >= single_annulus_threshold(ring):
        return SINGLE_ANNULUS
    return FULL_UNION


def f_s(
    ring: RingSpec,
    s: float,
    delta: float,
    config: QuadratureConfig | None = None,
    method: str | None = None,
    cover_shortcut: bool = True,
) -> FsEvaluation:
    """Evaluate ``f_s(delta)``.

    ``method=None`` dispatches through :func:`classify`; passing a method
    forces that evaluation path, which is how the closed forms are
    cross-checked.  ``cover_shortcut=False`` makes the Monte-Carlo paths test
    every sample even when an annulus is wide enough to cover the torus.
    """
    if s < 0 or not delta > 0:
        raise ValueError(f"need s >= 0 and delta > 0, got s={s!r}, delta={delta!r}")
    config = config or QuadratureConfig()
    chosen = method or classify(ring, s, delta)
    if chosen not in METHODS:
        raise ValueError(f"unknown method {chosen!r}")
    if chosen == SHORTCUT_ZERO:
        return FsEvaluation(s, delta, 0.0, chosen)
    if chosen == SHORTCUT_ONE:
        return FsEvaluation(s, delta, 1.0, chosen)
    if chosen == SINGLE_ANNULUS:
        system = _single_system(ring, delta, s)
    else:
        system = build_annulus_system(ring, delta, s)
    est = union_measure(system, config, cover_shortcut=cover_shortcut)
    return FsEvaluation(s, delta, est.fraction, chosen, est.stderr)


# -- quadrature ---------------------------------------------------------------


@dataclass
class QuadResult:
    value: float
    error: float
    nodes: int
    converged: bool


def adaptive_simpson(func, a: float, b: float, tol: float, max_depth: int = 14) -> QuadResult:
    """Adaptive Simpson with Richardson correction; never raises on nonconvergence.

    Nodes are cached so each abscissa is evaluated once.
    """
    cache: dict[float, float] = {}

    def g(x: float) -> float:
        if x not in cache:
            cache[x] = func(x)
        return cache[x]

    if b <= a:
        return QuadResult(0.0, 0.0, 0, True)
    converged = True
    err_total = 0.0

    def simpson(lo, fl, hi, fh):
        mid = 0.5 * (lo + hi)
        fm = g(mid)
        return mid, fm, (hi - lo) / 6 * (fl + 4 * fm + fh)

    def recurse(lo, fl, hi, fh, mid, fm, whole, eps, depth):
        nonlocal converged, err_total
        lm, flm, left = simpson(lo, fl, mid, fm)
        rm, frm, right = simpson(mid, fm, hi, fh)
        diff = left + right - whole
        if abs(diff) <= 15 * eps or depth >= max_depth:
            if abs(diff) > 15 * eps:
                converged = False
            err_total += abs(diff) / 15
            return left + right + diff / 15
        return recurse(lo, fl, mid, fm, lm, flm, left, eps / 2, depth + 1) + recurse(
            mid, fm, hi, fh, rm, frm, right, eps / 2, depth + 1
        )

    fa, fb = g(a), g(b)
    m, fm, whole = simpson(a, fa, b, fb)
    # one forced subdivision so a lucky coarse match cannot stop the recursion early
    lm, flm, left = simpson(a, fa, m, fm)
    rm, frm, right = simpson(m, fm, b, fb)
    value = recurse(a, fa, m, fm, lm, flm, left, tol / 2, 1) + recurse(m, fm, b, fb, rm, frm, right, tol / 2, 1)
    return QuadResult(value, err_total, len(cache), converged)


def _exp_band(a: float, b: float) -> float:
    """``2 * integral_a^b e^(-2s) ds``."""
    return math.exp(-2 * a) - math.exp(-2 * b)


def breakpoints(ring: RingSpec, delta: float) -> list[float]:
    """Sorted regime boundaries inside ``[0, 2 ln delta]``."""
    top = 2 * math.log(delta)
    pts = {0.0, top, 2 * math.log(ring.omega_abs), math.log(delta / 2), single_annulus_threshold(ring)}
    if delta >= 4 * ring.omega_abs:
        pts.update(s_pm(ring, delta))
    return sorted(p for p in pts if 0.0 <= p <= top)


@dataclass
class Band:
    lo: float
    hi: float
    method: str
    value: float
    error: float
    nodes: int
    converged: bool
    mc_stderr: float = 0.0


def _integrate_bands(ring: RingSpec, delta: float, config: QuadratureConfig, complement: bool, tol: float):
    """``2 * integral (f or 1-f) e^(-2s)`` over each regime band in ``[0, 2 ln delta]``."""
    pts = breakpoints(ring, delta)
    total_width = pts[-1] - pts[0]
    bands = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= lo:
            continue
        method = classify(ring, 0.5 * (lo + hi), delta)
        if method in (SHORTCUT_ONE, SHORTCUT_ZERO):
            f = 1.0 if method == SHORTCUT_ONE else 0.0
            v = (1 - f if complement else f) * _exp_band(lo, hi)
            bands.append(Band(lo, hi, method, v, 0.0, 0, True))
            continue
        stderrs = []

        def integrand(s, method=method):
            ev = f_s(ring, s, delta, config, method=method)
            stderrs.append(ev.stderr)
            f = ev.value
            return 2 * (1 - f if complement else f) * math.exp(-2 * s)

        res = adaptive_simpson(integrand, lo, hi, tol * (hi - lo) / total_width)
        # MC errors share one sample grid, so bound them by the worst node
        mc = max(stderrs, default=0.0) * _exp_band(lo, hi)
        bands.append(Band(lo, hi, method, res.value, res.error, res.nodes, res.converged, mc))
    return bands


@dataclass
class LimitCdf:
    deltas: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    mc_stderr: np.ndarray
    converged: np.ndarray
    bands: list[list[Band]] = field(repr=False)

    @property
    def nodes(self) -> np.ndarray:
        return np.array([sum(b.nodes for b in bs) for bs in self.bands])

    def __call__(self, delta: float) -> float:
        i = int(np.searchsorted(self.deltas, delta))
        if i < len(self.deltas) and self.deltas[i] == delta:
            return float(self.values[i])
        raise KeyError(f"delta {delta!r} not on the grid")

    def rows(self) -> list[dict]:
        return [
            {"delta": float(d), "F": float(v), "quad_error": float(e), "mc_stderr": float(m), "converged": bool(c)}
            for d, v, e, m, c in zip(self.deltas, self.values, self.errors, self.mc_stderr, self.converged)
        ]


def limit_cdf_at(ring: RingSpec, delta: float, config: QuadratureConfig | None = None) -> tuple[float, list[Band]]:
    config = config or QuadratureConfig()
    if delta <= 1:
        return 0.0, []
    bands = _integrate_bands(ring, delta, config, complement=False, tol=config.tol)
    return min(1.0, max(0.0, math.fsum(b.value for b in bands))), bands


def limit_cdf(ring: RingSpec, deltas, config: QuadratureConfig | None = None) -> LimitCdf:
    """``F(delta) = 2 * integral_0^(2 ln delta) f_s(delta) e^(-2s) ds`` on a sorted grid.

    Every evaluation uses the same sample grid (``config.seed``), so the
    Monte-Carlo integrand is pointwise nondecreasing in ``delta``.
    """
    config = config or QuadratureConfig()
    deltas = np.asarray(deltas, dtype=np.float64)
    if deltas.ndim != 1 or np.any(np.diff(deltas) < 0) or np.any(deltas < 0):
        raise ValueError("delta grid must be sorted and nonnegative")
    vals, errs, mcs, conv, all_bands = [], [], [], [], []
    if config.workers > 1 and deltas.size > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            evaluated = list(pool.map(limit_cdf_at, repeat(ring), deltas.tolist(), repeat(config)))
    else:
        evaluated = [limit_cdf_at(ring, d, config) for d in deltas.tolist()]
    for v, bands in evaluated:
        vals.append(v)
        errs.append(sum(b.error for b in bands))
        mcs.append(sum(b.mc_stderr for b in bands))
        conv.append(all(b.converged for b in bands))
        all_bands.append(bands)
    return LimitCdf(deltas, np.array(vals), np.array(errs), np.array(mcs), np.array(conv), all_bands)


@dataclass
class TailReport:
    """``tail = term1 + term2 + term3`` over ``[0, s-]``, ``[s+, 2 ln delta]`` and the closed-form middle."""

    delta: float
    s_minus: float
    s_plus: float
    term1: float
    term2: float
    term3: float
    residual: float
    quad_error: float
    mc_stderr: float
    converged: bool

    @property
    def tail(self) -> float:
        return self.term1 + self.term2 + self.term3

    @property
    def scaled(self) -> float:
        """``delta^4 * tail``."""
        return self.delta**4 * self.tail

    def as_dict(self) -> dict:
        return {
            "delta": self.delta, "s_minus": self.s_minus, "s_plus": self.s_plus,
            "term1": self.term1, "term2": self.term2, "term3": self.term3,
            "residual": self.residual, "tail": self.tail, "delta4_tail": self.scaled,
            "quad_error": self.quad_error, "mc_stderr": self.mc_stderr, "converged": self.converged,
        }


def _complement_integral(ring, delta, lo, hi, config, tol):
    """``2 * integral_lo^hi (1 - f_s(delta)) e^(-2s) ds`` split at the regime boundaries."""
    if hi <= lo:
        return 0.0, 0.0, 0.0, True
    pts = sorted({lo, hi, *[p for p in breakpoints(ring, delta) if lo < p < hi]})
    val = err = mc = 0.0
    ok = True
    for a, b in zip(pts[:-1], pts[1:]):
        method = classify(ring, 0.5 * (a + b), delta)
        if method == SHORTCUT_ONE:
            continue
        if method == SHORTCUT_ZERO:
            val += _exp_band(a, b)
            continue
        stderrs = []

        def integrand(s, method=method):
            ev = f_s(ring, s, delta, config, method=method)
            stderrs.append(ev.stderr)
            return 2 * (1 - ev.value) * math.exp(-2 * s)

        res = adaptive_simpson(integrand, a, b, tol * (b - a) / (hi - lo))
        val += res.value
        err += res.error
        mc += max(stderrs, default=0.0) * _exp_band(a, b)
        ok &= res.converged
    return val, err, mc, ok


def limit_tail(ring: RingSpec, delta: float, config: QuadratureConfig | None = None) -> TailReport:
    """``mu(]delta, inf[)`` via the decomposition at ``s-`` and ``s+``.

    The middle band contributes exactly ``1/delta^4`` (there ``f_s = 1`` on
    ``[s-, s+]`` and ``f_s = 0`` beyond ``2 ln delta``, which together give
    ``e^(-2 s+)``-free closed forms).  Tolerance is relative to ``delta^-4``.
    """
    config = config or QuadratureConfig()
    lo, hi = s_pm(ring, delta)
    tol = config.tol * delta**-4
    top = 2 * math.log(delta)
    t1, e1, m1, c1 = _complement_integral(ring, delta, 0.0, lo, config, tol)
    t2, e2, m2, c2 = _complement_integral(ring, delta, hi, top, config, tol)
    # 2 * integral_{s-}^{s+} 0 + 2 * integral_{2 ln delta}^inf e^(-2s) = delta^-4
    t3 = delta**-4
    res, e3, m3, c3 = _complement_integral(ring, delta, 0.0, max(0.0, 2 * math.log(ring.omega_abs)), config, tol)
    return TailReport(delta, lo, hi, t1, t2, t3, res, e1 + e2 + e3, m1 + m2 + m3, c1 and c2 and c3)
