"""Nearest-neighbour gaps of Farey sets and their empirical statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .farey import FareyFraction, FareySet
from .ring import RingSpec, is_coprime
from .torus import distance_from_basis_diff


class EmptyRegionError(ValueError):
    pass


@dataclass(frozen=True)
class Region:
    """Whole torus, or a rectangle ``[u0, u1) x [v0, v1)`` in basis coordinates."""

    u0: float = 0.0
    u1: float = 1.0
    v0: float = 0.0
    v1: float = 1.0

    def __post_init__(self):
        if not (0 <= self.u0 < self.u1 <= 1 and 0 <= self.v0 < self.v1 <= 1):
            raise ValueError(f"region must be a nondegenerate rectangle inside [0,1)^2, got {self}")

    @classmethod
    def whole(cls) -> Region:
        return cls()

    @classmethod
    def parse(cls, text: str) -> Region:
        u0, u1, v0, v1 = (float(x) for x in text.split(","))
        return cls(u0, u1, v0, v1)

    @property
    def kind(self) -> str:
        return "whole-torus" if (self.u0, self.u1, self.v0, self.v1) == (0, 1, 0, 1) else "basis-rectangle"

    @property
    def area(self) -> float:
        """Fraction of the torus covered."""
        return (self.u1 - self.u0) * (self.v1 - self.v0)

    def contains(self, u, v):
        return (u >= self.u0) & (u < self.u1) & (v >= self.v0) & (v < self.v1)

    def __str__(self) -> str:
        return f"{self.u0:g},{self.u1:g},{self.v0:g},{self.v1:g}"


@dataclass
class GapSample:
    """Rescaled nearest-neighbour gaps ``e^t d(r, F_t minus r)`` for ``r`` in a region."""

    ring: RingSpec
    t: float
    region: Region
    rescaled: np.ndarray
    anchors: np.ndarray
    neighbors: np.ndarray = field(repr=False)
    shift_u: np.ndarray = field(repr=False)
    shift_v: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.rescaled)

    @property
    def sorted_gaps(self) -> np.ndarray:
        return np.sort(self.rescaled)


def _anchor_indices(fs: FareySet, region: Region) -> np.ndarray:
    idx = np.flatnonzero(region.contains(fs.u, fs.v))
    if idx.size == 0:
        raise EmptyRegionError(f"no Farey fraction falls in region {region}")
    return idx


def _cell_height(fs: FareySet) -> float:
    """Smallest Euclidean distance between opposite sides of one grid cell."""
    oy = fs.ring.omega.imag
    return oy / (fs.grid.cells * max(fs.ring.omega_abs, 1.0))


def _ring_offsets(k: int) -> list[tuple[int, int]]:
    if k == 0:
        return [(0, 0)]
    out = []
    for di in range(-k, k + 1):
        for dj in range(-k, k + 1):
            if max(abs(di), abs(dj)) == k:
                out.append((di, dj))
    return out


def grid_nearest(fs: FareySet, anchors: np.ndarray):
    """Nearest distinct point (any lattice translate) of each anchor, by expanding rings.

    Returns ``(neighbor, shift_u, shift_v, distance)``: the neighbour's image
    at ``point[neighbor] + shift`` realises the toroidal distance.  Translates
    of the anchor itself are the same torus point and are skipped, except for
    a one-point set where they define the gap (the systole).
    """
    grid = fs.grid
    G = grid.cells
    ox, oy = fs.ring.omega.real, fs.ring.omega.imag
    h = _cell_height(fs)
    n = anchors.size
    best = np.full(n, np.inf)
    nbr = np.full(n, -1, dtype=np.int64)
    bsu = np.zeros(n, dtype=np.int64)
    bsv = np.zeros(n, dtype=np.int64)
    ci, cj = grid.cell_i[anchors], grid.cell_j[anchors]
    au, av = fs.u[anchors], fs.v[anchors]
    active = np.arange(n)
    lone = len(fs) == 1
    k = 0
    while active.size:
        for di, dj in _ring_offsets(k):
            ni = ci[active] + di
            nj = cj[active] + dj
            su, mi = np.divmod(ni, G)
            sv, mj = np.divmod(nj, G)
            cell = mi * G + mj
            st = grid.start[cell]
            cnt = grid.start[cell + 1] - st
            for jj in range(int(cnt.max(initial=0))):
                sel = np.flatnonzero(cnt > jj)
                cand = grid.order[st[sel] + jj]
                act = active[sel]
                du = fs.u[cand] + su[sel] - au[act]
                dv = fs.v[cand] + sv[sel] - av[act]
                x = du + dv * ox
                y = dv * oy
                d2 = x * x + y * y
                self_hit = cand == anchors[act]
                if lone:
                    self_hit &= (su[sel] == 0) & (sv[sel] == 0)
                better = (d2 < best[act]) & ~self_hit
                upd = act[better]
                best[upd] = d2[better]
                nbr[upd] = cand[better]
                bsu[upd] = su[sel][better]
                bsv[upd] = sv[sel][better]
        # cells at ring k+1 or beyond are at least k*h away
        reach = k * h
        active = active[best[active] > reach * reach]
        k += 1
    return nbr, bsu, bsv, np.sqrt(best)


def brute_force_nearest(fs: FareySet, anchors: np.ndarray | None = None, chunk: int = 256) -> np.ndarray:
    """O(n^2) toroidal nearest-neighbour distances (oracle for small sets)."""
    if anchors is None:
        anchors = np.arange(len(fs))
    out = np.empty(anchors.size)
    for s in range(0, anchors.size, chunk):
        a = anchors[s : s + chunk]
        d = distance_from_basis_diff(fs.ring, fs.u[None, :] - fs.u[a, None], fs.v[None, :] - fs.v[a, None])
        d[np.arange(a.size), a] = np.inf
        out[s : s + chunk] = d.min(axis=1)
    if len(fs) == 1:
        out[:] = 1.0  # own translates, systole of O_K
    return out


def _exact_numerators(fs: FareySet, a: np.ndarray, b: np.ndarray, su: np.ndarray, sv: np.ndarray):
    """Exact ``|point[b] + shift - point[a]|^2`` as integer ``num / den`` (Python ints)."""
    Na = fs.height_sq[a].astype(object)
    Nb = fs.height_sq[b].astype(object)
    x = fs.num_u[b].astype(object) * Na + su.astype(object) * Na * Nb - fs.num_u[a].astype(object) * Nb
    y = fs.num_v[b].astype(object) * Na + sv.astype(object) * Na * Nb - fs.num_v[a].astype(object) * Nb
    num = x * x + fs.ring.trace * x * y + fs.ring.omega_norm * y * y
    den = (Na * Nb) ** 2
    return num, den


def exact_rescaled(fs: FareySet, a, b, su, sv) -> np.ndarray:
    """``e^t * d`` computed from the exact rational squared distance.

    The square is formed exactly and rounded once, so the result is at least
    1 whenever the true value is (rounding is monotone and 1.0 is exact).
    """
    num, den = _exact_numerators(fs, np.asarray(a), np.asarray(b), np.asarray(su), np.asarray(sv))
    sn, sd = fs.scale.as_integer_ratio()
    r2 = (num * (sn * sn)) / (den * (sd * sd))
    return np.sqrt(r2.astype(np.float64))


def nearest_gaps(fs: FareySet, region: Region | None = None) -> GapSample:
    """Rescaled gaps of every fraction in ``region`` against the whole set."""
    region = region or Region.whole()
    anchors = _anchor_indices(fs, region)
    nbr, su, sv, _ = grid_nearest(fs, anchors)
    rescaled = exact_rescaled(fs, anchors, nbr, su, sv)
    return GapSample(fs.ring, fs.t, region, rescaled, anchors, nbr, su, sv)


def empirical_cdf(sample: GapSample, grid) -> list[tuple[float, float]]:
    """Right-continuous empirical CDF ``#{gap <= delta} / n`` on a sorted grid."""
    grid = np.asarray(grid, dtype=np.float64)
    if np.any(np.diff(grid) < 0):
        raise ValueError("delta grid must be sorted")
    gaps = sample.sorted_gaps
    frac = np.searchsorted(gaps, grid, side="right") / gaps.size
    return list(zip(grid.tolist(), frac.tolist()))


@dataclass
class TailHistogram:
    edges: np.ndarray
    density: np.ndarray
    tail_delta: np.ndarray
    tail: np.ndarray

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))


def empirical_tail_histogram(sample: GapSample, bin_width: float, max_delta: float | None = None) -> TailHistogram:
    """Density histogram (total mass 1) and tail ``delta -> 1 - CDF(delta)`` at the bin edges.

    Gaps beyond ``max_delta`` are lumped into the last bin so no mass is lost.
    """
    if not bin_width > 0:
        raise ValueError("bin width must be positive")
    gaps = sample.sorted_gaps
    top = float(gaps[-1]) if max_delta is None else float(max_delta)
    n_bins = max(1, int(math.ceil(top / bin_width)))
    edges = np.arange(n_bins + 1) * bin_width
    counts = np.bincount(np.minimum((gaps / bin_width).astype(np.int64), n_bins - 1), minlength=n_bins)
    density = counts / (gaps.size * bin_width)
    tail = 1.0 - np.searchsorted(gaps, edges, side="right") / gaps.size
    return TailHistogram(edges, density, edges.copy(), tail)


def tail_loglog_slope(sample: GapSample, lo: float = 3.0, hi: float = 8.0, step: float = 0.05) -> float:
    """Least-squares slope of ``log tail(delta)`` against ``log delta`` on ``[lo, hi]``."""
    deltas = np.arange(lo, hi + step / 2, step)
    gaps = sample.sorted_gaps
    tail = 1.0 - np.searchsorted(gaps, deltas, side="right") / gaps.size
    if np.any(tail <= 0):
        raise ValueError("empirical tail vanishes inside the fitting range")
    slope, _ = np.polyfit(np.log(deltas), np.log(tail), 1)
    return float(slope)


def _check_window(fs: FareySet, delta: float, closed: bool = True) -> float:
    """Window radius ``delta e^-t``; at most half the systole (strictly below if not ``closed``)."""
    radius = delta / fs.scale
    if not (0 <= radius <= 0.5 if closed else 0 <= radius < 0.5):
        bound = "at most" if closed else "below"
        raise ValueError(f"window radius e^-t*delta = {radius:g} must be {bound} half the systole")
    return radius


def window_counts(fs: FareySet, anchors: np.ndarray, delta: float) -> np.ndarray:
    """Number of set points (centre included) in the closed window of radius ``delta e^-t``.

    Candidates within 1e-9 relative of the boundary are decided by the same
    rounded value :func:`exact_rescaled` reports as a gap, so window counts
    and the empirical CDF agree at ties.  Points are counted once even when
    two lattice images lie on the boundary of a radius-1/2 window.
    """
    radius = _check_window(fs, delta)
    grid = fs.grid
    G = grid.cells
    ox, oy = fs.ring.omega.real, fs.ring.omega.imag
    K = int(math.ceil(radius / _cell_height(fs))) + 1
    hits_a, hits_c = [], []
    ci, cj = grid.cell_i[anchors], grid.cell_j[anchors]
    au, av = fs.u[anchors], fs.v[anchors]
    r2 = radius * radius
    for di in range(-K, K + 1):
        for dj in range(-K, K + 1):
            su, mi = np.divmod(ci + di, G)
            sv, mj = np.divmod(cj + dj, G)
            cell = mi * G + mj
            st = grid.start[cell]
            cnt = grid.start[cell + 1] - st
            for jj in range(int(cnt.max(initial=0))):
                sel = np.flatnonzero(cnt > jj)
                cand = grid.order[st[sel] + jj]
                du = fs.u[cand] + su[sel] - au[sel]
                dv = fs.v[cand] + sv[sel] - av[sel]
                x = du + dv * ox
                y = dv * oy
                d2 = x * x + y * y
                inside = d2 < r2 * (1 - 1e-9)
                near = np.flatnonzero(~inside & (d2 <= r2 * (1 + 1e-9)))
                if near.size:
                    a = anchors[sel[near]]
                    g = exact_rescaled(fs, a, cand[near], su[sel][near], sv[sel][near])
                    inside[near] = g <= delta
                hits_a.append(sel[inside])
                hits_c.append(cand[inside])
    pairs = np.unique(np.stack([np.concatenate(hits_a), np.concatenate(hits_c)]), axis=1)
    return np.bincount(pairs[0], minlength=anchors.size).astype(np.int64)


def window_count_tail(fs: FareySet, k: int, delta: float, region: Region | None = None) -> float:
    """Fine-scale tail function for a closed disk window of rescaled radius ``delta``.

    Fraction of region points whose window contains exactly ``k`` set points.
    With ``k = 1`` this is the tail ``mu_{t,B}(]delta, inf[)`` of the gap law.
    """
    region = region or Region.whole()
    anchors = _anchor_indices(fs, region)
    counts = window_counts(fs, anchors, delta)
    return float(np.count_nonzero(counts == k)) / anchors.size


def _elements_up_to(ring: RingSpec, max_norm: float):
    oy = ring.omega.imag
    bmax = int(math.floor(math.sqrt(max_norm) / oy)) + 1
    amax = int(math.floor(math.sqrt(max_norm))) + bmax + 1
    for b in range(-bmax, bmax + 1):
        for a in range(-amax, amax + 1):
            nm = a * a + ring.trace * a * b + ring.omega_norm * b * b
            if 0 < nm <= max_norm:
                yield ring.elem(a, b)


def cone_count_oracle(fs: FareySet, r: FareyFraction | int, delta: float) -> int:
    """Count coprime pairs ``(p, q)`` with ``0 < |q| <= e^(t/2)`` and ``p/q`` in the window at ``r``.

    Enumerates every nonzero ``q`` (all associates) and the lattice points
    ``p`` near ``q*r``, deciding membership and coprimality exactly.  Each
    fraction in the window is counted once per unit, so the result is
    ``|units|`` times the window count.
    """
    # the plane disk must embed, otherwise boundary images are counted twice
    _check_window(fs, delta, closed=False)
    if not isinstance(r, FareyFraction):
        r = fs.fraction(int(r))
    ring = fs.ring
    P, Q = r.p, r.q
    NQ = Q.norm()
    rho2 = Fraction(delta) ** 2 / Fraction(fs.scale) ** 2
    zr = complex(P) / complex(Q)
    ox, oy = ring.omega.real, ring.omega.imag
    radius = math.sqrt(float(rho2))
    total = 0
    for q in _elements_up_to(ring, fs.scale):
        Nq = q.norm()
        centre = complex(q) * zr
        R = math.sqrt(Nq) * radius + 1e-9
        for b in range(math.floor((centre.imag - R) / oy), math.ceil((centre.imag + R) / oy) + 1):
            base = centre.real - b * ox
            for a in range(math.floor(base - R), math.ceil(base + R) + 1):
                p = ring.elem(a, b)
                # |p/q - P/Q|^2 <= rho^2  <=>  N(pQ - Pq) <= N(q) N(Q) rho^2
                if (p * Q - P * q).norm() <= Nq * NQ * rho2 and is_coprime(p, q):
                    total += 1
    return total
