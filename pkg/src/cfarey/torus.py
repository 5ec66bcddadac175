"""Geometry of the flat torus C / O_K.

Points are kept in coordinates ``(u, v)`` relative to the basis ``{1, omega}``
so that reduction modulo the lattice is just ``mod 1`` on each coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .ring import RingElem, RingSpec

#: Half-width of the block of lattice shifts scanned by :func:`torus_distance`.
SHIFT_BLOCK = 2


def wrap_unit(x):
    """Reduce to ``[0, 1)``; guards the ``-tiny % 1 == 1.0`` rounding case."""
    r = np.mod(x, 1.0)
    return np.where(r >= 1.0, 0.0, r)


def to_basis(ring: RingSpec, x, y):
    """Cartesian ``(x, y)`` to basis coordinates ``(u, v)``."""
    v = np.divide(y, ring.omega.imag)
    u = x - v * ring.omega.real
    return u, v


def to_cartesian(ring: RingSpec, u, v):
    return u + v * ring.omega.real, v * ring.omega.imag


@dataclass(frozen=True)
class TorusPoint:
    """A point of C / O_K with basis coordinates in ``[0, 1)``."""

    u: float
    v: float
    z: complex = field(compare=False)

    @classmethod
    def from_basis(cls, ring: RingSpec, u: float, v: float) -> TorusPoint:
        u = float(wrap_unit(u))
        v = float(wrap_unit(v))
        return cls(u, v, complex(u + v * ring.omega))


def reduce(ring: RingSpec, z: complex) -> TorusPoint:
    """Project a complex number onto the torus."""
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError("cannot reduce a non-finite point")
    u, v = to_basis(ring, z.real, z.imag)
    return TorusPoint.from_basis(ring, u, v)


def distance_from_basis_diff(ring: RingSpec, du, dv, block: int = SHIFT_BLOCK):
    """Quotient distance for basis-coordinate differences ``(du, dv)`` (arrays allowed).

    The difference is first rounded to the nearest integer vector, then the
    exact minimum is taken over the ``(2*block+1)**2`` neighbouring shifts.
    """
    du = np.asarray(du, dtype=np.float64)
    dv = np.asarray(dv, dtype=np.float64)
    du = du - np.rint(du)
    dv = dv - np.rint(dv)
    ox, oy = ring.omega.real, ring.omega.imag
    best = np.full(np.broadcast(du, dv).shape, np.inf)
    for m in range(-block, block + 1):
        for k in range(-block, block + 1):
            x = du + m + (dv + k) * ox
            y = (dv + k) * oy
            best = np.minimum(best, x * x + y * y)
    return np.sqrt(best)


def torus_distance(ring: RingSpec, x: TorusPoint, y: TorusPoint) -> float:
    """``min |x - y - lambda|`` over lattice points ``lambda``."""
    return float(distance_from_basis_diff(ring, x.u - y.u, x.v - y.v))


@dataclass(frozen=True)
class TorusAnnulus:
    """Closed annulus ``inner <= |z - center| <= outer`` projected to the torus."""

    center: TorusPoint
    inner: float
    outer: float

    @property
    def is_empty(self) -> bool:
        return self.inner > self.outer


def full_cover(ring: RingSpec, inner: float, outer: float) -> bool:
    """Sufficient condition for an annulus to project onto the whole torus."""
    return outer - inner >= ring.omega_abs


def annulus_contains(
    ring: RingSpec, ann: TorusAnnulus, z: TorusPoint, cover_shortcut: bool = True
) -> bool:
    """Whether some lattice translate of ``z`` lies in ``ann``.

    Scans every lattice point in the bounding box of the outer disk around
    ``z - center``.  Large annuli wide enough to cover the torus are accepted
    without the scan when ``cover_shortcut`` is set.
    """
    if ann.inner > ann.outer:
        return False
    if cover_shortcut and ann.outer > 4 * ring.covering_radius and full_cover(ring, ann.inner, ann.outer):
        return True
    w = z.z - ann.center.z
    ox, oy = ring.omega.real, ring.omega.imag
    r2, R2 = ann.inner**2, ann.outer**2
    for k in range(math.floor((w.imag - ann.outer) / oy), math.ceil((w.imag + ann.outer) / oy) + 1):
        dy = w.imag - k * oy
        base = w.real - k * ox
        for m in range(math.floor(base - ann.outer), math.ceil(base + ann.outer) + 1):
            dx = base - m
            d2 = dx * dx + dy * dy
            if r2 <= d2 <= R2:
                return True
    return False


#: Samples per block in :func:`annulus_cover_mask`; keeps temporaries in cache.
COVER_CHUNK = 16384


def annulus_cover_mask(ring: RingSpec, wx: np.ndarray, wy: np.ndarray, inner: float, outer: float) -> np.ndarray:
    """Vectorised annulus membership for offsets ``w = sample - center``.

    For each lattice row ``k`` (points ``m + k*omega``) the admissible ``m``
    form at most two closed intervals, so membership reduces to asking whether
    an interval contains an integer.  Exact up to floating point, no
    bounding-box enumeration of individual lattice points.
    """
    wx = np.asarray(wx, dtype=np.float64)
    wy = np.asarray(wy, dtype=np.float64)
    if wx.size <= COVER_CHUNK:
        return _cover_mask_block(ring, wx, wy, inner, outer)
    return np.concatenate(
        [
            _cover_mask_block(ring, wx[i : i + COVER_CHUNK], wy[i : i + COVER_CHUNK], inner, outer)
            for i in range(0, wx.size, COVER_CHUNK)
        ]
    )


def _cover_mask_block(ring: RingSpec, wx: np.ndarray, wy: np.ndarray, inner: float, outer: float) -> np.ndarray:
    ox, oy = ring.omega.real, ring.omega.imag
    wx = np.asarray(wx, dtype=np.float64)
    wy = np.asarray(wy, dtype=np.float64)
    hit = np.zeros(wx.shape, dtype=bool)
    if inner > outer or wx.size == 0:
        return hit
    shift = np.floor(wy / oy)
    wy = wy - shift * oy
    wx = wx - shift * ox
    r2, R2 = inner * inner, outer * outer
    todo = np.arange(wx.size)
    tx, ty = wx, wy
    for k in range(math.floor(-outer / oy), math.ceil(outer / oy) + 2):
        dy = ty - k * oy
        dy2 = dy * dy
        hi = R2 - dy2
        a = tx - k * ox
        ahi = np.sqrt(np.maximum(hi, 0.0))
        alo = np.sqrt(np.maximum(r2 - dy2, 0.0))
        row = (hi >= 0) & ((np.ceil(a - ahi) <= a - alo) | (np.ceil(a + alo) <= a + ahi))
        if row.any():
            hit[todo[row]] = True
            keep = ~row
            todo, tx, ty = todo[keep], tx[keep], ty[keep]
            if todo.size == 0:
                break
    return hit


@dataclass(frozen=True)
class QuadratureConfig:
    """Monte-Carlo grid and quadrature settings."""

    grid: int = 512
    seed: int = 20240611
    tol: float = 1e-4
    workers: int = 1

    def __post_init__(self):
        if self.grid < 8:
            raise ValueError(f"MC grid size must be at least 8, got {self.grid}")
        if not self.tol > 0:
            raise ValueError("quadrature tolerance must be positive")


class CoverEstimate(NamedTuple):
    fraction: float
    stderr: float
    samples: int


@lru_cache(maxsize=8)
def sample_grid(ring: RingSpec, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Stratified jittered samples: one uniform point in each of ``n*n`` basis cells.

    Returns flattened Cartesian ``(x, y)``; sample ``i*n + j`` lies in cell
    ``[i/n, (i+1)/n) x [j/n, (j+1)/n)`` of basis coordinates.
    """
    rng = np.random.default_rng(seed)
    jitter = rng.random((2, n, n))
    idx = np.arange(n, dtype=np.float64)
    u = (idx[:, None] + jitter[0]) / n
    v = (idx[None, :] + jitter[1]) / n
    x, y = to_cartesian(ring, u.ravel(), v.ravel())
    x.setflags(write=False)
    y.setflags(write=False)
    return x, y


@dataclass
class AnnulusSystem:
    """A finite family of torus annuli sharing one inner radius.

    Arrays are parallel: annulus ``i`` is centred at basis coordinates
    ``(center_u[i], center_v[i])`` with outer radius ``outer[i]`` and comes
    from the coprime pair ``(p, q) = (p_a[i] + p_b[i]*omega, q_a[i] + q_b[i]*omega)``.
    """

    ring: RingSpec
    delta: float
    s: float
    inner: float
    center_u: np.ndarray
    center_v: np.ndarray
    outer: np.ndarray
    p_a: np.ndarray = None
    p_b: np.ndarray = None
    q_a: np.ndarray = None
    q_b: np.ndarray = None

    def __len__(self) -> int:
        return len(self.outer)

    @property
    def annuli(self) -> list[TorusAnnulus]:
        return [
            TorusAnnulus(TorusPoint.from_basis(self.ring, u, v), self.inner, float(R))
            for u, v, R in zip(self.center_u, self.center_v, self.outer)
        ]

    @property
    def pairs(self) -> list[tuple[RingElem, RingElem]]:
        if self.p_a is None:
            return []
        r = self.ring
        return [
            (r.elem(pa, pb), r.elem(qa, qb))
            for pa, pb, qa, qb in zip(self.p_a, self.p_b, self.q_a, self.q_b)
        ]

    @classmethod
    def from_annuli(cls, ring: RingSpec, annuli: list[TorusAnnulus], delta: float = math.nan, s: float = math.nan):
        """Build a system from explicit annuli (all must share the inner radius)."""
        inner = {a.inner for a in annuli}
        if len(inner) > 1:
            raise ValueError("annuli in a system share one inner radius")
        return cls(
            ring,
            delta,
            s,
            inner.pop() if inner else 0.0,
            np.array([a.center.u for a in annuli], dtype=np.float64),
            np.array([a.center.v for a in annuli], dtype=np.float64),
            np.array([a.outer for a in annuli], dtype=np.float64),
        )


def union_measure(
    system: AnnulusSystem, config: QuadratureConfig | None = None, cover_shortcut: bool = True
) -> CoverEstimate:
    """Normalised area of the union of the system's annuli, in ``[0, 1]``.

    Stratified estimate on the ``N x N`` jittered grid of :func:`sample_grid`.
    Annuli are processed from the largest outer radius down and only samples
    not yet covered are tested; small annuli only touch the grid cells under
    their outer disk.  The reported error is the binomial standard error.
    """
    config = config or QuadratureConfig()
    ring = system.ring
    n = config.grid
    total = n * n
    inner = float(system.inner)
    outer = np.asarray(system.outer, dtype=np.float64)
    live = np.flatnonzero(outer > inner)
    if live.size == 0:
        return CoverEstimate(0.0, 0.0, total)
    if cover_shortcut and full_cover(ring, inner, float(outer[live].max())):
        return CoverEstimate(1.0, 0.0, total)

    sx, sy = sample_grid(ring, n, config.seed)
    covered = np.zeros(total, dtype=bool)
    n_cov = 0
    ox, oy = ring.omega.real, ring.omega.imag
    half_u = ring.omega_abs / oy
    half_v = 1.0 / oy
    everything = np.arange(total)
    for i in live[np.argsort(-outer[live], kind="stable")]:
        R = float(outer[i])
        cu, cv = float(system.center_u[i]), float(system.center_v[i])
        du, dv = R * half_u, R * half_v
        if 2 * (du + dv) * n + 4 < n:
            iu = np.arange(math.floor((cu - du) * n), math.floor((cu + du) * n) + 1) % n
            jv = np.arange(math.floor((cv - dv) * n), math.floor((cv + dv) * n) + 1) % n
            idx = (iu[:, None] * n + jv[None, :]).ravel()
        else:
            idx = everything
        idx = idx[~covered[idx]]
        if idx.size == 0:
            continue
        cx, cy = cu + cv * ox, cv * oy
        hit = annulus_cover_mask(ring, sx[idx] - cx, sy[idx] - cy, inner, R)
        newly = idx[hit]
        covered[newly] = True
        n_cov += newly.size
        if n_cov == total:
            break
    frac = n_cov / total
    return CoverEstimate(frac, math.sqrt(frac * (1 - frac) / total), total)
