"""Exact enumeration of complex Farey fractions of bounded height.

A fraction ``p/q`` is stored with its canonical denominator (one per orbit of
the unit group) and the canonical representative of ``p`` modulo ``q O_K``.
Its torus point is ``p * conj(q) / N(q)`` reduced mod 1 in the basis
``{1, omega}``, which is an exact rational ``(X/N, Y/N)``; the integer
numerators are kept alongside the floating-point coordinates.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .ring import RingElem, RingSpec, coprime_mask, lattice_basis, make_ring
from .torus import TorusPoint, to_cartesian

#: Refuse to enumerate sets expected to be larger than this.
DEFAULT_MAX_POINTS = 6_000_000

BINARY_MAGIC = b"CFRY"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sHhd")
_PREAMBLE = struct.Struct("<Qd")
RECORD_DTYPE = np.dtype(
    [
        ("u", "<f8"),
        ("v", "<f8"),
        ("p_a", "<i8"),
        ("p_b", "<i8"),
        ("q_a", "<i8"),
        ("q_b", "<i8"),
        ("height_sq", "<i8"),
    ]
)


class BudgetExceededError(RuntimeError):
    pass


class DuplicateFractionError(AssertionError):
    """Two distinct (q, p) keys produced the same torus point."""


@dataclass(frozen=True)
class FareyFraction:
    p: RingElem
    q: RingElem
    point: TorusPoint
    height_sq: int


def height_scale(t: float | None = None, height: float | None = None) -> tuple[float, float]:
    """Return ``(t, e^t)`` from exactly one of ``t`` or ``height = e^(t/2)``.

    When the height is given, ``e^t`` is computed as ``height**2`` so that an
    integer height gives an exact bound on ``N(q)``.
    """
    if (t is None) == (height is None):
        raise ValueError("give exactly one of t or height")
    if height is not None:
        height = float(height)
        if not height >= 1:
            raise ValueError(f"height must be at least 1, got {height}")
        return 2 * math.log(height), height * height
    t = float(t)
    if not t >= 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    return t, math.exp(t)


def canonical_denominators(ring: RingSpec, max_norm: float) -> tuple[np.ndarray, np.ndarray]:
    """All ``q`` with ``0 < N(q) <= max_norm``, one per unit orbit.

    The representative is the associate with argument in ``[0, 2*pi/|units|)``;
    in basis coordinates this is an exact sign condition on ``(a, b)``.
    Sorted by norm, then ``a``, then ``b``.
    """
    t, n = ring.trace, ring.omega_norm
    oy = ring.omega.imag
    bmax = int(math.floor(math.sqrt(max_norm) / oy)) + 1
    amax = int(math.floor(math.sqrt(max_norm) + bmax)) + 1
    b, a = np.meshgrid(np.arange(-bmax, bmax + 1), np.arange(-amax, amax + 1), indexing="ij")
    a = a.ravel().astype(np.int64)
    b = b.ravel().astype(np.int64)
    nm = a * a + t * a * b + n * b * b
    keep = (nm > 0) & (nm <= max_norm)
    w = ring.n_units
    if w == 2:
        keep &= (b > 0) | ((b == 0) & (a > 0))
    else:
        # the cone spanned by 1 (included) and omega (excluded) is a fundamental sector
        keep &= (a > 0) & (b >= 0)
    a, b, nm = a[keep], b[keep], nm[keep]
    order = np.lexsort((b, a, nm))
    return a[order], b[order]


def _fractions_for(ring: RingSpec, qa: int, qb: int):
    """Coprime coset representatives of O_K / q O_K and their exact torus numerators."""
    t, n = ring.trace, ring.omega_norm
    wa, wb = -n * qb, qa + t * qb
    A, _, C = lattice_basis([(qa, qb), (wa, wb)])
    y, x = np.divmod(np.arange(A * C, dtype=np.int64), A)
    ok = coprime_mask(ring, (qa, qb), x, y)
    x, y = x[ok], y[ok]
    # p * conj(q)
    c, d = qa + t * qb, -qb
    X = x * c - n * y * d
    Y = x * d + y * c + t * y * d
    N = A * C
    return x, y, np.mod(X, N), np.mod(Y, N), N


def _coset_count(ring: RingSpec, qa: int, qb: int) -> int:
    return int(_fractions_for(ring, qa, qb)[0].size)


class GridIndex:
    """Uniform ``G x G`` cell index over basis coordinates, with wraparound.

    ``order`` lists point indices sorted by cell; the points of cell ``c``
    are ``order[start[c]:start[c + 1]]``.  Cell ``c = i*G + j`` covers
    ``[i/G, (i+1)/G) x [j/G, (j+1)/G)``.
    """

    def __init__(self, u: np.ndarray, v: np.ndarray, cells: int):
        self.cells = int(cells)
        G = self.cells
        i = np.minimum((u * G).astype(np.int64), G - 1)
        j = np.minimum((v * G).astype(np.int64), G - 1)
        self.cell_i = i
        self.cell_j = j
        cell = i * G + j
        self.order = np.argsort(cell, kind="stable")
        self.start = np.searchsorted(cell[self.order], np.arange(G * G + 1))

    def occupancy(self) -> np.ndarray:
        return np.diff(self.start)


def default_cells(ring: RingSpec, scale: float) -> int:
    """Number of cells per side: cell edge about ``4/e^t``, capped at 1024."""
    edge = max(4.0 / scale, 2 * ring.covering_radius / 1024)
    return int(min(1024, max(1, math.floor(1.0 / edge))))


@dataclass(eq=False)
class FareySet:
    """The deduplicated set of torus points of F_t, as parallel arrays."""

    ring: RingSpec
    t: float
    scale: float
    u: np.ndarray
    v: np.ndarray
    p_a: np.ndarray
    p_b: np.ndarray
    q_a: np.ndarray
    q_b: np.ndarray
    height_sq: np.ndarray
    num_u: np.ndarray
    num_v: np.ndarray

    def __len__(self) -> int:
        return len(self.u)

    @property
    def height(self) -> float:
        return math.sqrt(self.scale)

    @cached_property
    def grid(self) -> GridIndex:
        return GridIndex(self.u, self.v, default_cells(self.ring, self.scale))

    def cartesian(self) -> tuple[np.ndarray, np.ndarray]:
        return to_cartesian(self.ring, self.u, self.v)

    def fraction(self, i: int) -> FareyFraction:
        r = self.ring
        return FareyFraction(
            r.elem(self.p_a[i], self.p_b[i]),
            r.elem(self.q_a[i], self.q_b[i]),
            TorusPoint.from_basis(r, self.u[i], self.v[i]),
            int(self.height_sq[i]),
        )

    @property
    def fractions(self) -> list[FareyFraction]:
        return [self.fraction(i) for i in range(len(self))]

    def exact_keys(self) -> np.ndarray:
        """Torus points as reduced rationals ``(X, Y, N)`` meaning ``(X/N, Y/N)``."""
        g = np.gcd(np.gcd(self.num_u, self.num_v), self.height_sq)
        return np.stack([self.num_u // g, self.num_v // g, self.height_sq // g], axis=1)

    def subset(self, mask: np.ndarray) -> FareySet:
        return FareySet(
            self.ring,
            self.t,
            self.scale,
            *(arr[mask] for arr in (self.u, self.v, self.p_a, self.p_b, self.q_a, self.q_b, self.height_sq, self.num_u, self.num_v)),
        )


def _check_budget(ring: RingSpec, scale: float, max_points: int) -> None:
    expected = ring.mertens_constant * scale * scale / ring.n_units
    if expected > max_points:
        raise BudgetExceededError(
            f"about {expected:.3g} fractions expected at e^t={scale:g}, budget is {max_points}"
        )


def enumerate_farey(
    ring: RingSpec,
    t: float | None = None,
    *,
    height: float | None = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> FareySet:
    """Enumerate F_t, the Farey fractions with ``0 < |q| <= e^(t/2)``.

    Pass either ``t`` or ``height = e^(t/2)``.  Each fraction is produced
    once: one denominator per unit orbit, one numerator per coprime coset of
    ``O_K / q O_K``.  Raises :class:`DuplicateFractionError` if two keys give
    the same torus point, which would indicate an arithmetic bug.
    """
    t, scale = height_scale(t, height)
    _check_budget(ring, scale, max_points)
    qa_all, qb_all = canonical_denominators(ring, scale)
    chunks = []
    for qa, qb in zip(qa_all.tolist(), qb_all.tolist()):
        x, y, X, Y, N = _fractions_for(ring, qa, qb)
        m = x.size
        chunks.append((x, y, np.full(m, qa), np.full(m, qb), np.full(m, N), X, Y))
    cols = [np.concatenate([c[k] for c in chunks]).astype(np.int64) for k in range(7)]
    p_a, p_b, q_a, q_b, hsq, X, Y = cols
    fs = FareySet(ring, t, scale, X / hsq, Y / hsq, p_a, p_b, q_a, q_b, hsq, X, Y)
    keys = fs.exact_keys()
    n_unique = np.unique(keys, axis=0).shape[0]
    if n_unique != len(fs):
        raise DuplicateFractionError(f"{len(fs) - n_unique} duplicate torus points in F_t")
    return fs


def count_only(ring: RingSpec, t: float | None = None, *, height: float | None = None) -> int:
    """``card F_t`` without storing the points."""
    t, scale = height_scale(t, height)
    qa_all, qb_all = canonical_denominators(ring, scale)
    return sum(_coset_count(ring, qa, qb) for qa, qb in zip(qa_all.tolist(), qb_all.tolist()))


def gaussian_intro_set(T: float, ring: RingSpec | None = None) -> FareySet:
    """The set of all ``p/q`` mod O_K with ``0 < |q| <= T``, no coprimality imposed.

    In a principal ring every fraction reduces to a coprime one with a
    denominator of no larger modulus, so this is F_t with ``e^(t/2) = T``.
    Rings with class number above one are rejected.  A spot check confirms
    that every non-reduced fraction with a small denominator lands in the set.
    """
    ring = ring or make_ring(-4)
    if not ring.is_principal:
        raise ValueError(f"D_K={ring.discriminant} has class number > 1; the sets differ")
    fs = enumerate_farey(ring, height=T)
    keys = fs.exact_keys()
    small = keys[:, 2] <= 25
    known = {tuple(k) for k in keys[small].tolist()}
    t, n = ring.trace, ring.omega_norm
    qa_all, qb_all = canonical_denominators(ring, min(fs.scale, 25))
    for qa, qb in zip(qa_all.tolist(), qb_all.tolist()):
        wa, wb = -n * qb, qa + t * qb
        A, _, C = lattice_basis([(qa, qb), (wa, wb)])
        for k in range(A * C):
            y, x = divmod(k, A)
            c, d = qa + t * qb, -qb
            N = A * C
            X, Y = (x * c - n * y * d) % N, (x * d + y * c + t * y * d) % N
            g = math.gcd(math.gcd(X, Y), N)
            assert (X // g, Y // g, N // g) in known, "non-coprime fraction missing from F_t"
    return fs


# ---------------------------------------------------------------------------
# serialisation


def _metadata_lines(fs: FareySet, metadata: dict | None) -> list[str]:
    meta = {"D_K": fs.ring.discriminant, "t": repr(fs.t), "scale": repr(fs.scale), "count": len(fs)}
    if metadata:
        meta.update(metadata)
    return [f"{k}={v}" for k, v in meta.items()]


def write_csv(fs: FareySet, path: str | Path, metadata: dict | None = None) -> None:
    """CSV with columns ``u, v, p_a, p_b, q_a, q_b, heightSq`` and ``# key=value`` header lines."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in _metadata_lines(fs, metadata):
            fh.write(f"# {line}\n")
        fh.write("u,v,p_a,p_b,q_a,q_b,heightSq\n")
        for row in zip(fs.u.tolist(), fs.v.tolist(), fs.p_a.tolist(), fs.p_b.tolist(), fs.q_a.tolist(), fs.q_b.tolist(), fs.height_sq.tolist()):
            fh.write("%r,%r,%d,%d,%d,%d,%d\n" % row)


def _from_columns(ring: RingSpec, t: float, scale: float, p_a, p_b, q_a, q_b) -> FareySet:
    tr, n = ring.trace, ring.omega_norm
    c, d = q_a + tr * q_b, -q_b
    hsq = ring.norm_array(q_a, q_b)
    X = np.mod(p_a * c - n * p_b * d, hsq)
    Y = np.mod(p_a * d + p_b * c + tr * p_b * d, hsq)
    return FareySet(ring, t, scale, X / hsq, Y / hsq, p_a, p_b, q_a, q_b, hsq, X, Y)


def read_csv(path: str | Path) -> FareySet:
    meta = {}
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            elif line.startswith("u,"):
                continue
            elif line.strip():
                rows.append(line.split(","))
    ring = make_ring(int(meta["D_K"]))
    arr = np.array([[int(x) for x in r[2:7]] for r in rows], dtype=np.int64).reshape(-1, 5)
    return _from_columns(ring, float(meta["t"]), float(meta["scale"]), arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


def write_binary(fs: FareySet, path: str | Path) -> None:
    """Fixed-width little-endian cache.

    Layout: 16-byte header ``magic "CFRY", u16 version, i16 D_K, f64 t``;
    then ``u64 count, f64 e^t``; then ``count`` records of
    ``f64 u, f64 v, i64 p_a, i64 p_b, i64 q_a, i64 q_b, i64 heightSq``.
    """
    rec = np.empty(len(fs), dtype=RECORD_DTYPE)
    rec["u"], rec["v"] = fs.u, fs.v
    rec["p_a"], rec["p_b"], rec["q_a"], rec["q_b"] = fs.p_a, fs.p_b, fs.q_a, fs.q_b
    rec["height_sq"] = fs.height_sq
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, fs.ring.discriminant, fs.t))
        fh.write(_PREAMBLE.pack(len(fs), fs.scale))
        fh.write(rec.tobytes())


def read_binary(path: str | Path) -> FareySet:
    data = Path(path).read_bytes()
    magic, version, disc, t = _HEADER.unpack_from(data, 0)
    if magic != BINARY_MAGIC:
        raise ValueError(f"not a Farey cache file (magic {magic!r})")
    if version != BINARY_VERSION:
        raise ValueError(f"unsupported cache version {version}")
    count, scale = _PREAMBLE.unpack_from(data, _HEADER.size)
    rec = np.frombuffer(data, dtype=RECORD_DTYPE, count=count, offset=_HEADER.size + _PREAMBLE.size)
    ring = make_ring(disc)
    fs = _from_columns(
        ring, t, scale, *(rec[k].astype(np.int64) for k in ("p_a", "p_b", "q_a", "q_b"))
    )
    if not (np.array_equal(fs.u, rec["u"]) and np.array_equal(fs.v, rec["v"])):
        raise ValueError("cached coordinates disagree with the stored fractions")
    return fs
