"""Exact arithmetic in the ring of integers of an imaginary quadratic field.

Elements are stored as integer pairs ``(a, b)`` meaning ``a + b*omega`` where
``omega`` generates the ring over the integers.  With ``t = tr(omega)`` and
``n = N(omega)`` we have ``omega**2 = t*omega - n``, which is all the
multiplication law needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

#: Discriminants of the imaginary quadratic fields with class number one.
PRINCIPAL_DISCRIMINANTS = (-3, -4, -7, -8, -11, -19, -43, -67, -163)

#: Largest magnitude allowed in vectorised int64 kernels.
INT64_SAFE = 2**62


class DiscriminantError(ValueError):
    """Raised for discriminants that do not belong to an imaginary quadratic field."""


def _squarefree(n: int) -> bool:
    n = abs(n)
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 1
    return True


def validate_discriminant(disc: int) -> None:
    """Raise :class:`DiscriminantError` unless ``disc`` is a negative fundamental discriminant."""
    if not isinstance(disc, (int, np.integer)):
        raise DiscriminantError(f"discriminant must be an integer, got {disc!r}")
    disc = int(disc)
    if disc >= 0:
        raise DiscriminantError(f"D_K={disc}: discriminant must be negative")
    if disc % 4 == 1:
        if not _squarefree(disc):
            raise DiscriminantError(f"D_K={disc}: D_K = 1 mod 4 but D_K is not squarefree")
        return
    if disc % 4 == 0:
        m = disc // 4
        if m % 4 not in (2, 3):
            raise DiscriminantError(
                f"D_K={disc}: D_K = 0 mod 4 requires D_K/4 = 2 or 3 mod 4, got D_K/4 = {m % 4} mod 4"
            )
        if not _squarefree(m):
            raise DiscriminantError(f"D_K={disc}: D_K/4 = {m} is not squarefree")
        return
    raise DiscriminantError(f"D_K={disc}: D_K must be 0 or 1 mod 4, got {disc % 4} mod 4")


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd positive ``n``."""
    if n <= 0 or n % 2 == 0:
        raise ValueError("n must be odd and positive")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for ``n >= 1``."""
    if n < 1:
        raise ValueError("n must be positive")
    result = 1
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if d % 2 == 0:
            return 0
        if v % 2 == 1 and d % 8 in (3, 5):
            result = -result
    if n == 1:
        return result
    return result * jacobi(d, n)


@dataclass(frozen=True, eq=False)
class RingSpec:
    """Constants of the ring of integers O_K of one imaginary quadratic field.

    Use :func:`make_ring` to build one; the constructor does no validation.
    """

    discriminant: int
    trace: int
    omega_norm: int
    omega: complex
    ck2nd: float
    covolume: float
    covering_radius: float
    fund_diam_parallelogram: float
    zeta2: float
    mertens_constant: float

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RingSpec) and other.discriminant == self.discriminant

    def __hash__(self) -> int:
        return hash(("RingSpec", self.discriminant))

    def __repr__(self) -> str:
        return f"RingSpec(D_K={self.discriminant})"

    @property
    def omega_abs(self) -> float:
        return abs(self.omega)

    @property
    def is_principal(self) -> bool:
        return self.discriminant in PRINCIPAL_DISCRIMINANTS

    @cached_property
    def units(self) -> tuple[RingElem, ...]:
        # units have norm 1, hence |b| <= 1 and |a| <= 2
        found = []
        for b in range(-1, 2):
            for a in range(-2, 3):
                if a * a + self.trace * a * b + self.omega_norm * b * b == 1:
                    found.append(RingElem(a, b, self))
        return tuple(found)

    @property
    def n_units(self) -> int:
        return len(self.units)

    def elem(self, a: int, b: int = 0) -> RingElem:
        return RingElem(int(a), int(b), self)

    def to_complex(self, a, b):
        """Complex embedding of ``a + b*omega``; works elementwise on arrays."""
        return a + b * self.omega

    def norm_array(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Vectorised exact norm with an int64 range check."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        bound = max(int(np.abs(a).max(initial=0)), int(np.abs(b).max(initial=0)))
        if bound and (2 + self.trace + self.omega_norm) * bound * bound >= INT64_SAFE:
            raise OverflowError(f"norm of coordinates up to {bound} exceeds int64 range")
        return a * a + self.trace * a * b + self.omega_norm * b * b


@dataclass(frozen=True)
class RingElem:
    """Exact element ``a + b*omega`` of O_K."""

    a: int
    b: int
    ring: RingSpec

    def __repr__(self) -> str:
        return f"RingElem({self.a}, {self.b}; D={self.ring.discriminant})"

    def _check(self, other: RingElem) -> RingElem:
        if isinstance(other, int):
            return RingElem(other, 0, self.ring)
        if not isinstance(other, RingElem):
            return NotImplemented
        if other.ring != self.ring:
            raise ValueError("elements belong to different rings")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return RingElem(self.a + other.a, self.b + other.b, self.ring)

    __radd__ = __add__

    def __neg__(self):
        return RingElem(-self.a, -self.b, self.ring)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return RingElem(self.a - other.a, self.b - other.b, self.ring)

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        t, n = self.ring.trace, self.ring.omega_norm
        bd = self.b * other.b
        return RingElem(
            self.a * other.a - n * bd,
            self.a * other.b + self.b * other.a + t * bd,
            self.ring,
        )

    __rmul__ = __mul__

    def conj(self) -> RingElem:
        return RingElem(self.a + self.ring.trace * self.b, -self.b, self.ring)

    def norm(self) -> int:
        return self.a * self.a + self.ring.trace * self.a * self.b + self.ring.omega_norm * self.b * self.b

    def times_omega(self) -> RingElem:
        return RingElem(-self.ring.omega_norm * self.b, self.a + self.ring.trace * self.b, self.ring)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_unit(self) -> bool:
        return self.norm() == 1

    def __complex__(self) -> complex:
        return complex(self.a + self.b * self.ring.omega)

    def __abs__(self) -> float:
        return math.sqrt(self.norm())


def norm(x: RingElem) -> int:
    """Exact ``|x|**2`` (Python integers never wrap)."""
    return x.norm()


def add(x: RingElem, y: RingElem) -> RingElem:
    return x + y


def neg(x: RingElem) -> RingElem:
    return -x


def mul(x: RingElem, y: RingElem) -> RingElem:
    return x * y


def conj(x: RingElem) -> RingElem:
    return x.conj()


def lattice_basis(vectors) -> tuple[int, int, int]:
    """Triangular basis of the integer lattice spanned by ``vectors``.

    Returns ``(A, B, C)`` with the lattice equal to ``Z(A, 0) + Z(B, C)``,
    ``A, C > 0`` and ``0 <= B < A``.  The index in Z^2 is ``A*C``.  Raises
    ``ValueError`` when the vectors do not span a rank-2 lattice.
    """
    A, B, C = 0, 0, 0
    for x, y in vectors:
        x, y = int(x), int(y)
        if y == 0 and C == 0:
            A = math.gcd(A, x)
            continue
        # extended gcd on the second coordinates
        g, s, r = _xgcd(C, y)
        newB = s * B + r * x
        # the combination killing the second coordinate
        killed = (C // g) * x - (y // g) * B
        A = math.gcd(A, killed)
        B, C = newB, g
        if C < 0:
            B, C = -B, -C
    if A == 0 or C == 0:
        raise ValueError("vectors do not span a full-rank lattice")
    A = abs(A)
    return A, B % A, C


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def ideal_index(*gens: RingElem) -> int:
    """Index in O_K of the ideal generated by ``gens`` (all in the same ring)."""
    vecs = []
    for g in gens:
        w = g.times_omega()
        vecs.append((g.a, g.b))
        vecs.append((w.a, w.b))
    A, _, C = lattice_basis(vecs)
    return A * C


def is_coprime(p: RingElem, q: RingElem) -> bool:
    """True iff ``p O_K + q O_K = O_K``.

    Uses a column reduction of the 2x4 integer matrix of ``p, p*omega, q,
    q*omega`` to triangular form; the ideal is everything exactly when the
    module index is 1.  Valid for every O_K, principal or not.
    """
    if p.is_zero() and q.is_zero():
        raise ValueError("(p, q) = (0, 0) generates the zero ideal")
    return ideal_index(p, q) == 1


def coset_representatives(q: RingElem) -> tuple[np.ndarray, np.ndarray]:
    """One representative ``x + y*omega`` of each coset of O_K / q O_K.

    Returns integer arrays ``(x, y)`` of length ``norm(q)``, taken from the
    box ``0 <= x < A, 0 <= y < C`` of the triangular basis of ``q O_K``.
    """
    w = q.times_omega()
    A, _, C = lattice_basis([(q.a, q.b), (w.a, w.b)])
    y, x = np.divmod(np.arange(A * C, dtype=np.int64), A)
    return x, y


def coprime_mask(ring: RingSpec, q: tuple[int, int], x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorised coprimality of many ``p = x + y*omega`` against one ``q``.

    The index of a lattice spanned by several vectors equals the gcd of all
    2x2 minors, so ``p`` is coprime to ``q`` iff the six minors of
    ``[q, q*omega, p, p*omega]`` have gcd 1.
    """
    t, n = ring.trace, ring.omega_norm
    qa, qb = int(q[0]), int(q[1])
    wa, wb = -n * qb, qa + t * qb
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    bound = max(abs(qa), abs(qb), abs(wa), abs(wb), int(np.abs(x).max(initial=0)), int(np.abs(y).max(initial=0)))
    if 4 * (n + 1) * bound * bound >= INT64_SAFE:
        raise OverflowError("coprimality minors exceed int64 range")
    pwa = -n * y
    pwb = x + t * y
    g = np.full(x.shape, qa * wb - qb * wa, dtype=np.int64)
    for m in (
        qa * y - qb * x,
        qa * pwb - qb * pwa,
        wa * y - wb * x,
        wa * pwb - wb * pwa,
        x * pwb - y * pwa,
    ):
        g = np.gcd(g, m)
    return g == 1


def _character_table(disc: int) -> np.ndarray:
    m = abs(disc)
    return np.array([kronecker(disc, k) if k else 0 for k in range(m)], dtype=np.int64)


def l_value_2(disc: int, tol: float) -> tuple[float, int]:
    """L(2, chi_D) by direct summation, returning ``(value, terms)``.

    With ``B`` the largest absolute sum of the character over any run of
    consecutive integers, Abel summation bounds the tail after ``N`` terms
    by ``B / (N + 1)**2``; ``N`` is chosen so that this is at most ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    table = _character_table(disc)
    partial = np.concatenate(([0], np.cumsum(np.concatenate((table[1:], table[:1])))))
    bound = int(partial.max() - partial.min())
    n_terms = max(int(math.ceil(math.sqrt(bound / tol))), abs(disc))
    k = np.arange(1, n_terms + 1, dtype=np.float64)
    chi = table[np.arange(1, n_terms + 1) % abs(disc)]
    # sum smallest terms first
    terms = (chi / (k * k))[::-1]
    return float(math.fsum(terms)), n_terms


def zeta_K_2(ring: RingSpec | int, tol: float = 1e-12) -> float:
    """Dedekind zeta value zeta_K(2) = zeta(2) * L(2, chi_D)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    disc = ring.discriminant if isinstance(ring, RingSpec) else int(ring)
    zeta2 = math.pi**2 / 6
    lval, _ = l_value_2(disc, tol / zeta2)
    return zeta2 * lval


@lru_cache(maxsize=None)
def make_ring(disc: int) -> RingSpec:
    """Build the :class:`RingSpec` of the field with discriminant ``disc``."""
    validate_discriminant(disc)
    disc = int(disc)
    if disc % 4 == 0:
        trace, omega_norm = 0, -disc // 4
        omega = complex(0.0, math.sqrt(-disc) / 2)
    else:
        trace, omega_norm = 1, (1 - disc) // 4
        omega = complex(0.5, math.sqrt(-disc) / 2)

    # second smallest modulus of a lattice point (norms are integers, search |z| <= 2.5)
    norms = []
    for b in range(-3, 4):
        for a in range(-4, 5):
            nm = a * a + trace * a * b + omega_norm * b * b
            if 1 < nm <= 6:
                norms.append(nm)
    ck2nd = math.sqrt(min(norms))

    # Delaunay triangle (0, 1, omega) is non-obtuse for this reduced basis
    covering_radius = abs(omega) * abs(omega - 1) / (2 * omega.imag)

    zeta2 = zeta_K_2(disc, 1e-12)
    return RingSpec(
        discriminant=disc,
        trace=trace,
        omega_norm=omega_norm,
        omega=omega,
        ck2nd=ck2nd,
        covolume=math.sqrt(-disc) / 2,
        covering_radius=covering_radius,
        fund_diam_parallelogram=abs(1 + omega),
        zeta2=zeta2,
        mertens_constant=math.pi / (math.sqrt(-disc) * zeta2),
    )
