from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfarey.ring import (
    PRINCIPAL_DISCRIMINANTS,
    DiscriminantError,
    coprime_mask,
    coset_representatives,
    ideal_index,
    is_coprime,
    kronecker,
    l_value_2,
    lattice_basis,
    make_ring,
    validate_discriminant,
    zeta_K_2,
)

EUCLIDEAN = (-3, -4, -7, -8, -11)

SUPPORTED = (-3, -4, -7, -8, -11, -15, -19, -20, -24, -43, -163)

# zeta(2) L(2, chi_D), from Hurwitz zeta sums at 25 digits
ZETA2_FROZEN = {
    -4: 1.506703009922985031,
    -3: 1.285190955484149403,
    -7: 1.894841448968806529,
    -8: 1.751417510086865134,
    -11: 1.496131859477913378,
    -20: 1.855556893747120635,
}

small = st.integers(-40, 40)


def elems(ring):
    return st.builds(ring.elem, small, small)


@pytest.mark.parametrize(
    "disc, msg",
    [
        (-12, "D_K/4 = 2 or 3 mod 4"),
        (-16, "D_K/4 = 2 or 3 mod 4"),
        (5, "negative"),
        (-1, "1 mod 4"),
        (-2, "0 or 1 mod 4"),
        (-27, "squarefree"),
        (0, "negative"),
    ],
)
def test_rejects_non_fundamental(disc, msg):
    with pytest.raises(DiscriminantError, match=msg):
        validate_discriminant(disc)
    with pytest.raises(DiscriminantError):
        make_ring(disc)


def test_gaussian_ring_constants(zi):
    assert zi.omega == 1j
    assert zi.n_units == 4
    assert {(u.a, u.b) for u in zi.units} == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert zi.ck2nd == pytest.approx(math.sqrt(2), abs=1e-15)
    assert zi.covolume == pytest.approx(1.0, abs=1e-15)
    assert zi.covering_radius == pytest.approx(math.sqrt(2) / 2, abs=1e-15)


def test_eisenstein_ring_constants(zj):
    assert zj.omega == pytest.approx(complex(0.5, math.sqrt(3) / 2), abs=1e-15)
    assert zj.n_units == 6
    assert zj.ck2nd == pytest.approx(math.sqrt(3), abs=1e-15)
    assert zj.covolume == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    assert zj.covering_radius == pytest.approx(1 / math.sqrt(3), abs=1e-15)


def test_d20_constants():
    r = make_ring(-20)
    assert r.ck2nd == 2.0
    assert r.covolume == pytest.approx(math.sqrt(5), abs=1e-14)
    assert not r.is_principal


@pytest.mark.parametrize("disc", SUPPORTED)
def test_ring_invariants(disc):
    r = make_ring(disc)
    assert r.n_units == {-3: 6, -4: 4}.get(disc, 2)
    assert r.covolume == pytest.approx(math.sqrt(abs(disc)) / 2, rel=1e-15)
    if disc % 4 == 0:
        assert r.omega == pytest.approx(1j * math.sqrt(-disc) / 2)
    else:
        assert r.omega == pytest.approx((1 + 1j * math.sqrt(-disc)) / 2)
    table = {-4: math.sqrt(2), -8: math.sqrt(2), -7: math.sqrt(2), -3: math.sqrt(3), -11: math.sqrt(3)}
    assert r.ck2nd == pytest.approx(table.get(disc, 2.0), abs=1e-15)
    assert r.is_principal == (disc in PRINCIPAL_DISCRIMINANTS)


@pytest.mark.parametrize("disc", SUPPORTED)
def test_systole_is_one(disc):
    r = make_ring(disc)
    mods = [abs(r.elem(a, b)) for a in range(-3, 4) for b in range(-3, 4) if (a, b) != (0, 0) and r.elem(a, b).norm() <= 4]
    assert min(mods) == 1.0


def test_norm_examples(zi, zj):
    assert zi.elem(0, 0).norm() == 0
    assert zi.elem(1, 1).norm() == 2
    assert zj.elem(0, 1).norm() == 1
    assert abs(zj.omega) ** 2 == pytest.approx(1.0)


def test_arithmetic_examples(zi, zj):
    assert zi.elem(1, 1) * zi.elem(1, -1) == zi.elem(2, 0)
    w = zj.elem(0, 1)
    assert w * w == zj.elem(-1, 1)
    x = zi.elem(3, -7)
    assert x + zi.elem(0, 0) == x


@pytest.mark.parametrize("disc", EUCLIDEAN + (-20,))
def test_norm_matches_embedding(disc):
    r = make_ring(disc)
    rng = np.random.default_rng(1)
    a, b = rng.integers(-10**6, 10**6, (2, 10**4))
    n = r.norm_array(a, b)
    z = r.to_complex(a, b)
    assert np.array_equal(n, np.rint(np.abs(z) ** 2).astype(np.int64))


def test_norm_array_overflow_guard(zi):
    with pytest.raises(OverflowError):
        zi.norm_array(np.array([2**40]), np.array([2**40]))


@pytest.mark.parametrize("disc", (-4, -3, -7, -20))
@given(data=st.data())
def test_ring_axioms(disc, data):
    r = make_ring(disc)
    x, y, z = (data.draw(elems(r)) for _ in range(3))
    assert x * y == y * x
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert (x * y).norm() == x.norm() * y.norm()
    assert x * x.conj() == r.elem(x.norm(), 0)
    assert complex(x * y) == pytest.approx(complex(x) * complex(y), abs=1e-9)
    assert complex(x.conj()) == pytest.approx(complex(x).conjugate(), abs=1e-12)
    assert x - x == r.elem(0, 0)


def test_coprime_examples(zi):
    assert not is_coprime(zi.elem(1, 1), zi.elem(2))
    assert is_coprime(zi.elem(3), zi.elem(1, 1))
    for u in zi.units:
        assert is_coprime(zi.elem(0), u)
    assert not is_coprime(zi.elem(0), zi.elem(2))
    with pytest.raises(ValueError):
        is_coprime(zi.elem(0), zi.elem(0))


def _nonunit_table(ring, max_norm):
    k = int(math.isqrt(max_norm)) * 2 + 2
    a, b = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1))
    a, b = a.ravel(), b.ravel()
    n = ring.norm_array(a, b)
    keep = (n >= 2) & (n <= max_norm)
    return a[keep], b[keep], n[keep]


def _brute_coprime(ring, table, p, q):
    """No nonunit d with d | p and d | q, searched over norms <= min(N(p), N(q))."""
    a, b, n = table
    lim = min(p.norm() or 10**9, q.norm() or 10**9)
    sel = n <= lim
    a, b, n = a[sel], b[sel], n[sel]
    t, w = ring.trace, ring.omega_norm

    def divides(x):
        # x * conj(d) must be divisible by N(d) coordinatewise
        c, dd = a + t * b, -b
        re = x.a * c - w * x.b * dd
        im = x.a * dd + x.b * c + t * x.b * dd
        return (re % n == 0) & (im % n == 0)

    return not np.any(divides(p) & divides(q))


@pytest.mark.parametrize("disc", EUCLIDEAN)
def test_coprime_against_divisor_search(disc):
    r = make_ring(disc)
    table = _nonunit_table(r, 400)
    rng = np.random.default_rng(abs(disc))
    done = 0
    while done < 1000:
        pa, pb, qa, qb = (int(v) for v in rng.integers(-20, 21, 4))
        p, q = r.elem(pa, pb), r.elem(qa, qb)
        if not (0 < p.norm() <= 400 and 0 < q.norm() <= 400):
            continue
        assert is_coprime(p, q) == _brute_coprime(r, table, p, q), (p, q)
        done += 1


@pytest.mark.parametrize("disc", (-4, -3, -15, -20))
@given(data=st.data())
def test_coprime_symmetry_and_units(disc, data):
    r = make_ring(disc)
    p, q = data.draw(elems(r)), data.draw(elems(r))
    if p.is_zero() and q.is_zero():
        return
    c = is_coprime(p, q)
    assert is_coprime(q, p) == c
    for u in r.units:
        assert is_coprime(u * p, q) == c
    if not q.is_zero():
        vec = coprime_mask(r, (q.a, q.b), np.array([p.a]), np.array([p.b]))[0]
        assert bool(vec) == c


@pytest.mark.parametrize("disc", (-4, -3, -20))
@given(qa=st.integers(-9, 9), qb=st.integers(-9, 9))
def test_coset_count_is_norm(disc, qa, qb):
    r = make_ring(disc)
    q = r.elem(qa, qb)
    if q.is_zero():
        return
    x, y = coset_representatives(q)
    assert x.size == q.norm() == ideal_index(q)


def test_lattice_basis_triangular():
    A, B, C = lattice_basis([(2, 0), (0, 2), (1, 1)])
    assert A * C == 2


def test_kronecker_values():
    assert [kronecker(-4, n) for n in range(1, 9)] == [1, 0, -1, 0, 1, 0, -1, 0]
    assert [kronecker(-3, n) for n in range(1, 7)] == [1, -1, 0, 1, -1, 0]
    assert [kronecker(-8, n) for n in (1, 3, 5, 7)] == [1, 1, -1, -1]


@pytest.mark.parametrize("disc, expected", sorted(ZETA2_FROZEN.items()))
def test_zeta_values(disc, expected):
    assert zeta_K_2(disc, tol=1e-9) == pytest.approx(expected, abs=1e-9)
    assert zeta_K_2(disc) == pytest.approx(expected, abs=1e-12)


def test_zeta_gaussian_is_zeta2_times_catalan():
    catalan = 0.915965594177219015
    assert zeta_K_2(-4, tol=1e-9) == pytest.approx(math.pi**2 / 6 * catalan, abs=1e-9)


@pytest.mark.parametrize("disc", SUPPORTED)
def test_zeta_bounds_and_stability(disc):
    z = zeta_K_2(disc, tol=1e-9)
    assert 1 < z < (math.pi**2 / 6) ** 2
    val, n = l_value_2(disc, 1e-9)
    val2, _ = l_value_2(disc, 1e-9 / 4)
    assert abs(val - val2) < 1e-8
    assert n > 0


def test_mertens_constant(zi):
    assert zi.mertens_constant == pytest.approx(math.pi / (2 * ZETA2_FROZEN[-4]), rel=1e-12)
