from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfarey import farey
from cfarey.farey import (
    BudgetExceededError,
    canonical_denominators,
    count_only,
    enumerate_farey,
    gaussian_intro_set,
    height_scale,
)
from cfarey.ring import is_coprime, make_ring


def point_set(fs):
    return {(round(u, 9) % 1.0, round(v, 9) % 1.0) for u, v in zip(fs.u.tolist(), fs.v.tolist())}


def naive_points(ring, T):
    """All coprime p/q with 0 < |q| <= T (every associate) reduced to the torus.

    Dedupes by distance below 1e-9 rather than exact keys.
    """
    cover = ring.covering_radius + 1
    found: list[complex] = []
    rng_b = int(T / ring.omega.imag) + 2
    for qb in range(-rng_b, rng_b + 1):
        for qa in range(-int(T) - rng_b - 1, int(T) + rng_b + 2):
            q = ring.elem(qa, qb)
            if q.is_zero() or abs(q) > T + 1e-12:
                continue
            R = abs(q) * cover
            for pb in range(-int(R / ring.omega.imag) - 2, int(R / ring.omega.imag) + 3):
                for pa in range(-int(R) - abs(pb) - 2, int(R) + abs(pb) + 3):
                    p = ring.elem(pa, pb)
                    if abs(p) > R or not is_coprime(p, q):
                        continue
                    z = complex(p) / complex(q)
                    v = z.imag / ring.omega.imag
                    u = z.real - v * ring.omega.real
                    u, v = u % 1.0, v % 1.0
                    w = complex(u, v)
                    if all(abs(w - o) > 1e-9 and abs(abs((w - o).real) - 1) > 1e-9 and abs(abs((w - o).imag) - 1) > 1e-9 for o in found):
                        found.append(w)
    return found


def test_height_scale():
    assert height_scale(height=2.0) == (2 * math.log(2), 4.0)
    t, s = height_scale(t=1.0)
    assert s == pytest.approx(math.e)
    with pytest.raises(ValueError):
        height_scale()
    with pytest.raises(ValueError):
        height_scale(t=1.0, height=2.0)


def test_height_one_is_zero_only(zi):
    fs = enumerate_farey(zi, height=1)
    assert len(fs) == 1
    assert (fs.u[0], fs.v[0]) == (0.0, 0.0)


def test_height_two_gaussian(zi):
    fs = enumerate_farey(zi, height=2)
    assert point_set(fs) == {(0.0, 0.0), (0.5, 0.5), (0.5, 0.0), (0.0, 0.5)}


@pytest.mark.parametrize("disc, T", [(-4, 3), (-4, 4.5), (-3, 4), (-7, 4), (-20, 3.5), (-4, 6)])
def test_matches_naive_enumeration(disc, T):
    ring = make_ring(disc)
    fs = enumerate_farey(ring, height=T)
    naive = naive_points(ring, T)
    assert len(naive) == len(fs)
    mine = np.stack([fs.u, fs.v], axis=1)
    for w in naive:
        d = np.abs(mine - [w.real, w.imag])
        d = np.minimum(d, 1 - d)
        assert np.min(d.max(axis=1)) < 1e-9


@pytest.mark.parametrize("disc", (-3, -4, -7, -8, -11, -15, -20))
@pytest.mark.parametrize("T", (2, 5, 9, 17, 30))
def test_keys_unique_and_fractions_valid(disc, T):
    ring = make_ring(disc)
    fs = enumerate_farey(ring, height=T)
    keys = fs.exact_keys()
    assert np.unique(keys, axis=0).shape[0] == len(fs)
    assert np.all(fs.height_sq <= fs.scale)
    assert np.all((fs.u >= 0) & (fs.u < 1) & (fs.v >= 0) & (fs.v < 1))
    if T <= 9:
        for f in fs.fractions:
            assert is_coprime(f.p, f.q)
            assert f.q.norm() == f.height_sq


@pytest.mark.parametrize("disc", (-4, -3))
def test_count_only_matches(disc):
    ring = make_ring(disc)
    prev = 0
    for T in (1, 2, 4, 8):
        n = count_only(ring, height=T)
        assert n == len(enumerate_farey(ring, height=T))
        assert n >= prev
        prev = n
    assert count_only(make_ring(-4), height=1) == 1


@given(h1=st.floats(1, 12), h2=st.floats(1, 12))
def test_count_monotone_in_height(h1, h2):
    lo, hi = sorted((h1, h2))
    zi = make_ring(-4)
    assert count_only(zi, height=lo) <= count_only(zi, height=hi)


@pytest.mark.parametrize("disc", (-4, -3, -7, -20))
def test_canonical_denominators_one_per_orbit(disc):
    ring = make_ring(disc)
    a, b = canonical_denominators(ring, 60)
    seen = set()
    for x, y in zip(a.tolist(), b.tolist()):
        orbit = {((u * ring.elem(x, y)).a, (u * ring.elem(x, y)).b) for u in ring.units}
        assert not (orbit & seen)
        seen |= orbit
    # every nonzero element of norm <= 60 is covered
    k = 12
    total = sum(1 for x in range(-k, k + 1) for y in range(-k, k + 1) if 0 < ring.elem(x, y).norm() <= 60)
    assert total == len(seen)


def test_gaussian_intro_set(zi):
    assert point_set(gaussian_intro_set(2)) == point_set(enumerate_farey(zi, height=2))
    assert len(gaussian_intro_set(1)) == 1
    with pytest.raises(ValueError):
        gaussian_intro_set(3, make_ring(-20))


def test_intro_set_asymptotic_with_units():
    """card G_T approaches (pi / (2 zeta_K(2))) T^4 divided by the number of units."""
    zi = make_ring(-4)
    T = 20
    ratio = len(gaussian_intro_set(T)) / (math.pi / (2 * zi.zeta2) * T**4)
    assert ratio * zi.n_units == pytest.approx(1.0, abs=0.03)


def test_equidistribution_quarters(zi):
    fs = enumerate_farey(zi, height=30)
    for u0 in (0, 0.5):
        for v0 in (0, 0.5):
            frac = np.mean((fs.u >= u0) & (fs.u < u0 + 0.5) & (fs.v >= v0) & (fs.v < v0 + 0.5))
            assert abs(frac - 0.25) < 0.02


def test_budget_guard(zi):
    with pytest.raises(BudgetExceededError):
        enumerate_farey(zi, height=30, max_points=1000)


@pytest.mark.parametrize("disc", (-4, -3, -20))
def test_csv_and_binary_roundtrip(tmp_path, disc):
    fs = enumerate_farey(make_ring(disc), height=6)
    farey.write_csv(fs, tmp_path / "f.csv", {"note": "x"})
    farey.write_binary(fs, tmp_path / "f.cfry")
    for back in (farey.read_csv(tmp_path / "f.csv"), farey.read_binary(tmp_path / "f.cfry")):
        assert back.ring == fs.ring
        assert back.t == fs.t and back.scale == fs.scale
        assert np.array_equal(back.u, fs.u) and np.array_equal(back.v, fs.v)
        assert np.array_equal(back.exact_keys(), fs.exact_keys())


def test_binary_rejects_garbage(tmp_path):
    p = tmp_path / "bad.cfry"
    p.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(ValueError):
        farey.read_binary(p)


def test_grid_index_covers_all_points(zi):
    fs = enumerate_farey(zi, height=12)
    g = fs.grid
    assert g.occupancy().sum() == len(fs)
    assert sorted(g.order.tolist()) == list(range(len(fs)))
