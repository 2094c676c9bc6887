import math

import numpy as np
import pytest

from nilprox import Spectrum, ValidationError, op_norm
from nilprox.tower import (
    bookkeeping,
    bottleneck_match,
    brute_bottleneck_cost,
    build_tower,
    disk_density,
    polar_spectrum,
)


# --- bookkeeping -----------------------------------------------------------------


def test_level_one_eleven():
    lv = bookkeeping(11, [])
    assert (lv[0].ell, lv[0].n, lv[0].m, lv[0].q) == (11, 2, 2, 0)


def test_recurrence_frozen_values():
    lv = bookkeeping(12, [(2, 2), (2, 2)])
    assert [(l.ell, l.n, l.m, l.q) for l in lv] == [
        (12, 2, 2, 1), (48, 4, 4, 11), (192, 8, 8, 55),
    ]


def test_identity_exact_along_mixed_ratios():
    lv = bookkeeping(16, [(2, 3), (3, 2), (2, 2)])
    for l in lv:
        assert (2 * l.m + 1) * l.n + 1 + l.q == l.ell


def test_rejects_small_ell1():
    with pytest.raises(ValidationError):
        bookkeeping(10, [])


def test_rejects_trivial_factors():
    with pytest.raises(ValidationError):
        bookkeeping(12, [(1, 4)])


# --- polar spectra ------------------------------------------------------------------


def test_polar_222_counts():
    s = polar_spectrum(2, 2, 0)
    assert s.total == 11
    zero_mult = dict(s.points)[0j]
    assert zero_mult == 3
    radii = sorted({round(abs(z), 12) for z, _ in s.points})
    assert radii == [0.0, 0.5, 1.0]


def test_polar_padding():
    assert polar_spectrum(2, 2, 1).total == 12
    assert dict(polar_spectrum(2, 2, 1).points)[0j] == 4


@pytest.mark.parametrize("n,m,q", [(2, 2, 0), (3, 4, 2), (4, 4, 7)])
def test_polar_total_formula(n, m, q):
    assert polar_spectrum(n, m, q).total == (2 * m + 1) * n + 1 + q


# --- bottleneck matching --------------------------------------------------------------


def test_bottleneck_simple():
    got = bottleneck_match(Spectrum.from_values([0.0, 1.0]),
                           Spectrum.from_values([0.1, 0.9]))
    assert got.cost == pytest.approx(0.1, abs=1e-15)


def test_bottleneck_identical():
    s = Spectrum.from_values([0.3, 0.3, -1j])
    assert bottleneck_match(s, s).cost == 0.0


def test_bottleneck_forced_long_edge():
    got = bottleneck_match(Spectrum.from_values([0.0, 0.0, 1.0]),
                           Spectrum.from_values([0.0, 1.0, 1.0]))
    assert got.cost == pytest.approx(1.0, abs=1e-15)


def test_bottleneck_size_mismatch():
    with pytest.raises(ValidationError):
        bottleneck_match(Spectrum.from_values([0]), Spectrum.from_values([0, 1]))


def test_bottleneck_pairs_form_permutation(rng):
    a = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    got = bottleneck_match(Spectrum.from_values(a), Spectrum.from_values(b))
    rows = sorted(i for i, _ in got.pairs)
    cols = sorted(j for _, j in got.pairs)
    assert rows == list(range(6)) and cols == list(range(6))
    sa = Spectrum.from_values(a).values()
    sb = Spectrum.from_values(b).values()
    assert max(abs(sa[i] - sb[j]) for i, j in got.pairs) == pytest.approx(got.cost)


def test_bottleneck_agrees_with_brute_force(rng):
    for _ in range(30):
        k = int(rng.integers(1, 8))
        a = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        b = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        got = bottleneck_match(Spectrum.from_values(a), Spectrum.from_values(b)).cost
        assert got == pytest.approx(brute_bottleneck_cost(a, b), abs=1e-12)


# --- tower ---------------------------------------------------------------------------


def test_tower_increments_equal_costs():
    built = build_tower(bookkeeping(12, [(2, 2), (2, 2)]))
    for lv in built[1:]:
        assert abs(lv.increment - lv.pairing_cost) <= 1e-9
        assert lv.pairing_cost <= lv.paper_bound + 1e-9


def test_tower_level_one_norm():
    built = build_tower(bookkeeping(12, []))
    assert op_norm(built[0].matrix()) == pytest.approx(1.0, abs=1e-12)


def test_tower_inflation_multiplicities():
    built = build_tower(bookkeeping(12, [(2, 2)]))
    diag = built[0].diag
    inflated = Spectrum.from_values(np.repeat(diag, 4))
    base = Spectrum.from_values(diag)
    assert {z: m for z, m in inflated.points} == {z: 4 * m for z, m in base.points}


def test_tower_densities_decrease():
    built = build_tower(bookkeeping(12, [(2, 2), (2, 2)]))
    dens = [lv.disk_density for lv in built]
    assert dens[0] > dens[1] > dens[2]


def test_disk_density_dense_lattice():
    h = 0.2
    xs = np.arange(-1, 1 + h / 2, h)
    pts = [complex(x, y) for x in xs for y in xs if abs(complex(x, y)) <= 1]
    val = disk_density(Spectrum.from_values(pts), grid_step=0.05)
    assert val <= h


def test_disk_density_coarse_polar():
    assert disk_density(polar_spectrum(2, 2, 0), grid_step=0.1) >= 0.2
