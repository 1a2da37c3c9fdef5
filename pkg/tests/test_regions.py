from fractions import Fraction
from itertools import product

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from discert.core import INF, BoundaryError, CategoryError, NoiseSpec, RadiiSpec, sphere_representatives
from discert.oracle import enumerate_regions
from discert.regions import (
    binary_regions,
    build_table,
    discrete_regions,
    joint_regions,
    region_count_bound,
    special_regions,
)


def rows(table):
    return [(e.ratio, e.prob_x, e.prob_xt) for e in table]


def oracle_table(noise, radii):
    x, xt = sphere_representatives(radii, noise.num_categories)
    return enumerate_regions(list(x), list(xt), noise)


def test_binary_worked_example():
    t = binary_regions(NoiseSpec("0.2", "0.4"), RadiiSpec(1, 1))
    assert rows(t) == [(6, mpq(12, 25), mpq(2, 25)), (1, mpq(11, 25), mpq(11, 25)),
                       (mpq(1, 6), mpq(2, 25), mpq(12, 25))]


def test_binary_zero_radii():
    assert rows(binary_regions(NoiseSpec("0.3", "0.1"), RadiiSpec())) == [(1, 1, 1)]


def test_binary_constant_ratio():
    t = binary_regions(NoiseSpec("0.3", "0.7"), RadiiSpec(2, 1))
    assert rows(t) == [(1, 1, 1)]


def test_binary_order_flips_above_one():
    # p_plus + p_minus > 1: high q first
    t = binary_regions(NoiseSpec("0.7", "0.8"), RadiiSpec(2, 1))
    assert t == oracle_table(NoiseSpec("0.7", "0.8"), RadiiSpec(2, 1))
    assert len(t) == 4


def test_binary_rejects_boundary():
    with pytest.raises(BoundaryError):
        binary_regions(NoiseSpec("0", "0.4"), RadiiSpec(1, 1))
    with pytest.raises(CategoryError):
        binary_regions(NoiseSpec("0.1", "0.4", 3), RadiiSpec(1, 1))


def test_special_deletion_only_example():
    t = special_regions(NoiseSpec("0", "0.4"), RadiiSpec(1, 2))
    assert rows(t) == [(INF, mpq(21, 25), 0), (mpq(2, 5), mpq(4, 25), mpq(2, 5)), (0, 0, mpq(3, 5))]


def test_special_addition_only_example():
    t = special_regions(NoiseSpec("0.2", "0"), RadiiSpec(2, 1))
    assert rows(t) == [(INF, mpq(24, 25), 0), (mpq(1, 5), mpq(1, 25), mpq(1, 5)), (0, 0, mpq(4, 5))]
    assert t == oracle_table(NoiseSpec("0.2", "0"), RadiiSpec(2, 1))


def test_special_zero_radii_keeps_only_the_shared_region():
    assert rows(special_regions(NoiseSpec("0", "0.4"), RadiiSpec())) == [(1, 1, 1)]


def test_discrete_k3_single_addition():
    t = discrete_regions(NoiseSpec("0.3", "0.3", 3), RadiiSpec(1, 0))
    r = mpq(7, 10) / mpq(3, 20)
    assert rows(t) == [(r, mpq(7, 10), mpq(3, 20)), (1, mpq(3, 20), mpq(3, 20)),
                       (1 / r, mpq(3, 20), mpq(7, 10))]


def test_discrete_k3_zero_radii():
    assert rows(discrete_regions(NoiseSpec("0.1", "0.6", 3), RadiiSpec())) == [(1, 1, 1)]


def test_discrete_k4_mixed_matches_oracle():
    noise, radii = NoiseSpec("0.2", "0.5", 4), RadiiSpec(1, 1, 1)
    t = discrete_regions(noise, radii)
    assert len(t) <= 27
    assert sum(e.prob_x for e in t) == 1
    assert t == oracle_table(noise, radii)


def test_discrete_reduces_to_binary():
    for pp, pm in [("0.2", "0.4"), ("0.7", "0.9"), ("0.3", "0.7")]:
        noise = NoiseSpec(pp, pm)
        for ra, rd in [(1, 1), (3, 0), (2, 3)]:
            assert discrete_regions(noise, RadiiSpec(ra, rd)) == binary_regions(noise, RadiiSpec(ra, rd))


def test_discrete_boundary_probabilities():
    for pp, pm in [("0", "0"), ("1", "1"), ("0", "1"), ("1", "0.3"), ("0.5", "0")]:
        for K in (2, 3):
            noise = NoiseSpec(pp, pm, K)
            for radii in [RadiiSpec(1, 1), RadiiSpec(2, 0), RadiiSpec(0, 1, 1 if K > 2 else 0)]:
                assert discrete_regions(noise, radii) == oracle_table(noise, radii)


p_grid = st.sampled_from(["0.05", "0.1", "0.25", "0.5", "0.6", "0.9", "0.95"])


@given(p_grid, p_grid, st.integers(0, 3), st.integers(0, 3))
@settings(max_examples=80, deadline=None)
def test_binary_matches_oracle(pp, pm, ra, rd):
    noise = NoiseSpec(pp, pm)
    assert build_table(noise, RadiiSpec(ra, rd)) == oracle_table(noise, RadiiSpec(ra, rd))


@given(p_grid, p_grid, st.integers(3, 5), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))
@settings(max_examples=60, deadline=None)
def test_discrete_matches_oracle(pp, pm, K, ra, rd, rc):
    noise, radii = NoiseSpec(pp, pm, K), RadiiSpec(ra, rd, rc)
    if K ** radii.total > 10**5:
        return
    assert build_table(noise, radii) == oracle_table(noise, radii)


def test_joint_table_matches_oracle():
    na, nf = NoiseSpec("0.2", "0.4"), NoiseSpec("0.1", "0.3")
    ra, rf = RadiiSpec(1, 1), RadiiSpec(1, 0)
    t = build_table((na, nf), (ra, rf))
    assert len(t) <= 9
    xa, xta = sphere_representatives(ra)
    xf, xtf = sphere_representatives(rf)
    noise = [na] * 2 + [nf]
    assert t == enumerate_regions(list(xa) + list(xf), list(xta) + list(xtf), noise)


def test_joint_identity_factor():
    a = binary_regions(NoiseSpec("0.2", "0.4"), RadiiSpec(1, 1))
    f = binary_regions(NoiseSpec("0.1", "0.3"), RadiiSpec())
    assert joint_regions(a, f) == a


def test_joint_with_special_group():
    na, nf = NoiseSpec("0", "0.4"), NoiseSpec("0.1", "0.3")
    ra, rf = RadiiSpec(1, 1), RadiiSpec(0, 1)
    xa, xta = sphere_representatives(ra)
    xf, xtf = sphere_representatives(rf)
    want = enumerate_regions(list(xa) + list(xf), list(xta) + list(xtf), [na] * 2 + [nf])
    assert build_table((na, nf), (ra, rf)) == want


def test_tables_are_exact_probabilities():
    t = build_table(NoiseSpec("0.01", "0.6", 256), RadiiSpec(3, 2, 2))
    assert sum(e.prob_x for e in t) == 1 and sum(e.prob_xt for e in t) == 1
    assert all(isinstance(e.prob_x, type(mpq(1))) for e in t)


def test_count_bound_helper():
    assert region_count_bound(RadiiSpec(2, 3), NoiseSpec("0.1", "0.2")) == 6
    assert region_count_bound(RadiiSpec(1, 1, 1), NoiseSpec("0.3", "0.3", 3)) == 7
    assert region_count_bound(RadiiSpec(1, 1, 1), NoiseSpec("0.3", "0.2", 3)) == 16


def test_sizes_along_sweep():
    for pp, pm in product(["0.1", "0.3", "0.8"], repeat=2):
        for K in (3, 4, 7):
            noise = NoiseSpec(pp, pm, K)
            for r in product(range(3), repeat=3):
                radii = RadiiSpec(*r)
                assert len(build_table(noise, radii)) <= (radii.total + 1) ** 2


def test_fraction_interop():
    t = binary_regions(NoiseSpec("0.2", "0.4"), RadiiSpec(1, 1))
    assert t.entries[0].prob_x == Fraction(12, 25)
