import random
from fractions import Fraction

import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

import discert.certify as certify_mod
from discert.certify import (
    certify_bounds,
    certify_l0,
    certify_point,
    certify_table,
    margin,
    max_radius_frontier,
    memoized_certify,
    rho,
    rho_trace,
)
from discert.core import (
    BudgetError,
    ClassBounds,
    NoiseSpec,
    RadiiSpec,
    RangeError,
    Region,
    ValidityError,
    VoteRecord,
    sphere_representatives,
)
from discert.oracle import lp_exact, lp_exact_margin
from discert.regions import binary_regions, build_table

GOLDEN = binary_regions(NoiseSpec("0.2", "0.4"), RadiiSpec(1, 1))


def linprog_rho(table, p_lower):
    """min sum h*prob_xt s.t. sum h*prob_x = p_lower, 0 <= h <= 1 (floating point)."""
    px = [float(e.prob_x) for e in table]
    pxt = [float(e.prob_xt) for e in table]
    res = linprog(pxt, A_eq=[px], b_eq=[float(p_lower)], bounds=[(0, 1)] * len(px), method="highs")
    return res.fun


def test_golden_rho_is_half():
    assert rho(GOLDEN, mpq(9, 10)) == mpq(1, 2)
    trace = rho_trace(GOLDEN, mpq(9, 10))
    assert trace.fractions == (1, mpq(42, 44), 0)


def test_golden_not_certified():
    res = certify_point(NoiseSpec("0.2", "0.4"), RadiiSpec(1, 1), ClassBounds.binary("0.9"))
    assert res.rho_or_margin == mpq(1, 2) and not res.certified


def test_full_budget_gives_one():
    assert rho(GOLDEN, 1) == 1


def test_constant_ratio_table():
    t = build_table(NoiseSpec("0.3", "0.7"), RadiiSpec(4, 2))
    for p in (mpq(1, 3), mpq(9, 10)):
        assert rho(t, p) == p


def test_budget_errors():
    with pytest.raises(RangeError):
        rho(GOLDEN, mpq(3, 2))
    with pytest.raises(ValidityError):
        margin(GOLDEN, mpq(8, 10), mpq(3, 10))


def test_zero_budget():
    assert rho(GOLDEN, 0) == 0


def test_budget_error_on_short_table():
    class Short:
        entries = (Region(mpq(1), mpq(1, 2), mpq(1, 2)),)
    with pytest.raises(BudgetError):
        certify_mod._greedy(Short, mpq(3, 4), True)


def test_margin_zero_radii():
    t = build_table(NoiseSpec("0.2", "0.4"), RadiiSpec())
    assert margin(t, mpq(7, 10), mpq(1, 5)) == mpq(1, 2)


def test_golden_margin_against_lp():
    x, xt = sphere_representatives(RadiiSpec(1, 1))
    want = lp_exact_margin(list(x), list(xt), NoiseSpec("0.2", "0.4"), Fraction(7, 10), Fraction(1, 10))
    assert margin(GOLDEN, mpq(7, 10), mpq(1, 10)) == want


grid = st.sampled_from(["0.1", "0.2", "0.3", "0.5", "0.7", "0.9"])


@given(grid, grid, st.integers(0, 3), st.integers(0, 3),
       st.fractions(min_value=0, max_value=1, max_denominator=50))
@settings(max_examples=100, deadline=None)
def test_rho_matches_pointwise_lp(pp, pm, ra, rd, p):
    noise, radii = NoiseSpec(pp, pm), RadiiSpec(ra, rd)
    x, xt = sphere_representatives(radii)
    t = build_table(noise, radii)
    assert rho(t, mpq(p)) == lp_exact(list(x), list(xt), noise, p)
    assert abs(float(rho(t, mpq(p))) - linprog_rho(t, p)) < 1e-7


@given(grid, grid, st.integers(0, 3), st.integers(0, 3),
       st.fractions(min_value=0, max_value=1, max_denominator=40))
@settings(max_examples=100, deadline=None)
def test_margin_identity_binary(pp, pm, ra, rd, p):
    t = build_table(NoiseSpec(pp, pm), RadiiSpec(ra, rd))
    p = mpq(p)
    assert margin(t, p, 1 - p) == 2 * rho(t, p) - 1


def test_margin_matches_lp_k3():
    noise, radii = NoiseSpec("0.2", "0.5", 3), RadiiSpec(1, 1, 1)
    x, xt = sphere_representatives(radii, 3)
    t = build_table(noise, radii)
    for ps, pr in [("0.7", "0.2"), ("0.5", "0.5"), ("0.9", "0.05")]:
        want = lp_exact_margin(list(x), list(xt), noise, Fraction(ps), Fraction(pr))
        assert margin(t, mpq(ps), mpq(pr)) == want


def test_zero_radius_certified_iff_not_abstaining():
    noise = NoiseSpec("0.01", "0.6")
    assert certify_point(noise, RadiiSpec(), ClassBounds.binary("0.6")).certified
    res = certify_point(noise, RadiiSpec(), ClassBounds.binary("0.5"))
    assert not res.certified and res.abstained
    m = certify_point(noise, RadiiSpec(), ClassBounds.multi("0.4", "0.3"))
    assert m.certified and not m.abstained


def test_half_never_certifies():
    for ra, rd in [(1, 0), (0, 1), (2, 2)]:
        assert not certify_point(NoiseSpec("0.1", "0.2"), RadiiSpec(ra, rd), ClassBounds.binary("0.5")).certified


def test_multi_fallback_when_bounds_overlap():
    b = ClassBounds.multi("0.9", "0.2")
    res = certify_table(GOLDEN, b, RadiiSpec(1, 1))
    assert res.fallback and res.mode == "binary" and res.rho_or_margin == mpq(1, 2)


def test_margin_not_worse_than_binary():
    rng = random.Random(4)
    for _ in range(200):
        t = build_table(NoiseSpec(rng.choice(["0.1", "0.3", "0.6"]), rng.choice(["0.2", "0.4", "0.9"])),
                        RadiiSpec(rng.randint(0, 3), rng.randint(0, 3)))
        p = mpq(rng.randint(50, 100), 100)
        run = mpq(rng.randint(0, 100 - int(p * 100)), 100)
        assert margin(t, p, run) >= 2 * rho(t, p) - 1


def test_certified_region_is_downward_closed():
    noise, b = NoiseSpec("0.01", "0.6"), ClassBounds.binary("0.99")
    cert = {(a, d): certify_point(noise, RadiiSpec(a, d), b).certified for a in range(6) for d in range(15)}
    for (a, d), ok in cert.items():
        if ok:
            assert all(cert[(a2, d2)] for a2 in range(a + 1) for d2 in range(d + 1))


def test_frontier_is_asymmetric_for_sparse_noise():
    front = max_radius_frontier(NoiseSpec("0.01", "0.6"), ClassBounds.binary("0.99"), cap=100)
    best_rd = max(r.r_del for r in front)
    best_ra = max(r.r_add for r in front)
    assert best_rd > 2 * best_ra
    noise, b = NoiseSpec("0.01", "0.6"), ClassBounds.binary("0.99")
    for r in front:
        assert certify_point(noise, r, b).certified
        assert not certify_point(noise, RadiiSpec(r.r_add + 1, r.r_del), b).certified
        assert not certify_point(noise, RadiiSpec(r.r_add, r.r_del + 1), b).certified


def test_frontier_empty_when_abstaining():
    assert max_radius_frontier(NoiseSpec("0.1", "0.1"), ClassBounds.binary("0.5")) == []


def test_frontier_k3_pareto():
    noise, b = NoiseSpec("0.3", "0.3", 3), ClassBounds.binary("0.95")
    front = max_radius_frontier(noise, b, cap=20)
    assert front and any(r.r_change > 0 for r in front)
    for r in front:
        assert certify_point(noise, r, b).certified
        for bump in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]:
            up = RadiiSpec(*(v + s for v, s in zip(r.as_tuple(), bump)))
            assert not certify_point(noise, up, b).certified


def test_l0_zero_and_one():
    noise, b = NoiseSpec("0.1", "0.2"), ClassBounds.binary("0.8")
    assert certify_l0(noise, b, 0) == certify_point(noise, RadiiSpec(), b)
    splits = [certify_point(noise, RadiiSpec(1, 0), b), certify_point(noise, RadiiSpec(0, 1), b)]
    assert certify_l0(noise, b, 1).certified == all(s.certified for s in splits)
    assert certify_l0(noise, b, 1).rho_or_margin == min(s.rho_or_margin for s in splits)


def test_l0_k256_decisions_shrink_with_radius():
    noise = NoiseSpec("0.8", "0.8", 256)
    b = ClassBounds.multi("0.6", "0.05")
    verdicts = [certify_l0(noise, b, r).certified for r in (1, 3, 5, 7)]
    assert verdicts == sorted(verdicts, reverse=True)
    assert verdicts[0]


def test_memoized_profiles(monkeypatch):
    calls = []
    real = certify_mod.certify_point

    def counting(*a, **k):
        calls.append(a)
        return real(*a, **k)

    monkeypatch.setattr(certify_mod, "certify_point", counting)
    profiles = [(1000, 0), (990, 10), (950, 50), (900, 100), (700, 300)]
    records = [VoteRecord(f"v{i}", profiles[i % 5]) for i in range(1000)]
    out = memoized_certify(records, NoiseSpec("0.1", "0.2"), RadiiSpec(1, 1), "0.01")
    assert len(calls) == 5
    assert [r.input_id for r in out] == [r.input_id for r in records]
    assert out[0].rho_or_margin == out[5].rho_or_margin


def test_certify_bounds_order_and_jobs():
    bs = [ClassBounds.binary(p) for p in ("0.9", "0.7", "0.99", "0.9")]
    one = certify_bounds(bs, NoiseSpec("0.1", "0.2"), RadiiSpec(1, 1), 1, list("abcd"))
    two = certify_bounds(bs, NoiseSpec("0.1", "0.2"), RadiiSpec(1, 1), 2, list("abcd"))
    assert one == two
    perm = certify_bounds(bs[::-1], NoiseSpec("0.1", "0.2"), RadiiSpec(1, 1), 1, list("dcba"))
    assert perm == one[::-1]


def test_certify_independent_of_dimension():
    noise, b = NoiseSpec("0.1", "0.3"), ClassBounds.binary("0.95")
    rng = np.random.default_rng(0)
    for d in (10, 1000):
        x = (rng.random(d) < 0.3).astype(int)
        xt = x.copy()
        on = np.flatnonzero(x)[:2]
        off = np.flatnonzero(x == 0)[:1]
        xt[on] = 0
        xt[off] = 1
        from discert.core import sphere_radii
        r = sphere_radii(x, xt)
        assert r == RadiiSpec(1, 2)
        assert certify_point(noise, r, b) == certify_point(noise, RadiiSpec(1, 2), b)
