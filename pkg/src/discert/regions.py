"""Regions of constant likelihood ratio between the smoothed distributions of a
clean input and a neighbour on the sphere of the given radii.

Tables depend only on the noise parameters and the radii, never on the input
dimension or on the coordinates where the two inputs agree.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from math import factorial
from typing import Dict, NamedTuple, Tuple, Union

from gmpy2 import mpq

from .core import (
    INF,
    BoundaryError,
    CategoryError,
    NoiseSpec,
    RadiiSpec,
    Region,
    RegionTable,
    ratio_of,
)
from .exactmath import PBParams, pb_pmf


class TripletKey(NamedTuple):
    """Exponents of the four ratio bases; cells sharing a key share a ratio."""

    keep_zero_vs_del: int  # q0 - p1
    move_zero_vs_del: int  # p0 - q1
    other_zero_vs_del: int  # s0 - s1
    change_keep: int  # q2 - p2


def _interior(p: mpq) -> bool:
    return 0 < p < 1


def binary_regions(noise: NoiseSpec, radii: RadiiSpec) -> RegionTable:
    """Regions R_q, q = number of flipped coordinates of x inside the disagreement set.

    Emitted directly in ratio-descending order: increasing q when
    ``p_plus + p_minus < 1``, decreasing q when ``> 1``, one region when ``== 1``.
    """
    if not noise.is_binary:
        raise CategoryError("binary_regions needs K = 2")
    radii.check_for(2)
    pp, pm = noise.p_plus, noise.p_minus
    if not (_interior(pp) and _interior(pm)):
        raise BoundaryError("binary_regions needs 0 < p_plus, p_minus < 1")
    ra, rd = radii.r_add, radii.r_del

    if pp + pm == 1:
        # every ratio equals one
        return RegionTable((Region(mpq(1), mpq(1), mpq(1)),))

    pmf = pb_pmf(PBParams(pp, ra, pm, rd))
    add_base = pp / (1 - pm)
    del_base = pm / (1 - pp)
    qs = range(ra + rd + 1) if pp + pm < 1 else range(ra + rd, -1, -1)
    entries = []
    for q in qs:
        eta = add_base ** (q - rd) * del_base ** (q - ra)
        entries.append(Region(eta, pmf[q], pmf[q] / eta))
    return RegionTable(tuple(entries))


def special_regions(noise: NoiseSpec, radii: RadiiSpec) -> RegionTable:
    """Three-region partition when exactly one flip probability is zero.

    With ``p_plus == 0`` (deletion-only noise, p = p_minus):
      R1  reachable from both      prob_x = p**r_del,     prob_xt = p**r_add
      R2  reachable only from x    prob_x = 1 - p**r_del, prob_xt = 0
      R3  reachable only from x~   prob_x = 0,            prob_xt = 1 - p**r_add
    ``p_minus == 0`` mirrors the roles of the radii. R3 is kept for the
    multi-class margin; empty regions are dropped.
    """
    if not noise.is_binary:
        raise CategoryError("special_regions needs K = 2")
    radii.check_for(2)
    pp, pm = noise.p_plus, noise.p_minus
    if pp == 0 and _interior(pm):
        p, n_x, n_xt = pm, radii.r_del, radii.r_add
    elif pm == 0 and _interior(pp):
        p, n_x, n_xt = pp, radii.r_add, radii.r_del
    else:
        raise BoundaryError("special_regions needs exactly one of p_plus, p_minus equal to 0 "
                            "and the other strictly inside (0, 1)")
    both_x, both_xt = p ** n_x, p ** n_xt
    cells = [
        (both_x / both_xt, both_x, both_xt),
        (INF, 1 - both_x, mpq(0)),
        (mpq(0), mpq(0), 1 - both_xt),
    ]
    return RegionTable.from_cells(cells)


def _triplets(r: int):
    for q in range(r + 1):
        for p in range(r + 1 - q):
            yield q, p, r - q - p


def _group_cells(r: int, probs_x, probs_xt, exact_xt: bool):
    """(q, p, s, prob_x[, prob_xt]) for one multinomial group of size r."""
    fr = factorial(r)
    out = []
    for q, p, s in _triplets(r):
        coef = fr // (factorial(q) * factorial(p) * factorial(s))
        px = mpq(coef)
        for base, k in zip(probs_x, (q, p, s)):
            if k:
                px *= base ** k
        if exact_xt:
            pxt = mpq(coef)
            for base, k in zip(probs_xt, (q, p, s)):
                if k:
                    pxt *= base ** k
        else:
            pxt = None
        out.append((q, p, s, px, pxt))
    return out


def _accumulate(acc: Dict, key, px, pxt):
    if key in acc:
        sx, sxt = acc[key]
        acc[key] = (sx + px, None if pxt is None else sxt + pxt)
    else:
        acc[key] = (px, pxt)


def discrete_regions(noise: NoiseSpec, radii: RadiiSpec) -> RegionTable:
    """Regions for K categories, built from (q, p, s) triplets per radius group.

    Group 0 holds the r_add coordinates (x = 0, x~ != 0), group 1 the r_del
    coordinates (x != 0, x~ = 0) and group 2 the r_change coordinates (both
    nonzero). In each group q counts z = x, p counts z = x~ and s the rest, so
    the probability of a cell is a product of three 3-category multinomials.

    Cells are pre-grouped by TripletKey, then merged on exact ratio equality.
    Boundary flip probabilities (0 or 1) make some ratio bases 0 or undefined;
    those tables are built from directly computed prob_xt instead.
    """
    K = noise.num_categories
    radii.check_for(K)
    a0, b0, c0 = noise.a0, noise.b0, noise.c0
    a1, b1, c1 = noise.a1, noise.b1, noise.c1
    interior = _interior(noise.p_plus) and _interior(noise.p_minus)

    # under x~ the roles of "equals x" and "equals x~" swap within each group
    g0 = _group_cells(radii.r_add, (a0, b0, c0), (b1, a1, c1), not interior)
    g1 = _group_cells(radii.r_del, (a1, b1, c1), (b0, a0, c0), not interior)
    g2 = _group_cells(radii.r_change, (a1, b1, c1), (b1, a1, c1), not interior)

    # groups 0 and 1 share three exponents, group 2 owns the fourth
    first: Dict[Tuple[int, int, int], tuple] = {}
    for (q0, p0, s0, x0, t0), (q1, p1, s1, x1, t1) in product(g0, g1):
        _accumulate(first, (q0 - p1, p0 - q1, s0 - s1), x0 * x1,
                    None if interior else t0 * t1)
    second: Dict[int, tuple] = {}
    for q2, p2, s2, x2, t2 in g2:
        _accumulate(second, q2 - p2, x2, t2)

    cells = []
    if interior:
        bases = (a0 / b1, b0 / a1, c0 / c1 if c1 else None, a1 / b1)
        for (k01, (x01, _)), (k2, (x2, _)) in product(first.items(), second.items()):
            key = TripletKey(*k01, k2)
            if bases[2] is None and key.other_zero_vs_del:
                continue  # K = 2: "other" cells carry no mass
            eta = mpq(1)
            for base, e in zip(bases, key):
                if e:
                    eta *= base ** e
            px = x01 * x2
            cells.append((eta, px, px / eta))
    else:
        for (_, (x01, t01)), (_, (x2, t2)) in product(first.items(), second.items()):
            px, pxt = x01 * x2, t01 * t2
            cells.append((ratio_of(px, pxt) if px else mpq(0), px, pxt))
    return RegionTable.from_cells(cells)


def joint_regions(table_a: RegionTable, table_f: RegionTable) -> RegionTable:
    """Product partition for two independently smoothed groups of coordinates."""
    cells = []
    for ea, ef in product(table_a.entries, table_f.entries):
        px = ea.prob_x * ef.prob_x
        pxt = ea.prob_xt * ef.prob_xt
        if px == 0 and pxt == 0:
            continue
        if ea.ratio in (0, INF) or ef.ratio in (0, INF):
            ratio = ratio_of(px, pxt) if px else mpq(0)
        else:
            ratio = ea.ratio * ef.ratio
        cells.append((ratio, px, pxt))
    return RegionTable.from_cells(cells)


JointNoise = Tuple[NoiseSpec, NoiseSpec]
JointRadii = Tuple[RadiiSpec, RadiiSpec]


@lru_cache(maxsize=4096)
def build_table(noise: Union[NoiseSpec, JointNoise], radii: Union[RadiiSpec, JointRadii]) -> RegionTable:
    """Pick the construction matching the noise parameters (cached).

    A pair of NoiseSpecs with a pair of RadiiSpecs builds the joint table.
    """
    if isinstance(noise, tuple):
        if not isinstance(radii, tuple) or len(noise) != 2 or len(radii) != 2:
            raise ValueError("joint certification needs two noise specs and two radii specs")
        return joint_regions(build_table(noise[0], radii[0]), build_table(noise[1], radii[1]))
    radii.check_for(noise.num_categories)
    if noise.is_binary:
        pp, pm = noise.p_plus, noise.p_minus
        if _interior(pp) and _interior(pm):
            return binary_regions(noise, radii)
        if (pp == 0 and _interior(pm)) or (pm == 0 and _interior(pp)):
            return special_regions(noise, radii)
    return discrete_regions(noise, radii)


def region_count_bound(radii: RadiiSpec, noise: NoiseSpec) -> int:
    """Upper bound on the merged table size for the given setting."""
    r = radii.total
    if noise.is_binary:
        return r + 1
    if noise.p_plus == noise.p_minus:
        return 2 * r + 1
    return (r + 1) ** 2
