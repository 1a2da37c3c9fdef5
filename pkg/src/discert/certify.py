"""Worst-case classifier bounds over a region table, certification decisions and
maximum-radius search."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

from gmpy2 import mpq

from .core import (
    BINARY_CLASS,
    HALF,
    MULTI_CLASS,
    BudgetError,
    CertResult,
    ClassBounds,
    NoiseSpec,
    RadiiSpec,
    RangeError,
    RegionTable,
    ValidityError,
    VoteRecord,
)
from .regions import build_table

DEFAULT_CAP = 200


@dataclass(frozen=True)
class BudgetTrace:
    """Greedy LP solution: ``fractions[i]`` is the share of region i assigned to the class."""

    fractions: Tuple[mpq, ...]
    value: mpq


def _greedy(table: RegionTable, budget, descending: bool) -> BudgetTrace:
    budget = mpq(budget)
    if budget < 0 or budget > 1:
        raise RangeError(f"budget must lie in [0, 1], got {budget}")
    entries = table.entries if descending else table.entries[::-1]
    remaining = budget
    value = mpq(0)
    fractions = []
    for e in entries:
        if e.prob_x == 0:
            # free under x: worthless for the minimiser, pure gain for the maximiser
            h = mpq(0) if descending else mpq(1)
        elif remaining == 0:
            h = mpq(0)
        elif e.prob_x <= remaining:
            h = mpq(1)
            remaining -= e.prob_x
        else:
            h = remaining / e.prob_x
            remaining = mpq(0)
        fractions.append(h)
        value += h * e.prob_xt
    if remaining > 0:
        raise BudgetError(f"budget {budget} exceeds the mass of the table")
    if not descending:
        fractions.reverse()
    return BudgetTrace(tuple(fractions), value)


def rho_trace(table: RegionTable, p_lower) -> BudgetTrace:
    return _greedy(table, p_lower, descending=True)


def rho(table: RegionTable, p_lower) -> mpq:
    """Smallest probability of the top class at the neighbour over all classifiers
    that give it probability ``p_lower`` at the clean input."""
    return _greedy(table, p_lower, descending=True).value


def margin(table: RegionTable, p_lower_star, p_upper_runner) -> mpq:
    """Worst-case margin between the top class and the runner-up at the neighbour.

    The top class fills regions from the highest ratio down, the runner-up from
    the lowest ratio up.
    """
    p_star, p_run = mpq(p_lower_star), mpq(p_upper_runner)
    if p_star + p_run > 1:
        raise ValidityError(f"p_lower + p_upper_runner = {p_star + p_run} exceeds 1")
    top = _greedy(table, p_star, descending=True)
    runner = _greedy(table, p_run, descending=False)
    return top.value - runner.value


def _abstains(bounds: ClassBounds) -> bool:
    if bounds.mode == MULTI_CLASS and bounds.p_lower + bounds.p_upper_runner <= 1:
        return bounds.p_lower <= bounds.p_upper_runner
    return bounds.p_lower <= HALF


def certify_table(table: RegionTable, bounds: ClassBounds, radii=None, input_id=None) -> CertResult:
    """Decision for precomputed regions.

    Multi-class bounds that are not jointly valid (possible after Bonferroni
    correction) are answered with the binary-class certificate, which only
    needs the lower bound. When both apply the margin is never worse than
    ``2 * rho - 1``, so the margin decides.
    """
    abstained = _abstains(bounds)
    if bounds.mode == MULTI_CLASS:
        if bounds.p_lower + bounds.p_upper_runner <= 1:
            m = margin(table, bounds.p_lower, bounds.p_upper_runner)
            return CertResult(input_id, radii, m > 0, m, abstained, MULTI_CLASS,
                              bounds.p_lower, bounds.p_upper_runner)
        value = rho(table, bounds.p_lower)
        return CertResult(input_id, radii, value > HALF, value, abstained, BINARY_CLASS,
                          bounds.p_lower, bounds.p_upper_runner, fallback=True)
    value = rho(table, bounds.p_lower)
    return CertResult(input_id, radii, value > HALF, value, abstained, BINARY_CLASS,
                      bounds.p_lower, bounds.p_upper_runner)


def certify_point(noise, radii, bounds: ClassBounds, input_id=None) -> CertResult:
    """Certify one input for the sphere (equivalently the ball) of the given radii.

    ``noise``/``radii`` may be a pair of NoiseSpecs/RadiiSpecs for a joint
    certificate over two coordinate groups.
    """
    return certify_table(build_table(noise, radii), bounds, radii, input_id)


def _certified(noise: NoiseSpec, bounds: ClassBounds, ra: int, rd: int, rc: int = 0) -> bool:
    return certify_point(noise, RadiiSpec(ra, rd, rc), bounds).certified


def _staircase(noise: NoiseSpec, bounds: ClassBounds, cap: int, rc: int) -> List[Tuple[int, int]]:
    """Largest certified r_add for every certified r_del at fixed r_change."""
    if not _certified(noise, bounds, 0, 0, rc):
        return []
    ra = 0
    while ra < cap and _certified(noise, bounds, ra + 1, 0, rc):
        ra += 1
    steps = [(ra, 0)]
    rd = 1
    while rd <= cap and _certified(noise, bounds, 0, rd, rc):
        # certified region is downward closed, so r_add can only shrink
        while not _certified(noise, bounds, ra, rd, rc):
            ra -= 1
        steps.append((ra, rd))
        rd += 1
    return steps


def _pareto(points: Sequence[Tuple[int, int, int]]) -> List[Tuple[int, int, int]]:
    keep = []
    for p in points:
        dominated = any(q != p and all(a >= b for a, b in zip(q, p)) for q in points)
        if not dominated:
            keep.append(p)
    return sorted(keep, key=lambda t: (t[2], t[1], t[0]))


def max_radius_frontier(noise: NoiseSpec, bounds: ClassBounds, cap: int = DEFAULT_CAP) -> List[RadiiSpec]:
    """Maximal certified radii (Pareto frontier), each axis searched up to ``cap``.

    Empty when even the zero radius fails, i.e. the input abstains.
    """
    points = []
    for rc in range(cap + 1 if not noise.is_binary else 1):
        steps = _staircase(noise, bounds, cap, rc)
        if not steps:
            break
        points.extend((ra, rd, rc) for ra, rd in steps)
    return [RadiiSpec(*p) for p in _pareto(points)]


def certify_l0(noise: NoiseSpec, bounds: ClassBounds, r: int, input_id=None) -> CertResult:
    """Certify every split of an l0 budget ``r`` into additions/deletions(/changes).

    Returns the result of the worst split; it is certified iff all splits are.
    """
    if r < 0:
        raise RangeError("l0 radius must be nonnegative")
    if noise.is_binary:
        splits = [RadiiSpec(ra, r - ra) for ra in range(r + 1)]
    else:
        splits = [RadiiSpec(r0, r1, r - r0 - r1) for r0 in range(r + 1) for r1 in range(r + 1 - r0)]
    worst = None
    for radii in splits:
        res = certify_point(noise, radii, bounds, input_id)
        if worst is None or res.rho_or_margin < worst.rho_or_margin or (
                worst.certified and not res.certified):
            worst = res
    return worst


def default_jobs() -> int:
    value = os.environ.get("DISCERT_JOBS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return 1


def _certify_profile(args):
    noise, radii, bounds = args
    return certify_point(noise, radii, bounds)


def certify_bounds(bounds_seq: Sequence[ClassBounds], noise, radii, jobs: int = 1,
                   input_ids: Optional[Sequence] = None) -> List[CertResult]:
    """Certify many inputs; identical bounds are evaluated once.

    The output is in input order and does not depend on ``jobs``.
    """
    distinct: Dict[Hashable, int] = {}
    for b in bounds_seq:
        distinct.setdefault(b, len(distinct))
    keys = list(distinct)
    work = [(noise, radii, b) for b in keys]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_certify_profile, work))
    else:
        results = [certify_point(noise, radii, b) for b in keys]
    ids = input_ids if input_ids is not None else [None] * len(bounds_seq)
    return [results[distinct[b]].with_id(i) for b, i in zip(bounds_seq, ids)]


def memoized_certify(votes: Sequence[VoteRecord], noise, radii, alpha, mode: str = BINARY_CLASS,
                     num_classes: Optional[int] = None, jobs: int = 1) -> List[CertResult]:
    """Bounds from each record's own votes, then one certificate per distinct profile."""
    from .confidence import bounds_for

    cache: Dict[Tuple, ClassBounds] = {}
    bounds_seq = []
    for rec in votes:
        key = (rec.counts, num_classes)
        if key not in cache:
            cache[key] = bounds_for(rec, rec, alpha, mode, num_classes)
        bounds_seq.append(cache[key])
    return certify_bounds(bounds_seq, noise, radii, jobs, [r.input_id for r in votes])
