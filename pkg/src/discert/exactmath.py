"""Exact probability kernels: Poisson-Binomial and Multinomial PMFs, and
Clopper-Pearson bounds."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import List, Sequence, Tuple

from gmpy2 import mpq
from scipy.special import betainc

from .core import CountError, RangeError, as_rational

# Clopper-Pearson roots are bracketed until the interval is no wider than this.
CP_WIDTH = mpq(1, 10**12)


@dataclass(frozen=True)
class PBParams:
    """Two-group Poisson-Binomial: ``n_a`` trials with success ``p_a`` and ``n_b`` with ``p_b``."""

    p_a: mpq
    n_a: int
    p_b: mpq
    n_b: int

    def __post_init__(self):
        for name in ("p_a", "p_b"):
            p = as_rational(getattr(self, name))
            if p < 0 or p > 1:
                raise RangeError(f"{name} must lie in [0, 1], got {p}")
            object.__setattr__(self, name, p)
        for name in ("n_a", "n_b"):
            n = getattr(self, name)
            if not isinstance(n, int) or n < 0:
                raise RangeError(f"{name} must be a nonnegative integer, got {n!r}")


def pb_pmf(params: PBParams) -> List[mpq]:
    """PMF of PB([p_a, n_a], [p_b, n_b]) on ``0 .. n_a + n_b``.

    Uses the power-sum recursion (Chen & Liu) specialised to two groups:

        T(i) = n_a * w_a**i + n_b * w_b**i,   w = p / (1 - p)
        R(q) = 1/q * sum_{i=1..q} (-1)**(i+1) * T(i) * R(q - i),   R(0) = 1
        PB(q) = R(q) * (1 - p_a)**n_a * (1 - p_b)**n_b

    The alternating sum is only stable because everything is exact. Groups with
    p = 0 never succeed and groups with p = 1 always succeed, so both are taken
    out of the recursion and contribute a fixed offset.
    """
    size = params.n_a + params.n_b + 1
    offset = 0
    active: List[Tuple[mpq, int]] = []
    for p, n in ((params.p_a, params.n_a), (params.p_b, params.n_b)):
        if n == 0 or p == 0:
            continue
        if p == 1:
            offset += n
        else:
            active.append((p, n))

    m = sum(n for _, n in active)
    odds = [p / (1 - p) for p, _ in active]
    # T(i) for i = 1..m, built from running powers of the odds
    t = [mpq(0)] * (m + 1)
    powers = [mpq(1)] * len(active)
    for i in range(1, m + 1):
        total = mpq(0)
        for g, (_, n) in enumerate(active):
            powers[g] *= odds[g]
            total += n * powers[g]
        t[i] = total

    r = [mpq(0)] * (m + 1)
    r[0] = mpq(1)
    for q in range(1, m + 1):
        acc = mpq(0)
        for i in range(1, q + 1):
            term = t[i] * r[q - i]
            acc = acc + term if i % 2 == 1 else acc - term
        r[q] = acc / q

    scale = mpq(1)
    for p, n in active:
        scale *= (1 - p) ** n

    pmf = [mpq(0)] * size
    for q in range(m + 1):
        pmf[offset + q] = r[q] * scale
    return pmf


def multinomial_pmf(probs: Sequence, total: int, counts: Sequence[int]) -> mpq:
    """``total! / prod(k!) * prod(p**k)`` with ``0**0 == 1``."""
    if len(probs) != len(counts):
        raise CountError("probs and counts differ in length")
    if any(k < 0 for k in counts) or sum(counts) != total:
        raise CountError(f"counts {tuple(counts)} do not sum to {total}")
    coef = factorial(total)
    for k in counts:
        coef //= factorial(k)
    value = mpq(coef)
    for p, k in zip(probs, counts):
        if k:
            value *= mpq(p) ** k
    return value


def _upper_tail(successes: int, n: int, p: mpq) -> float:
    # P[Bin(n, p) >= successes] via the regularized incomplete beta function
    return float(betainc(successes, n - successes + 1, float(p)))


def clopper_pearson_lower(successes: int, n: int, alpha) -> mpq:
    """One-sided (1 - alpha) lower confidence bound on a binomial proportion.

    Returns the left end of a bracket of width <= 1e-12 around the root of
    ``P[Bin(n, p) >= successes] = alpha``, so the result never exceeds the root.
    """
    if n <= 0 or not 0 <= successes <= n:
        raise RangeError(f"need 0 <= successes <= n and n > 0, got ({successes}, {n})")
    alpha = as_rational(alpha)
    if not 0 < alpha < 1:
        raise RangeError(f"alpha must lie in (0, 1), got {alpha}")
    if successes == 0:
        return mpq(0)
    target = float(alpha)
    lo, hi = mpq(0), mpq(1)
    while hi - lo > CP_WIDTH:
        mid = (lo + hi) / 2
        if _upper_tail(successes, n, mid) >= target:
            hi = mid
        else:
            lo = mid
    return lo


def clopper_pearson_upper(successes: int, n: int, alpha) -> mpq:
    """One-sided (1 - alpha) upper bound; mirror image of the lower bound, rounded up."""
    if n <= 0 or not 0 <= successes <= n:
        raise RangeError(f"need 0 <= successes <= n and n > 0, got ({successes}, {n})")
    return 1 - clopper_pearson_lower(n - successes, n, alpha)
