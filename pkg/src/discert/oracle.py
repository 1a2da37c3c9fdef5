"""Brute-force ground truth for small inputs.

Everything here enumerates the full input space with per-coordinate
probability products in ``fractions.Fraction`` arithmetic and shares no code
with the region constructions or the certificate greedy.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from .core import INF, NoiseSpec, RadiiSpec, Region, RegionTable, SizeError, in_ball

MAX_POINTS = 10**6


def _noise_per_dim(noise, d: int) -> List[NoiseSpec]:
    if isinstance(noise, NoiseSpec):
        return [noise] * d
    noise = list(noise)
    if len(noise) != d:
        raise ValueError("need one NoiseSpec per coordinate")
    return noise


def _frac(v) -> Fraction:
    # plain ints, so no gmpy2 type leaks into the oracle's arithmetic
    return Fraction(int(v.numerator), int(v.denominator))


def _kernel(spec: NoiseSpec, src: int, dst: int) -> Fraction:
    p = _frac(spec.p_plus if src == 0 else spec.p_minus)
    if src == dst:
        return 1 - p
    return p / (spec.num_categories - 1)


def _guard(K: int, d: int):
    if K ** d > MAX_POINTS:
        raise SizeError(f"{K}^{d} points exceed the enumeration limit {MAX_POINTS}")


def outcome_distribution(x: Sequence[int], noise) -> Dict[Tuple[int, ...], Fraction]:
    """Exact probability of every outcome z of the randomization applied to x."""
    d = len(x)
    specs = _noise_per_dim(noise, d)
    K = specs[0].num_categories if specs else 2
    _guard(K, d)
    dist = {(): Fraction(1)}
    for i in range(d):
        rows = [_kernel(specs[i], x[i], k) for k in range(K)]
        dist = {z + (k,): pz * rows[k] for z, pz in dist.items() for k in range(K)}
    return dist


def _point_ratios(x, x_tilde, noise):
    if len(x) != len(x_tilde):
        raise ValueError("vectors differ in length")
    key_noise = noise if isinstance(noise, NoiseSpec) else tuple(noise)
    return _cached_points(tuple(int(a) for a in x), tuple(int(a) for a in x_tilde), key_noise)


@lru_cache(maxsize=1024)
def _cached_points(x, x_tilde, noise):
    px = outcome_distribution(x, noise)
    pxt = outcome_distribution(x_tilde, noise)
    points = []
    for z, a in px.items():
        b = pxt[z]
        if a == 0 and b == 0:
            continue
        ratio = INF if b == 0 else a / b
        points.append((ratio, a, b))
    return tuple(points)


def enumerate_regions(x: Sequence[int], x_tilde: Sequence[int], noise) -> RegionTable:
    """Group every outcome by its exact likelihood ratio."""
    grouped: Dict[object, List[Fraction]] = {}
    for ratio, a, b in _point_ratios(x, x_tilde, noise):
        acc = grouped.setdefault(ratio, [Fraction(0), Fraction(0)])
        acc[0] += a
        acc[1] += b
    order = sorted(grouped, reverse=True)
    return RegionTable(tuple(Region(r, grouped[r][0], grouped[r][1]) for r in order))


def _fill(points, budget: Fraction, highest_first: bool) -> Tuple[Fraction, list]:
    """Fractional knapsack over single points; returns value and per-point shares."""
    pts = sorted(points, key=lambda t: t[0], reverse=highest_first)
    left = budget
    value = Fraction(0)
    shares = []
    for ratio, a, b in pts:
        if a == 0:
            h = Fraction(0) if highest_first else Fraction(1)
        elif left >= a:
            h = Fraction(1)
            left -= a
        else:
            h = left / a
            left = Fraction(0)
        shares.append(h)
        value += h * b
    return value, list(zip(pts, shares))


def lp_exact(x: Sequence[int], x_tilde: Sequence[int], noise, p_lower) -> Fraction:
    """Optimum of the worst-case classifier LP with every outcome as its own region."""
    value, _ = _fill(_point_ratios(x, x_tilde, noise), _frac(p_lower), True)
    return value


def lp_exact_margin(x, x_tilde, noise, p_lower_star, p_upper_runner) -> Fraction:
    points = _point_ratios(x, x_tilde, noise)
    top, _ = _fill(points, _frac(p_lower_star), True)
    runner, _ = _fill(points, _frac(p_upper_runner), False)
    return top - runner


def worst_case_classifier(x, x_tilde, noise, p_lower) -> Dict[Tuple[int, ...], Fraction]:
    """Per-outcome probability of predicting the top class for a classifier that
    attains the worst case: ``p_lower`` mass at x and minimal mass at x_tilde."""
    px = outcome_distribution(x, noise)
    pxt = outcome_distribution(x_tilde, noise)
    order = sorted((z for z in px if px[z] or pxt[z]),
                   key=lambda z: INF if pxt[z] == 0 else px[z] / pxt[z], reverse=True)
    left = _frac(p_lower)
    h = {z: Fraction(0) for z in px}
    for z in order:
        a = px[z]
        if a == 0 or left == 0:
            continue
        take = min(Fraction(1), left / a)
        h[z] = take
        left -= take * a
    return h


def smoothed_probabilities(classifier, x: Sequence[int], noise, num_classes: int,
                           labels: Optional[Dict] = None) -> List[Fraction]:
    """Exact class probabilities of the smoothed classifier at x."""
    probs = [Fraction(0)] * num_classes
    for z, pz in outcome_distribution(x, noise).items():
        if pz == 0:
            continue
        y = labels[z] if labels is not None else int(classifier.classify(z))
        probs[y] += pz
    return probs


def strict_top(probs: Sequence[Fraction]) -> Optional[int]:
    best = max(probs)
    winners = [c for c, p in enumerate(probs) if p == best]
    return winners[0] if len(winners) == 1 else None


def ball_members(x: Sequence[int], radii: RadiiSpec, K: int):
    d = len(x)
    _guard(K, d)
    for xt in product(range(K), repeat=d):
        if in_ball(x, xt, radii):
            yield xt


def exhaustive_ball_check(classifier, x: Sequence[int], noise, radii: RadiiSpec,
                          num_classes: int = 2) -> bool:
    """True iff the exact smoothed prediction is the same strict winner at every
    point of the ball around x."""
    x = tuple(int(a) for a in x)
    specs = _noise_per_dim(noise, len(x))
    K = specs[0].num_categories if specs else 2
    _guard(K, len(x))
    labels = {z: int(classifier.classify(z)) for z in product(range(K), repeat=len(x))}
    target = strict_top(smoothed_probabilities(classifier, x, noise, num_classes, labels))
    if target is None:
        return False
    for xt in ball_members(x, radii, K):
        if strict_top(smoothed_probabilities(classifier, xt, noise, num_classes, labels)) != target:
            return False
    return True
