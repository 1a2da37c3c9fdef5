"""Domain types shared by the certification engine.

All probabilities are exact rationals (``gmpy2.mpq``). Every type validates its
invariants at construction and is immutable afterwards.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
from gmpy2 import mpq

INF = math.inf

Rational = Union[mpq, Fraction, int]

BINARY_CLASS = "binary"
MULTI_CLASS = "multi"
MODES = (BINARY_CLASS, MULTI_CLASS)


class CertError(ValueError):
    """Base class for all engine errors."""


class ParseError(CertError):
    pass


class RangeError(CertError):
    pass


class CategoryError(CertError):
    pass


class BoundaryError(CertError):
    pass


class CountError(CertError):
    pass


class BudgetError(CertError):
    pass


class ValidityError(CertError):
    pass


class EmptyVotes(CertError):
    pass


class SizeError(CertError):
    pass


_DECIMAL_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def parse_decimal(text: str) -> mpq:
    """Parse a decimal literal such as ``"0.01"`` or ``"2e-5"`` into an exact rational."""
    s = text.strip()
    if not _DECIMAL_RE.match(s):
        raise ParseError(f"not a decimal number: {text!r}")
    return mpq(Fraction(s))


def as_rational(value) -> mpq:
    if isinstance(value, str):
        return parse_decimal(value)
    if isinstance(value, float):
        raise TypeError("floats are not accepted as probabilities; pass a decimal string")
    return mpq(value)


def _probability(value, name: str) -> mpq:
    p = as_rational(value)
    if p < 0 or p > 1:
        raise RangeError(f"{name} must lie in [0, 1], got {p}")
    return p


@dataclass(frozen=True)
class NoiseSpec:
    """Flip probabilities of the sparsity-aware randomization.

    Zeros are flipped with probability ``p_plus`` and nonzeros with ``p_minus``;
    for ``num_categories > 2`` a flip moves uniformly to one of the other values.
    """

    p_plus: mpq
    p_minus: mpq
    num_categories: int = 2

    def __post_init__(self):
        object.__setattr__(self, "p_plus", _probability(self.p_plus, "p_plus"))
        object.__setattr__(self, "p_minus", _probability(self.p_minus, "p_minus"))
        k = self.num_categories
        if not isinstance(k, int) or isinstance(k, bool) or k < 2:
            raise CategoryError(f"num_categories must be an integer >= 2, got {k!r}")

    @property
    def is_binary(self) -> bool:
        return self.num_categories == 2

    # keep / flip-to-a-given-value / flip-elsewhere probabilities for zeros (0) and nonzeros (1)
    @property
    def a0(self) -> mpq:
        return 1 - self.p_plus

    @property
    def b0(self) -> mpq:
        return self.p_plus / (self.num_categories - 1)

    @property
    def c0(self) -> mpq:
        return 1 - self.a0 - self.b0

    @property
    def a1(self) -> mpq:
        return 1 - self.p_minus

    @property
    def b1(self) -> mpq:
        return self.p_minus / (self.num_categories - 1)

    @property
    def c1(self) -> mpq:
        return 1 - self.a1 - self.b1


def validate_noise_spec(p_plus: str, p_minus: str, K: int) -> NoiseSpec:
    """Build a NoiseSpec from decimal strings."""
    if not isinstance(K, int) or K < 2:
        raise CategoryError(f"K must be an integer >= 2, got {K!r}")
    return NoiseSpec(parse_decimal(p_plus), parse_decimal(p_minus), K)


@dataclass(frozen=True)
class RadiiSpec:
    """Perturbation budget: additions (zero -> nonzero), deletions (nonzero -> zero)
    and changes (nonzero -> other nonzero)."""

    r_add: int = 0
    r_del: int = 0
    r_change: int = 0

    def __post_init__(self):
        for name in ("r_add", "r_del", "r_change"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise RangeError(f"{name} must be a nonnegative integer, got {v!r}")

    @property
    def total(self) -> int:
        return self.r_add + self.r_del + self.r_change

    def check_for(self, num_categories: int) -> "RadiiSpec":
        if num_categories == 2 and self.r_change != 0:
            raise RangeError("r_change must be 0 for binary data")
        return self

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.r_add, self.r_del, self.r_change)


@dataclass(frozen=True)
class Region:
    """A set of outcomes with constant likelihood ratio ``prob_x / prob_xt``."""

    ratio: Union[mpq, float]
    prob_x: mpq
    prob_xt: mpq


def ratio_of(prob_x, prob_xt):
    """Likelihood ratio with ``+inf`` for outcomes unreachable from the neighbour."""
    if prob_xt == 0:
        return INF
    return prob_x / prob_xt


@dataclass(frozen=True)
class RegionTable:
    """Constant-likelihood-ratio partition, sorted by ratio descending.

    Both probability columns sum to exactly one and ratios are pairwise distinct.
    """

    entries: Tuple[Region, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise RangeError("region table is empty")
        if sum(e.prob_x for e in entries) != 1:
            raise RangeError("prob_x does not sum to 1")
        if sum(e.prob_xt for e in entries) != 1:
            raise RangeError("prob_xt does not sum to 1")
        for prev, cur in zip(entries, entries[1:]):
            if not prev.ratio > cur.ratio:
                raise RangeError("ratios must be strictly decreasing")
        for e in entries:
            if e.prob_x < 0 or e.prob_xt < 0:
                raise RangeError("negative region probability")
            if e.prob_x == 0 and e.prob_xt == 0:
                raise RangeError("empty region retained")
            if e.ratio == INF:
                if e.prob_xt != 0:
                    raise RangeError("infinite ratio needs prob_xt == 0")
            elif e.ratio == 0:
                if e.prob_x != 0:
                    raise RangeError("zero ratio needs prob_x == 0")
            elif e.prob_xt * e.ratio != e.prob_x:
                raise RangeError("prob_x != ratio * prob_xt")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @classmethod
    def from_cells(cls, cells: Iterable[Tuple[object, mpq, mpq]]) -> "RegionTable":
        """Merge ``(ratio, prob_x, prob_xt)`` cells with equal ratio and sort descending.

        Cells with both probabilities zero are dropped.
        """
        merged = {}
        for ratio, px, pxt in cells:
            if px == 0 and pxt == 0:
                continue
            if ratio in merged:
                sx, sxt = merged[ratio]
                merged[ratio] = (sx + px, sxt + pxt)
            else:
                merged[ratio] = (px, pxt)
        order = sorted(merged, reverse=True)
        return cls(tuple(Region(r, *merged[r]) for r in order))


@dataclass(frozen=True)
class VoteRecord:
    """Monte-Carlo class counts for one input; ``counts[c]`` is the vote count of class ``c``."""

    input_id: str
    counts: Tuple[int, ...]

    def __post_init__(self):
        counts = tuple(self.counts)
        object.__setattr__(self, "counts", counts)
        for c in counts:
            if not isinstance(c, int) or c < 0:
                raise CountError(f"vote counts must be nonnegative integers, got {c!r}")

    @property
    def num_samples(self) -> int:
        return sum(self.counts)

    @property
    def num_classes(self) -> int:
        return len(self.counts)

    def top_class(self) -> int:
        """Most voted class; ties go to the smallest class id."""
        if not self.counts or self.num_samples == 0:
            raise EmptyVotes(f"no votes recorded for {self.input_id!r}")
        best = max(self.counts)
        return self.counts.index(best)


@dataclass(frozen=True)
class ClassBounds:
    top_class: int
    p_lower: mpq
    p_upper_runner: mpq
    alpha: mpq
    mode: str = BINARY_CLASS

    def __post_init__(self):
        object.__setattr__(self, "p_lower", _probability(self.p_lower, "p_lower"))
        object.__setattr__(self, "p_upper_runner", _probability(self.p_upper_runner, "p_upper_runner"))
        alpha = as_rational(self.alpha)
        if not 0 < alpha < 1:
            raise RangeError(f"alpha must lie in (0, 1), got {alpha}")
        object.__setattr__(self, "alpha", alpha)
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == BINARY_CLASS and self.p_upper_runner != 1 - self.p_lower:
            raise RangeError("binary-class bounds require p_upper_runner == 1 - p_lower")

    @classmethod
    def binary(cls, p_lower, alpha="0.01", top_class: int = 0) -> "ClassBounds":
        p = as_rational(p_lower)
        return cls(top_class, p, 1 - p, as_rational(alpha), BINARY_CLASS)

    @classmethod
    def multi(cls, p_lower, p_upper_runner, alpha="0.01", top_class: int = 0) -> "ClassBounds":
        return cls(top_class, as_rational(p_lower), as_rational(p_upper_runner),
                   as_rational(alpha), MULTI_CLASS)


HALF = mpq(1, 2)


@dataclass(frozen=True)
class CertResult:
    """Decision for one input at one perturbation budget.

    ``rho_or_margin`` holds the worst-case probability for binary-class mode and
    the worst-case margin for multi-class mode. ``fallback`` marks a multi-class
    request that had to be answered in binary-class mode because the bounds were
    not jointly valid.
    """

    input_id: object
    radii: object
    certified: bool
    rho_or_margin: mpq
    abstained: bool
    mode: str = BINARY_CLASS
    p_lower: mpq = field(default=mpq(0))
    p_upper_runner: mpq = field(default=mpq(0))
    fallback: bool = False

    def __post_init__(self):
        expect = (self.rho_or_margin > HALF) if self.mode == BINARY_CLASS else (self.rho_or_margin > 0)
        if bool(self.certified) != bool(expect):
            raise ValueError("certified flag inconsistent with rho_or_margin")

    def with_id(self, input_id) -> "CertResult":
        from dataclasses import replace
        return replace(self, input_id=input_id)


@dataclass(frozen=True)
class DiscreteVector:
    values: Tuple[int, ...]
    num_categories: int = 2

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        for v in vals:
            if v < 0 or v >= self.num_categories:
                raise RangeError(f"value {v} outside 0..{self.num_categories - 1}")

    @property
    def dims(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def sphere_radii(x: Sequence[int], x_tilde: Sequence[int]) -> RadiiSpec:
    """Radii of the sphere on which ``x_tilde`` lies around ``x``."""
    if len(x) != len(x_tilde):
        raise RangeError("vectors differ in length")
    if isinstance(x, np.ndarray) or isinstance(x_tilde, np.ndarray):
        a, b = np.asarray(x), np.asarray(x_tilde)
        diff = a != b
        r_add = int(np.count_nonzero(diff & (a == 0)))
        r_del = int(np.count_nonzero(diff & (b == 0)))
        return RadiiSpec(r_add, r_del, int(np.count_nonzero(diff)) - r_add - r_del)
    r_add = r_del = r_change = 0
    for a, b in zip(x, x_tilde):
        if a == b:
            continue
        if a == 0:
            r_add += 1
        elif b == 0:
            r_del += 1
        else:
            r_change += 1
    return RadiiSpec(r_add, r_del, r_change)


def in_sphere(x: Sequence[int], x_tilde: Sequence[int], radii: RadiiSpec) -> bool:
    return sphere_radii(x, x_tilde) == radii


def in_ball(x: Sequence[int], x_tilde: Sequence[int], radii: RadiiSpec) -> bool:
    s = sphere_radii(x, x_tilde)
    return s.r_add <= radii.r_add and s.r_del <= radii.r_del and s.r_change <= radii.r_change


def sphere_representatives(radii: RadiiSpec, K: int = 2) -> Tuple[DiscreteVector, DiscreteVector]:
    """Canonical pair restricted to the disagreement set.

    Layout: ``r_del`` deletions, then ``r_add`` additions, then ``r_change``
    nonzero-to-nonzero changes (1 -> 2).
    """
    if K < 2:
        raise CategoryError(f"K must be >= 2, got {K}")
    radii.check_for(K)
    x = [1] * radii.r_del + [0] * radii.r_add + [1] * radii.r_change
    xt = [0] * radii.r_del + [1] * radii.r_add + [2] * radii.r_change
    return DiscreteVector(x, K), DiscreteVector(xt, K)
