"""Class-probability bounds from Monte-Carlo vote counts."""

from __future__ import annotations

from typing import Optional

from .core import BINARY_CLASS, MULTI_CLASS, ClassBounds, EmptyVotes, RangeError, VoteRecord, as_rational
from .exactmath import clopper_pearson_lower, clopper_pearson_upper


def _check(votes: VoteRecord):
    if votes.num_samples == 0:
        raise EmptyVotes(f"no votes recorded for {votes.input_id!r}")


def binary_bounds(votes: VoteRecord, alpha) -> ClassBounds:
    _check(votes)
    top = votes.top_class()
    return _binary(votes, top, alpha)


def _binary(votes: VoteRecord, top: int, alpha) -> ClassBounds:
    alpha = as_rational(alpha)
    count = votes.counts[top] if top < len(votes.counts) else 0
    p_lower = clopper_pearson_lower(count, votes.num_samples, alpha)
    return ClassBounds(top, p_lower, 1 - p_lower, alpha, BINARY_CLASS)


def _multi(votes: VoteRecord, top: int, alpha, num_classes: Optional[int]) -> ClassBounds:
    alpha = as_rational(alpha)
    C = votes.num_classes if num_classes is None else num_classes
    observed = max((c for c, k in enumerate(votes.counts) if k > 0), default=-1) + 1
    if C < max(observed, 2):
        raise RangeError(f"num_classes={C} is smaller than the classes observed in the votes")
    level = alpha / C
    n = votes.num_samples
    counts = list(votes.counts) + [0] * (C - len(votes.counts))
    p_lower = clopper_pearson_lower(counts[top], n, level)
    runner_count = max(k for c, k in enumerate(counts) if c != top)
    p_runner = clopper_pearson_upper(runner_count, n, level)
    return ClassBounds(top, p_lower, p_runner, alpha, MULTI_CLASS)


def multiclass_bounds(votes: VoteRecord, alpha, num_classes: Optional[int] = None) -> ClassBounds:
    """Bonferroni-corrected bounds: every class is bounded at level ``alpha / C``.

    ``C`` is the declared number of classes (defaults to the length of the count
    vector), not the number of classes that happened to receive votes. The
    runner-up bound is the largest upper bound among the other classes; since
    the upper bound grows with the count it is attained at the runner-up count.
    """
    _check(votes)
    return _multi(votes, votes.top_class(), alpha, num_classes)


def two_stage_estimate(selection_votes: VoteRecord, estimation_votes: VoteRecord, alpha,
                       mode: str = BINARY_CLASS, num_classes: Optional[int] = None) -> ClassBounds:
    """Pick the top class on the selection votes, bound it on the estimation votes."""
    _check(selection_votes)
    _check(estimation_votes)
    top = selection_votes.top_class()
    if mode == BINARY_CLASS:
        return _binary(estimation_votes, top, alpha)
    if mode == MULTI_CLASS:
        return _multi(estimation_votes, top, alpha, num_classes)
    raise ValueError(f"unknown mode {mode!r}")


bounds_for = two_stage_estimate
