"""Closed-form error probabilities, the entropy metric and the cost model.

These are the reference predictions against which empirical filter runs
are judged.  All probability kernels are evaluated in the log domain
(``exp(kn * log1p(-1/m))``) so that large, lightly loaded filters
(say m = 2^23, kn ~ 6.5e5) lose no precision to naive repeated
multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .common import OutcomeTally

__all__ = [
    "FilterParams",
    "CostModel",
    "bf_fpp",
    "shbf_fpp_specific",
    "shbf_fpp_overall",
    "shbf_isep",
    "shbf_isep_cardinality",
    "sbf_fpp_specific",
    "sbf_isep_specific",
    "sbf_isep_overall",
    "entropy",
    "cost_model",
]


@dataclass(frozen=True)
class FilterParams:
    """Bundle of the parameters the probability formulas consume.

    ``counts`` are the per-set sizes (n_1..n_s), required by the spatial
    filter formulas where insertion order matters; their sum must equal n.
    """

    m: int
    k: int
    s: int
    n: int
    counts: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.m < 1 or self.k < 1 or self.s < 1:
            raise ValueError("m, k and s must be >= 1")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.counts is not None:
            if len(self.counts) != self.s:
                raise ValueError("counts must have one entry per set")
            if any(c < 0 for c in self.counts):
                raise ValueError("counts must be non-negative")
            if sum(self.counts) != self.n:
                raise ValueError("counts must sum to n")

    def fill(self, i: int) -> int:
        """Elements inserted after set i completes: sum of n_j for j > i."""
        if self.counts is None:
            raise ValueError("fill requires per-set counts")
        if not 1 <= i <= self.s:
            raise ValueError(f"set index {i} out of range [1, {self.s}]")
        return sum(self.counts[i:])


def _check_domain(m: int, k: int, n: int) -> None:
    if m < 1:
        raise ValueError("m must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")


def bf_fpp(m: int, k: int, n: int) -> float:
    """Classic false-positive kernel (1 - (1 - 1/m)^(k n))^k."""
    _check_domain(m, k, n)
    if n == 0:
        return 0.0
    log_miss = k * n * math.log1p(-1.0 / m)
    return (-math.expm1(log_miss)) ** k


def shbf_fpp_specific(m: int, k: int, n: int) -> float:
    """Probability one particular label matches a non-member.

    Each label check is an independent-looking Bloom lookup over the same
    vector, so this coincides with the classic kernel.
    """
    return bf_fpp(m, k, n)


def _at_least_one_of(p: float, trials: int) -> float:
    """1 - (1 - p)^trials, stable for tiny p; saturates when p rounds to 1."""
    if trials == 0:
        return 0.0
    if p >= 1.0:
        return 1.0
    return -math.expm1(trials * math.log1p(-p))


def shbf_fpp_overall(m: int, k: int, n: int, s: int) -> float:
    """Probability a non-member matches at least one of the s labels."""
    if s < 1:
        raise ValueError("s must be >= 1")
    return _at_least_one_of(shbf_fpp_specific(m, k, n), s)


def shbf_isep(m: int, k: int, n: int, s: int) -> float:
    """Probability a member picks up at least one extra label.

    The member's own label always matches; any of the other s-1 label
    checks may spuriously succeed.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    return _at_least_one_of(shbf_fpp_specific(m, k, n), s - 1)


def shbf_isep_cardinality(m: int, k: int, n: int, s: int, i: int) -> float:
    """Probability a member query returns exactly i candidate labels.

    Binomial pmf: i - 1 spurious matches among the s - 1 foreign labels.
    Sums to 1 over i in [1, s].
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if not 1 <= i <= s:
        raise ValueError(f"cardinality {i} out of range [1, {s}]")
    p = shbf_fpp_specific(m, k, n)
    return math.comb(s - 1, i - 1) * p ** (i - 1) * (1.0 - p) ** (s - i)


def _tail(counts: Sequence[int], i: int) -> int:
    """Sum of counts from set i (1-based) onwards."""
    return sum(counts[i - 1:])


def sbf_fpp_specific(m: int, k: int, counts: Sequence[int], i: int) -> float:
    """Probability a non-member is attributed specifically to set i.

    Defined recursively as the tail kernel minus the probabilities of all
    higher sets; that telescopes to a difference of two adjacent tail
    kernels, which is what is evaluated here (the recursion is
    equivalent, just O(s^2)).
    """
    s = len(counts)
    if s < 1:
        raise ValueError("counts must be non-empty")
    if not 1 <= i <= s:
        raise ValueError(f"set index {i} out of range [1, {s}]")
    _check_domain(m, k, 0)
    return bf_fpp(m, k, _tail(counts, i)) - (
        bf_fpp(m, k, _tail(counts, i + 1)) if i < s else 0.0
    )


def sbf_isep_specific(m: int, k: int, counts: Sequence[int], i: int) -> float:
    """Probability a member of set i is overwritten into a higher set.

    Only the elements inserted after set i completes can overwrite its
    cells, so this is the kernel evaluated at that remaining fill.
    """
    s = len(counts)
    if not 1 <= i <= s:
        raise ValueError(f"set index {i} out of range [1, {s}]")
    fill = sum(counts[i:])
    return bf_fpp(m, k, fill)


def sbf_isep_overall(m: int, k: int, counts: Sequence[int]) -> float:
    """Set-size-weighted mean of the per-set misattribution probabilities."""
    n = sum(counts)
    if n == 0:
        return 0.0
    total = sum(
        counts[i - 1] * sbf_isep_specific(m, k, counts, i)
        for i in range(1, len(counts) + 1)
    )
    return total / n


def entropy(tally: OutcomeTally) -> float:
    """Average information of member-query results.

    A correct single-label answer scores 1, a wrong single label 0, and a
    u-way ambiguous answer 1/u; averaged over all member queries.
    """
    member = tally.member_queries
    if member == 0:
        raise ValueError("entropy requires at least one member query")
    information = float(tally.c) + sum(count / card for card, count in tally.u.items())
    return information / member


@dataclass(frozen=True)
class CostModel:
    """Per-query cost of one filter kind at parameters (k, s)."""

    lookups_per_query: int
    hashes_per_query: int
    cells_read_min: int
    cells_read_max: int


def cost_model(kind: str, k: int, s: int) -> CostModel:
    """Lookup, digest and cell-read costs of a single query.

    The shifting filter re-checks every label (s lookups, k + s - 1
    digests, s..s*k cells); the spatial filter answers from one lookup
    (k digests, 1..k cells) regardless of s.
    """
    if k < 1 or s < 1:
        raise ValueError("k and s must be >= 1")
    if kind == "shbf":
        return CostModel(s, k + s - 1, s, s * k)
    if kind == "sbf":
        return CostModel(1, k, 1, k)
    raise ValueError(f"unknown filter kind {kind!r}")
