"""Shared query-outcome types, counters and filter errors."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class FilterStateError(RuntimeError):
    """Operation incompatible with the filter's sealed/unsealed state."""


class ConsistencyError(RuntimeError):
    """A member element was not recognised by the structure that stored it.

    Both filters guarantee the absence of false negatives; observing one
    means the hash family is broken or the cell vector was corrupted, so
    this is raised instead of being reported as a regular outcome.
    """


class Outcome(Enum):
    """Classification of a single verified query against ground truth."""

    TRUE_NEGATIVE = "true-negative"
    FALSE_POSITIVE = "false-positive"
    CORRECT = "correct"
    MULTI_MATCH = "multi-match"          # shifting filter: |candidates| > 1
    INTER_SET_ERROR = "inter-set-error"  # spatial filter: wrong single label


@dataclass(frozen=True)
class QueryOutcome:
    """Ground truth plus filter verdict for one element.

    ``candidates`` holds the matched labels: the full candidate set for a
    shifting filter, and a zero- or one-element tuple for a spatial filter.
    ``true_label`` is 0 for elements that belong to no stored set.
    """

    true_label: int
    candidates: tuple[int, ...]
    outcome: Outcome


@dataclass
class HashCounter:
    """Instrumentation counters for cost accounting.

    Counters only ever grow; call :meth:`reset` to zero them explicitly.
    For concurrent readers, accumulate into per-reader counters and
    :meth:`merge` them afterwards so no increment is lost.
    """

    hash_evaluations: int = 0
    cells_read: int = 0
    lookups: int = 0

    def reset(self) -> None:
        self.hash_evaluations = 0
        self.cells_read = 0
        self.lookups = 0

    def merge(self, other: "HashCounter") -> None:
        self.hash_evaluations += other.hash_evaluations
        self.cells_read += other.cells_read
        self.lookups += other.lookups


@dataclass
class OutcomeTally:
    """Aggregated outcome counts over a batch of verified queries.

    ``c`` counts correctly identified members, ``e`` members attributed to
    a wrong single set (spatial filter only), ``u`` is a histogram mapping
    candidate-set cardinality (>= 2) to the number of member queries that
    returned that many candidates (shifting filter only).  ``fp``/``tn``
    count non-member queries.
    """

    c: int = 0
    e: int = 0
    u: dict[int, int] = field(default_factory=dict)
    fp: int = 0
    tn: int = 0

    @property
    def u_total(self) -> int:
        return sum(self.u.values())

    @property
    def member_queries(self) -> int:
        return self.c + self.e + self.u_total

    @property
    def non_member_queries(self) -> int:
        return self.fp + self.tn

    def u_at(self, i: int) -> int:
        return self.u.get(i, 0)

    def u_at_least(self, i: int) -> int:
        return sum(count for card, count in self.u.items() if card >= i)

    def add(self, outcome: QueryOutcome) -> None:
        if outcome.outcome is Outcome.TRUE_NEGATIVE:
            self.tn += 1
        elif outcome.outcome is Outcome.FALSE_POSITIVE:
            self.fp += 1
        elif outcome.outcome is Outcome.CORRECT:
            self.c += 1
        elif outcome.outcome is Outcome.INTER_SET_ERROR:
            self.e += 1
        else:
            card = len(outcome.candidates)
            self.u[card] = self.u.get(card, 0) + 1

    def merge(self, other: "OutcomeTally") -> None:
        self.c += other.c
        self.e += other.e
        self.fp += other.fp
        self.tn += other.tn
        for card, count in other.u.items():
            self.u[card] = self.u.get(card, 0) + count

    @classmethod
    def from_outcomes(cls, outcomes) -> "OutcomeTally":
        tally = cls()
        for outcome in outcomes:
            tally.add(outcome)
        return tally
