"""Shifting Bloom filter for association queries over disjoint sets.

A single bit vector of m cells stores any number s of disjoint sets.  An
element of set 1 occupies its k index cells directly; an element of set
i > 1 occupies them displaced by a per-element offset digest.  A query
re-checks every label's displaced positions and returns the candidate set
of labels whose k cells are all set, so members are never missed but may
come back with extra candidate labels (and non-members may match
spuriously).

Cell indexing is circular: probe positions reduce mod m.  The optional
word-bounded mode limits offsets to [0, w) instead of [0, m), emulating
implementations that keep an element's displaced cells near its base
cells; it exists for the offset-range experiments and is otherwise
strictly worse.

Set disjointness is the caller's contract; the filter stores no elements
and cannot police it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .common import ConsistencyError, FilterStateError, HashCounter, Outcome, OutcomeTally, QueryOutcome
from .hashing import HashFamily, SeededHashFamily, is_power_of_two

MODE_CIRCULAR = "circular"
MODE_WORD = "word"

_CHUNK = 1 << 14


@dataclass(frozen=True)
class CandidateSet:
    """Labels a query could not rule out, in ascending order.

    Empty means "in no stored set".  For a stored element the true label
    is always present; any additional labels are ambiguity, not evidence.
    """

    labels: tuple[int, ...]

    def __iter__(self):
        return iter(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: int) -> bool:
        return label in self.labels

    def __bool__(self) -> bool:
        return bool(self.labels)

    @property
    def is_empty(self) -> bool:
        return not self.labels


class ShiftingFilter:
    """m-bit vector with per-set offset shifting.

    Single-writer while building; after :meth:`seal` the bit vector is
    immutable and any number of threads may query concurrently (give each
    reader its own HashCounter and merge, so counts are not lost).
    """

    kind = "shbf"
    cell_bits = 1

    def __init__(
        self,
        m: int,
        k: int,
        s: int,
        *,
        mode: str = MODE_CIRCULAR,
        w: int | None = None,
        seed: int = 0,
        family: HashFamily | None = None,
    ) -> None:
        if mode not in (MODE_CIRCULAR, MODE_WORD):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == MODE_WORD:
            if w is None or not 1 <= w <= m:
                raise ValueError("word-bounded mode requires 1 <= w <= m")
        elif w is not None:
            raise ValueError("w is only meaningful in word-bounded mode")
        if family is None:
            family = SeededHashFamily(m=m, k=k, s=s, seed=seed)
        elif (family.m, family.k, family.s) != (m, k, s):
            raise ValueError("hash family parameters do not match filter parameters")
        self.family = family
        self.m = m
        self.k = k
        self.s = s
        self.mode = mode
        self.w = w
        self.bits = np.zeros(m, dtype=np.uint8)
        self.sealed = False
        self.counters = HashCounter()
        self._mask = m - 1 if is_power_of_two(m) else None

    @property
    def seed(self) -> int:
        return self.family.seed

    @property
    def l_bits(self) -> int:
        return self.m

    @property
    def offset_bound(self) -> int | None:
        """Offset reduction bound passed to the family (None = full range)."""
        return self.w if self.mode == MODE_WORD else None

    def popcount(self) -> int:
        return int(self.bits.sum())

    @property
    def fill_ratio(self) -> float:
        return self.popcount() / self.m

    def seal(self) -> None:
        self.sealed = True
        self.bits.flags.writeable = False

    def _wrap(self, position: int) -> int:
        return position & self._mask if self._mask is not None else position % self.m

    def _check_label(self, label: int) -> None:
        if not 1 <= label <= self.s:
            raise ValueError(f"label {label} out of range [1, {self.s}]")

    # -- construction ---------------------------------------------------

    def insert(self, element: bytes, label: int) -> None:
        if self.sealed:
            raise FilterStateError("cannot insert into a sealed filter")
        self._check_label(label)
        offset = self.family.offset(label, element, bound=self.offset_bound)
        for j in range(1, self.k + 1):
            self.bits[self._wrap(self.family.cell_index(j, element) + offset)] = 1
        self.counters.hash_evaluations += self.k + (1 if label > 1 else 0)

    def insert_many(self, elements: Sequence[bytes], labels: Sequence[int]) -> None:
        if len(elements) != len(labels):
            raise ValueError("elements and labels differ in length")
        if self.sealed:
            raise FilterStateError("cannot insert into a sealed filter")
        family = self.family
        if not family.supports_bulk:
            for element, label in zip(elements, labels):
                self.insert(element, label)
            return
        labels_arr = np.asarray(labels, dtype=np.int64)
        if labels_arr.size == 0:
            return
        if labels_arr.min() < 1 or labels_arr.max() > self.s:
            raise ValueError("label out of range [1, s]")
        for start in range(0, len(elements), _CHUNK):
            chunk = elements[start:start + _CHUNK]
            chunk_labels = labels_arr[start:start + _CHUNK]
            keys = family.element_keys(chunk)
            base = family.index_matrix(keys)
            offsets = family.offsets_for_labels(keys, chunk_labels, bound=self.offset_bound)
            positions = base + offsets[:, None]
            positions = positions & self._mask if self._mask is not None else positions % self.m
            self.bits[positions.ravel()] = 1
            self.counters.hash_evaluations += self.k * len(chunk) + int((chunk_labels > 1).sum())

    # -- queries ----------------------------------------------------------

    def query(self, element: bytes) -> CandidateSet:
        """Candidate labels for ``element`` given current contents.

        Costs exactly k + s - 1 digests and one lookup per label; each
        label's probing stops at its first zero cell.
        """
        family = self.family
        base = [family.cell_index(j, element) for j in range(1, self.k + 1)]
        matched = []
        cells_read = 0
        for label in range(1, self.s + 1):
            offset = family.offset(label, element, bound=self.offset_bound)
            hit = True
            for index in base:
                cells_read += 1
                if not self.bits[self._wrap(index + offset)]:
                    hit = False
                    break
            if hit:
                matched.append(label)
        self.counters.hash_evaluations += self.k + self.s - 1
        self.counters.lookups += self.s
        self.counters.cells_read += cells_read
        return CandidateSet(tuple(matched))

    def classify(self, element: bytes, true_label: int) -> QueryOutcome:
        """Query and grade against ground truth (0 = not a member)."""
        if not 0 <= true_label <= self.s:
            raise ValueError(f"true label {true_label} out of range [0, {self.s}]")
        candidates = self.query(element)
        return self._grade(candidates, true_label)

    def _grade(self, candidates: CandidateSet, true_label: int) -> QueryOutcome:
        if true_label == 0:
            outcome = Outcome.TRUE_NEGATIVE if candidates.is_empty else Outcome.FALSE_POSITIVE
            return QueryOutcome(true_label, candidates.labels, outcome)
        if true_label not in candidates:
            raise ConsistencyError(
                f"member with label {true_label} missing from candidates "
                f"{candidates.labels}: hash family or bit vector is broken"
            )
        outcome = Outcome.CORRECT if len(candidates) == 1 else Outcome.MULTI_MATCH
        return QueryOutcome(true_label, candidates.labels, outcome)

    def query_many(self, elements: Sequence[bytes]) -> list[CandidateSet]:
        if not self.family.supports_bulk:
            return [self.query(element) for element in elements]
        results: list[CandidateSet] = []
        for start in range(0, len(elements), _CHUNK):
            chunk = elements[start:start + _CHUNK]
            matches = self._match_matrix(chunk)
            for row in matches:
                results.append(CandidateSet(tuple(int(v) + 1 for v in np.flatnonzero(row))))
        return results

    def classify_many(
        self, elements: Sequence[bytes], true_labels: Sequence[int]
    ) -> OutcomeTally:
        """Vectorised classification; returns aggregated counts only."""
        if len(elements) != len(true_labels):
            raise ValueError("elements and true_labels differ in length")
        tally = OutcomeTally()
        if not self.family.supports_bulk:
            for element, label in zip(elements, true_labels):
                tally.add(self.classify(element, label))
            return tally
        truth_arr = np.asarray(true_labels, dtype=np.int64)
        if truth_arr.size and (truth_arr.min() < 0 or truth_arr.max() > self.s):
            raise ValueError("true label out of range [0, s]")
        for start in range(0, len(elements), _CHUNK):
            chunk = elements[start:start + _CHUNK]
            truth = truth_arr[start:start + _CHUNK]
            counts, matched_true = self._match_counts(chunk, truth)
            members = truth > 0
            if bool((members & ~matched_true).any()):
                bad = int(np.flatnonzero(members & ~matched_true)[0])
                raise ConsistencyError(
                    f"member with label {int(truth[bad])} not matched by its own "
                    "label: hash family or bit vector is broken"
                )
            tally.tn += int(((~members) & (counts == 0)).sum())
            tally.fp += int(((~members) & (counts > 0)).sum())
            tally.c += int((members & (counts == 1)).sum())
            multi = counts[members & (counts > 1)]
            if multi.size:
                hist = np.bincount(multi)
                for card in np.flatnonzero(hist):
                    card = int(card)
                    tally.u[card] = tally.u.get(card, 0) + int(hist[card])
        return tally

    # -- vectorised probing ------------------------------------------------

    def _probe_label(self, base: np.ndarray, offsets: np.ndarray) -> np.ndarray:
        """Boolean match vector for one label; early exit at first zero."""
        n = base.shape[0]
        alive = np.arange(n)
        for j in range(self.k):
            positions = base[alive, j] + offsets[alive]
            positions = positions & self._mask if self._mask is not None else positions % self.m
            self.counters.cells_read += alive.size
            alive = alive[self.bits[positions] != 0]
            if alive.size == 0:
                break
        match = np.zeros(n, dtype=bool)
        match[alive] = True
        return match

    def _match_matrix(self, chunk: Sequence[bytes]) -> np.ndarray:
        family = self.family
        keys = family.element_keys(chunk)
        base = family.index_matrix(keys)
        matches = np.zeros((len(chunk), self.s), dtype=bool)
        for label in range(1, self.s + 1):
            offsets = family.offset_vector(keys, label, bound=self.offset_bound)
            matches[:, label - 1] = self._probe_label(base, offsets)
        self.counters.hash_evaluations += (self.k + self.s - 1) * len(chunk)
        self.counters.lookups += self.s * len(chunk)
        return matches

    def _match_counts(
        self, chunk: Sequence[bytes], truth: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        family = self.family
        keys = family.element_keys(chunk)
        base = family.index_matrix(keys)
        counts = np.zeros(len(chunk), dtype=np.int64)
        matched_true = np.zeros(len(chunk), dtype=bool)
        for label in range(1, self.s + 1):
            offsets = family.offset_vector(keys, label, bound=self.offset_bound)
            match = self._probe_label(base, offsets)
            counts += match
            matched_true |= match & (truth == label)
        self.counters.hash_evaluations += (self.k + self.s - 1) * len(chunk)
        self.counters.lookups += self.s * len(chunk)
        return counts, matched_true


def build_shifting_filter(
    entries: Iterable[tuple[bytes, int]],
    m: int,
    k: int,
    s: int,
    *,
    mode: str = MODE_CIRCULAR,
    w: int | None = None,
    seed: int = 0,
) -> ShiftingFilter:
    """Construct, bulk-insert and seal in one step."""
    filt = ShiftingFilter(m, k, s, mode=mode, w=w, seed=seed)
    entries = list(entries)
    filt.insert_many([e for e, _ in entries], [label for _, label in entries])
    filt.seal()
    return filt
