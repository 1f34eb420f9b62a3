"""Spatial Bloom filter: multi-bit cells holding set labels.

Each of the m cells stores a label in [0, s], 0 meaning untouched.  An
insert writes the element's label into its k index cells, never lowering
an existing value, so after any insertion order a cell holds the highest
label that ever hashed to it.  A query reads the k cells: any zero means
"not stored"; otherwise the smallest value read is the only label that
can satisfy "some cell equals it and no cell is below it", and is
returned as the verdict.

Because higher labels overwrite lower ones, a stored element can only be
misattributed upward: the verdict is always >= its true label and never
0.  Memory is cell_bits = ceil(log2(s+1)) bits per cell when serialised.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .common import ConsistencyError, FilterStateError, HashCounter, Outcome, OutcomeTally, QueryOutcome
from .hashing import HashFamily, SeededHashFamily

_CHUNK = 1 << 14


def cell_bits_for(s: int) -> int:
    """Bits per cell needed to store labels 0..s."""
    if s < 1:
        raise ValueError("s must be >= 1")
    return s.bit_length()


def _cell_dtype(s: int):
    for dtype in (np.uint8, np.uint16, np.uint32):
        if s <= np.iinfo(dtype).max:
            return dtype
    return np.uint64


class SpatialFilter:
    """m multi-bit cells with highest-label-wins writes.

    Same concurrency contract as the shifting filter: one writer until
    :meth:`seal`, then immutable with unrestricted concurrent readers.
    """

    kind = "sbf"

    def __init__(
        self,
        m: int,
        k: int,
        s: int,
        *,
        seed: int = 0,
        family: HashFamily | None = None,
    ) -> None:
        if family is None:
            family = SeededHashFamily(m=m, k=k, s=s, seed=seed)
        elif (family.m, family.k, family.s) != (m, k, s):
            raise ValueError("hash family parameters do not match filter parameters")
        self.family = family
        self.m = m
        self.k = k
        self.s = s
        self.cell_bits = cell_bits_for(s)
        self.cells = np.zeros(m, dtype=_cell_dtype(s))
        self.sealed = False
        self.counters = HashCounter()
        self._max_label_seen = 0
        self._in_label_order = True

    @property
    def seed(self) -> int:
        return self.family.seed

    @property
    def l_bits(self) -> int:
        return self.m * self.cell_bits

    @property
    def state(self) -> int | None:
        """Highest label reached during in-order construction.

        Meaningful only when inserts arrived in non-decreasing label
        order (the canonical construction); None otherwise.
        """
        return self._max_label_seen if self._in_label_order else None

    def nonzero_cells(self) -> int:
        return int(np.count_nonzero(self.cells))

    @property
    def fill_ratio(self) -> float:
        return self.nonzero_cells() / self.m

    def seal(self) -> None:
        self.sealed = True
        self.cells.flags.writeable = False

    def _check_label(self, label: int) -> None:
        if not 1 <= label <= self.s:
            raise ValueError(f"label {label} out of range [1, {self.s}]")

    def _note_inserted(self, label: int) -> None:
        if label < self._max_label_seen:
            self._in_label_order = False
        else:
            self._max_label_seen = label

    # -- construction -------------------------------------------------------

    def insert(self, element: bytes, label: int) -> None:
        if self.sealed:
            raise FilterStateError("cannot insert into a sealed filter")
        self._check_label(label)
        for j in range(1, self.k + 1):
            index = self.family.cell_index(j, element)
            if self.cells[index] < label:
                self.cells[index] = label
        self.counters.hash_evaluations += self.k
        self._note_inserted(label)

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
        dtype = self.cells.dtype
        for start in range(0, len(elements), _CHUNK):
            chunk = elements[start:start + _CHUNK]
            chunk_labels = labels_arr[start:start + _CHUNK]
            keys = family.element_keys(chunk)
            base = family.index_matrix(keys)
            values = np.repeat(chunk_labels.astype(dtype), self.k)
            np.maximum.at(self.cells, base.ravel(), values)
            self.counters.hash_evaluations += self.k * len(chunk)
        for label in labels_arr:
            self._note_inserted(int(label))

    # -- queries --------------------------------------------------------------

    def query(self, element: bytes) -> int:
        """Verdict label in [0, s]; 0 as soon as any probed cell is empty."""
        verdict = self.s + 1
        cells_read = 0
        for j in range(1, self.k + 1):
            value = int(self.cells[self.family.cell_index(j, element)])
            cells_read += 1
            if value == 0:
                verdict = 0
                break
            if value < verdict:
                verdict = value
        self.counters.hash_evaluations += self.k
        self.counters.lookups += 1
        self.counters.cells_read += cells_read
        return verdict

    def classify(self, element: bytes, true_label: int) -> QueryOutcome:
        if not 0 <= true_label <= self.s:
            raise ValueError(f"true label {true_label} out of range [0, {self.s}]")
        verdict = self.query(element)
        return self._grade(verdict, true_label)

    def _grade(self, verdict: int, true_label: int) -> QueryOutcome:
        candidates = (verdict,) if verdict else ()
        if true_label == 0:
            outcome = Outcome.FALSE_POSITIVE if verdict else Outcome.TRUE_NEGATIVE
            return QueryOutcome(true_label, candidates, outcome)
        if verdict < true_label or verdict == 0:
            raise ConsistencyError(
                f"verdict {verdict} below true label {true_label}: highest-label "
                "writes forbid this; hash family or cells are broken"
            )
        outcome = Outcome.CORRECT if verdict == true_label else Outcome.INTER_SET_ERROR
        return QueryOutcome(true_label, candidates, outcome)

    def query_many(self, elements: Sequence[bytes]) -> np.ndarray:
        if not self.family.supports_bulk:
            return np.array([self.query(element) for element in elements], dtype=np.int64)
        out = np.empty(len(elements), dtype=np.int64)
        for start in range(0, len(elements), _CHUNK):
            chunk = elements[start:start + _CHUNK]
            out[start:start + len(chunk)] = self._verdicts(chunk)
        return out

    def classify_many(
        self, elements: Sequence[bytes], true_labels: Sequence[int]
    ) -> OutcomeTally:
        if len(elements) != len(true_labels):
            raise ValueError("elements and true_labels differ in length")
        tally = OutcomeTally()
        if not self.family.supports_bulk:
            for element, label in zip(elements, true_labels):
                tally.add(self.classify(element, label))
            return tally
        truth = np.asarray(true_labels, dtype=np.int64)
        if truth.size and (truth.min() < 0 or truth.max() > self.s):
            raise ValueError("true label out of range [0, s]")
        verdicts = self.query_many(elements)
        members = truth > 0
        if bool((members & (verdicts < truth)).any()):
            bad = int(np.flatnonzero(members & (verdicts < truth))[0])
            raise ConsistencyError(
                f"verdict {int(verdicts[bad])} below true label {int(truth[bad])}: "
                "highest-label writes forbid this; hash family or cells are broken"
            )
        tally.tn += int(((~members) & (verdicts == 0)).sum())
        tally.fp += int(((~members) & (verdicts > 0)).sum())
        tally.c += int((members & (verdicts == truth)).sum())
        tally.e += int((members & (verdicts > truth)).sum())
        return tally

    def _verdicts(self, chunk: Sequence[bytes]) -> np.ndarray:
        family = self.family
        keys = family.element_keys(chunk)
        base = family.index_matrix(keys)
        values = self.cells[base].astype(np.int64)
        has_zero = (values == 0).any(axis=1)
        verdicts = values.min(axis=1)
        verdicts[has_zero] = 0
        # Cells read under sequential early-exit-at-zero semantics.
        first_zero = np.argmax(values == 0, axis=1)
        reads = np.where(has_zero, first_zero + 1, self.k)
        self.counters.hash_evaluations += self.k * len(chunk)
        self.counters.lookups += len(chunk)
        self.counters.cells_read += int(reads.sum())
        return verdicts


def build_spatial_filter(
    entries: Iterable[tuple[bytes, int]],
    m: int,
    k: int,
    s: int,
    *,
    seed: int = 0,
) -> SpatialFilter:
    """Construct, bulk-insert and seal in one step."""
    filt = SpatialFilter(m, k, s, seed=seed)
    entries = list(entries)
    filt.insert_many([e for e, _ in entries], [label for _, label in entries])
    filt.seal()
    return filt
