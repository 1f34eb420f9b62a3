"""Seeded generation of labelled test corpora and non-member probe sets.

Elements are 16-byte strings drawn from a seeded Mersenne Twister, so any
corpus is reproducible from (shape parameters, seed) alone.  Collisions
at 16 bytes are vanishingly unlikely but uniqueness is still enforced.

Datasets round-trip through a line-oriented text format::

    <hex element> TAB <label>      (labelled entries)
    <hex element>                  (non-member probe lists)
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

ELEMENT_BYTES = 16


@dataclass(frozen=True)
class Dataset:
    """Labelled corpus: globally unique elements, labels in [1, s]."""

    entries: tuple[tuple[bytes, int], ...]
    s: int
    seed: int | None = None

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def per_set_counts(self) -> tuple[int, ...]:
        counts = [0] * self.s
        for _, label in self.entries:
            counts[label - 1] += 1
        return tuple(counts)

    def elements(self) -> list[bytes]:
        return [element for element, _ in self.entries]

    def labels(self) -> list[int]:
        return [label for _, label in self.entries]

    def element_set(self) -> set[bytes]:
        return {element for element, _ in self.entries}


@dataclass(frozen=True)
class NonElementSet:
    """Probe elements guaranteed disjoint from a paired dataset."""

    elements: tuple[bytes, ...]
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.elements)


def _unique_elements(rng: random.Random, count: int, taken: set[bytes]) -> list[bytes]:
    out: list[bytes] = []
    while len(out) < count:
        element = rng.randbytes(ELEMENT_BYTES)
        if element in taken:
            continue
        taken.add(element)
        out.append(element)
    return out


def gen_uniform(s: int, per_set: int, seed: int) -> Dataset:
    """s sets of exactly per_set elements each."""
    if s < 1 or per_set < 1:
        raise ValueError("s and per_set must be >= 1")
    rng = random.Random(seed)
    elements = _unique_elements(rng, s * per_set, set())
    entries = tuple(
        (element, 1 + i // per_set) for i, element in enumerate(elements)
    )
    return Dataset(entries=entries, s=s, seed=seed)


def gen_random(s: int, total: int, seed: int) -> Dataset:
    """total elements with independently uniform labels, no set left empty.

    Degenerate draws that leave a label unused are resampled wholesale, so
    the result is still a pure function of (s, total, seed).
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if total < s:
        raise ValueError("total must be >= s so every set can be non-empty")
    rng = random.Random(seed)
    elements = _unique_elements(rng, total, set())
    while True:
        labels = [rng.randint(1, s) for _ in range(total)]
        if len(set(labels)) == s:
            break
    entries = tuple(zip(elements, labels))
    return Dataset(entries=entries, s=s, seed=seed)


def gen_non_elements(count: int, seed: int, exclude: Dataset | None = None) -> NonElementSet:
    """count unique probes, rejection-sampled against exclude's elements."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(seed)
    taken = exclude.element_set() if exclude is not None else set()
    elements = _unique_elements(rng, count, taken)
    return NonElementSet(elements=tuple(elements), seed=seed)


def write_dataset(path: str | Path, dataset: Dataset) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for element, label in dataset.entries:
            fh.write(f"{element.hex()}\t{label}\n")


def read_dataset(path: str | Path) -> Dataset:
    """Parse labelled lines; s is taken as the highest label present."""
    entries: list[tuple[bytes, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected '<hex>\\t<label>'")
            try:
                element = bytes.fromhex(parts[0])
                label = int(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if label < 1:
                raise ValueError(f"{path}:{lineno}: label must be >= 1")
            entries.append((element, label))
    s = max((label for _, label in entries), default=0)
    return Dataset(entries=tuple(entries), s=s)


def write_elements(path: str | Path, elements: Iterable[bytes]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for element in elements:
            fh.write(f"{element.hex()}\n")


def read_elements(path: str | Path) -> list[bytes]:
    """Parse one hex element per line; a trailing tab-separated label is ignored."""
    elements: list[bytes] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            field = line.split("\t")[0]
            try:
                elements.append(bytes.fromhex(field))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return elements
