"""Seeded hash families shared by both filter types.

Each family produces two kinds of digests for an element:

* k *index* digests, addressing cells in ``[0, m)`` (ordinals ``1..k``);
* up to s-1 *offset* digests used by the shifting filter to displace the
  index positions of sets ``2..s``.  Set 1 always has offset 0.

Offset digests live in an ordinal namespace disjoint from the index
digests (ordinals ``k+1 .. k+s-1``), so the two function families never
coincide.

The seeded construction hashes the element once with keyed BLAKE2b into a
64-bit base key, then derives the per-ordinal digest with a splitmix64
step.  This keeps per-ordinal cost to a few integer operations while
retaining full-avalanche behaviour, and is deterministic across processes
and platforms.  Digest values are implementation-defined: nothing outside
golden files generated by this code should assume specific outputs.

All cell indices are 0-based.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

_MASK64 = (1 << 64) - 1
_PHI64 = 0x9E3779B97F4A7C15
_MIX_C1 = 0xBF58476D1CE4E5B9
_MIX_C2 = 0x94D049BB133111EB

DIGEST_ALGORITHM_ID = 1  # bump when the digest construction changes


class ScriptedTableError(LookupError):
    """A scripted hash family was queried for a pair it has no entry for."""


def mix64(z: int) -> int:
    """Splitmix64 finalizer: full-avalanche 64-bit mix."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_C1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_C2) & _MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_C1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_C2)
    return z ^ (z >> np.uint64(31))


def is_power_of_two(value: int) -> bool:
    return value > 0 and (value & (value - 1)) == 0


@dataclass(frozen=True)
class HashFamilyConfig:
    """Parameters shared by every digest the family produces.

    Two families with equal configs generate identical digest sequences
    for identical inputs.
    """

    seed: int
    k: int
    s: int
    m: int

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if not is_power_of_two(self.m):
            # Modulo reduction of a 64-bit digest is exactly uniform only
            # for power-of-two codomains; for other m the bias is ~m/2^64.
            warnings.warn(
                f"m={self.m} is not a power of two; modulo reduction of "
                "digests carries a small bias",
                UserWarning,
                stacklevel=3,
            )


class HashFamily:
    """Common interface: seeded and scripted families are interchangeable."""

    config: HashFamilyConfig
    supports_bulk = False

    @property
    def m(self) -> int:
        return self.config.m

    @property
    def k(self) -> int:
        return self.config.k

    @property
    def s(self) -> int:
        return self.config.s

    @property
    def seed(self) -> int:
        return self.config.seed

    def cell_index(self, j: int, element: bytes) -> int:
        """Index digest ``j`` (1-based ordinal in [1, k]) reduced to [0, m)."""
        raise NotImplementedError

    def offset(self, label: int, element: bytes, bound: int | None = None) -> int:
        """Displacement for ``label`` in [1, s]; 0 for label 1.

        ``bound`` limits the offset to [0, bound); ``None`` means the full
        cell range [0, m).
        """
        if not 1 <= label <= self.s:
            raise ValueError(f"label {label} out of range [1, {self.s}]")
        if label == 1:
            return 0
        return self._offset_digest(label, element) % (self.m if bound is None else bound)

    def _check_ordinal(self, j: int) -> None:
        if not 1 <= j <= self.k:
            raise ValueError(f"index-hash ordinal {j} out of range [1, {self.k}]")

    def _offset_digest(self, label: int, element: bytes) -> int:
        raise NotImplementedError


class SeededHashFamily(HashFamily):
    """Deterministic digests from (seed, ordinal, element)."""

    supports_bulk = True

    def __init__(self, m: int, k: int, s: int, seed: int) -> None:
        self.config = HashFamilyConfig(seed=seed, k=k, s=s, m=m)
        self._key = seed.to_bytes(8, "little")
        self._power_of_two = is_power_of_two(m)

    def element_key(self, element: bytes) -> int:
        digest = hashlib.blake2b(element, digest_size=8, key=self._key).digest()
        return int.from_bytes(digest, "little")

    def digest(self, ordinal: int, element: bytes) -> int:
        """Raw 64-bit digest for a global ordinal (index or offset space)."""
        return mix64(self.element_key(element) + ((ordinal * _PHI64) & _MASK64))

    def cell_index(self, j: int, element: bytes) -> int:
        self._check_ordinal(j)
        if not element:
            raise ValueError("element must be a non-empty byte string")
        return self.digest(j, element) % self.m

    def _offset_digest(self, label: int, element: bytes) -> int:
        # Offset hash for label i is ordinal k + (i - 1), i.e. the
        # (i-1)-th member of the offset family.
        return self.digest(self.k + label - 1, element)

    # Bulk paths.  These reproduce the scalar arithmetic exactly; the
    # filters use them to batch inserts and queries.

    def element_keys(self, elements: Sequence[bytes]) -> np.ndarray:
        key = self._key
        out = np.empty(len(elements), dtype=np.uint64)
        blake2b = hashlib.blake2b
        for i, element in enumerate(elements):
            out[i] = int.from_bytes(
                blake2b(element, digest_size=8, key=key).digest(), "little"
            )
        return out

    def digests_for_ordinal(self, keys: np.ndarray, ordinal: int) -> np.ndarray:
        inc = np.uint64((ordinal * _PHI64) & _MASK64)
        return _mix64_array(keys + inc)

    def index_matrix(self, keys: np.ndarray) -> np.ndarray:
        """Cell indices for ordinals 1..k, shape (len(keys), k)."""
        out = np.empty((keys.shape[0], self.k), dtype=np.int64)
        for j in range(1, self.k + 1):
            out[:, j - 1] = self._reduce(self.digests_for_ordinal(keys, j), self.m)
        return out

    def offset_vector(self, keys: np.ndarray, label: int, bound: int | None = None) -> np.ndarray:
        """Offsets of one label for many elements; zeros for label 1."""
        if label == 1:
            return np.zeros(keys.shape[0], dtype=np.int64)
        digests = self.digests_for_ordinal(keys, self.k + label - 1)
        return self._reduce(digests, self.m if bound is None else bound)

    def offsets_for_labels(
        self, keys: np.ndarray, labels: np.ndarray, bound: int | None = None
    ) -> np.ndarray:
        """Per-element offsets when each element carries its own label."""
        ordinals = (labels.astype(np.uint64) + np.uint64(self.k - 1)) * np.uint64(_PHI64)
        offsets = self._reduce(_mix64_array(keys + ordinals), self.m if bound is None else bound)
        offsets[labels == 1] = 0
        return offsets

    def _reduce(self, digests: np.ndarray, modulus: int) -> np.ndarray:
        if is_power_of_two(modulus):
            return (digests & np.uint64(modulus - 1)).astype(np.int64)
        return (digests % np.uint64(modulus)).astype(np.int64)


class ScriptedHashFamily(HashFamily):
    """Table-driven digests for constructing exact textbook fixtures.

    ``index_table`` maps ``(ordinal, element) -> cell index`` and
    ``offset_table`` maps ``(label, element) -> offset digest`` for labels
    >= 2.  Every queried pair must be present: a miss raises
    :class:`ScriptedTableError` rather than falling back to anything.
    """

    def __init__(
        self,
        m: int,
        k: int,
        s: int,
        index_table: Mapping[tuple[int, bytes], int],
        offset_table: Mapping[tuple[int, bytes], int] | None = None,
        seed: int = 0,
    ) -> None:
        self.config = HashFamilyConfig(seed=seed, k=k, s=s, m=m)
        for (j, element), cell in index_table.items():
            if not 1 <= j <= k:
                raise ValueError(f"scripted index ordinal {j} out of range")
            if not 0 <= cell < m:
                raise ValueError(f"scripted cell {cell} out of range for element {element!r}")
        self._index_table = dict(index_table)
        self._offset_table = dict(offset_table or {})
        for (label, element), _ in self._offset_table.items():
            if not 2 <= label <= s:
                raise ValueError(f"scripted offset label {label} out of range")

    def cell_index(self, j: int, element: bytes) -> int:
        self._check_ordinal(j)
        try:
            return self._index_table[(j, element)]
        except KeyError:
            raise ScriptedTableError(
                f"no scripted index entry for ordinal {j}, element {element!r}"
            ) from None

    def _offset_digest(self, label: int, element: bytes) -> int:
        try:
            return self._offset_table[(label, element)]
        except KeyError:
            raise ScriptedTableError(
                f"no scripted offset entry for label {label}, element {element!r}"
            ) from None
