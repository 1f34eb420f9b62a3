"""Shared fixtures: the two worked 16-cell textbook filters.

Both fixtures use scripted hash tables so every cell placement, offset
and query outcome is pinned down exactly (0-based cell indices).
"""

import pytest

from msetfilters.hashing import ScriptedHashFamily
from msetfilters.shifting import ShiftingFilter
from msetfilters.spatial import SpatialFilter

D1, D2, D3, D4 = b"d1", b"d2", b"d3", b"d4"
ND1, ND2 = b"nd1", b"nd2"

# (element, label) insertions shared by both worked examples:
# set 1 = {d1, d2}, set 2 = {d3}, set 3 = {d4}.
WORKED_INSERTS = [(D1, 1), (D2, 1), (D3, 2), (D4, 3)]

SHIFTING_INDEX_TABLE = {
    (1, D1): 0, (2, D1): 3,
    (1, D2): 5, (2, D2): 12,
    (1, D3): 5, (2, D3): 7,
    (1, D4): 11, (2, D4): 13,
    (1, ND1): 2, (2, ND1): 8,
    (1, ND2): 9, (2, ND2): 12,
}

SHIFTING_OFFSET_TABLE = {
    (2, D1): 2, (3, D1): 3,
    (2, D2): 3, (3, D2): 2,
    (2, D3): 3, (3, D3): 1,
    (2, D4): 1, (3, D4): 2,
    (2, ND1): 1, (3, ND1): 3,
    (2, ND2): 2, (3, ND2): 3,
}

# After the four inserts the bit vector reads 1001010010101101.
SHIFTING_EXPECTED_BITS = "1001010010101101"

SPATIAL_INDEX_TABLE = {
    (1, D1): 0, (2, D1): 9,
    (1, D2): 5, (2, D2): 12,
    (1, D3): 5, (2, D3): 7,
    (1, D4): 11, (2, D4): 12,
    (1, ND1): 2, (2, ND1): 9,
    (1, ND2): 0, (2, ND2): 12,
}

# Cell 5 is overwritten 1 -> 2 by d3 and cell 12 is overwritten 1 -> 3
# by d4; the insertion-order of the worked example is label order.
SPATIAL_EXPECTED_CELLS = [1, 0, 0, 0, 0, 2, 0, 2, 0, 1, 0, 3, 3, 0, 0, 0]


def make_worked_shifting(insert: bool = True) -> ShiftingFilter:
    family = ScriptedHashFamily(16, 2, 3, SHIFTING_INDEX_TABLE, SHIFTING_OFFSET_TABLE)
    filt = ShiftingFilter(16, 2, 3, family=family)
    if insert:
        for element, label in WORKED_INSERTS:
            filt.insert(element, label)
    return filt


def make_worked_spatial(insert: bool = True, order=None) -> SpatialFilter:
    family = ScriptedHashFamily(16, 2, 3, SPATIAL_INDEX_TABLE)
    filt = SpatialFilter(16, 2, 3, family=family)
    if insert:
        for element, label in (order or WORKED_INSERTS):
            filt.insert(element, label)
    return filt


@pytest.fixture
def worked_shifting() -> ShiftingFilter:
    filt = make_worked_shifting()
    filt.seal()
    return filt


@pytest.fixture
def worked_spatial() -> SpatialFilter:
    filt = make_worked_spatial()
    filt.seal()
    return filt
