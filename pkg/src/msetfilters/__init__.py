"""Multi-set membership filters with exact error analytics.

Two structures answer "which stored set does this element belong to?"
from a single compact vector: the shifting Bloom filter (binary cells,
per-set probe offsets) and the spatial Bloom filter (multi-bit cells
holding set labels).  Closed-form evaluators for their false-positive
and misattribution probabilities live in :mod:`msetfilters.analytics`,
seeded corpora in :mod:`msetfilters.workload`, binary serialisation in
:mod:`msetfilters.codec` and the reproducible comparison harness in
:mod:`msetfilters.experiments`.
"""

from .common import (
    ConsistencyError,
    FilterStateError,
    HashCounter,
    Outcome,
    OutcomeTally,
    QueryOutcome,
)
from .hashing import (
    HashFamilyConfig,
    ScriptedHashFamily,
    ScriptedTableError,
    SeededHashFamily,
)
from .shifting import CandidateSet, ShiftingFilter, build_shifting_filter
from .spatial import SpatialFilter, build_spatial_filter

__version__ = "0.1.0"

__all__ = [
    "CandidateSet",
    "ConsistencyError",
    "FilterStateError",
    "HashCounter",
    "HashFamilyConfig",
    "Outcome",
    "OutcomeTally",
    "QueryOutcome",
    "ScriptedHashFamily",
    "ScriptedTableError",
    "SeededHashFamily",
    "ShiftingFilter",
    "SpatialFilter",
    "build_shifting_filter",
    "build_spatial_filter",
    "__version__",
]
