"""Seeded comparative experiments producing per-run reports and CSV.

Every run is reproducible bit-for-bit from (experiment name, seed,
config): datasets come from the seeded workload generators and filters
from seeded hash families.  Analytic prediction columns are recomputed
from :mod:`msetfilters.analytics` inside each run, never copied in.

Empirical counts that drift beyond tolerance are flagged on the report
(``flags``), not silently accepted.  Tolerances follow the counting
statistics: exact equality for deterministic quantities (cost counters),
three binomial sigma for rates whose expected count is at least 25, and a
central 99% Poisson band below that.

One modelling note: the candidate-set tolerance bands for the shifting
filter include the offset-collision floor.  Two labels whose offset
digests coincide for an element (probability 1/w bounded, 1/m circular)
match together, which dominates the pure false-positive term on large,
lightly loaded filters.  The ``isep_ana`` column stays the pure
closed-form value; only the acceptance band is collision-adjusted.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import analytics
from .common import OutcomeTally
from .shifting import MODE_CIRCULAR, MODE_WORD, ShiftingFilter
from .spatial import SpatialFilter
from .workload import Dataset, NonElementSet

CSV_COLUMNS = [
    "experiment", "filter", "m", "l_bits", "k", "s", "n", "w", "seed",
    "queries", "c", "e", "u2", "u3", "u4", "u5plus", "fp", "tn",
    "fpp_emp", "fpp_ana", "isep_emp", "isep_ana", "entropy",
    "hashes_per_query", "cells_read_total", "ms",
]

DEFAULT_WORD_SIZES: tuple[int | None, ...] = (
    2**10, 2**12, 2**14, 2**16, 2**18, None,
)
DEFAULT_SWEEP_M = tuple(2**x for x in range(17, 25))


@dataclass
class ExperimentReport:
    """One filter configuration's measured and predicted behaviour."""

    experiment: str
    filter_kind: str
    m: int
    l_bits: int
    k: int
    s: int
    n: int
    w: int | None = None
    seed: int | None = None
    queries: int = 0
    tally: OutcomeTally | None = None
    fpp_ana: float | None = None
    isep_ana: float | None = None
    entropy_value: float | None = None
    hashes_per_query: float | None = None
    cells_read_total: int | None = None
    ms: float | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def fpp_emp(self) -> float | None:
        if self.tally is None or self.tally.non_member_queries == 0:
            return None
        return self.tally.fp / self.tally.non_member_queries

    @property
    def isep_emp(self) -> float | None:
        if self.tally is None or self.tally.member_queries == 0:
            return None
        return (self.tally.e + self.tally.u_total) / self.tally.member_queries

    @property
    def interset_count(self) -> int:
        return 0 if self.tally is None else self.tally.e + self.tally.u_total


# -- tolerance machinery ----------------------------------------------------

def poisson_interval(lam: float, coverage: float = 0.99) -> tuple[int, int]:
    """Central Poisson interval [lo, hi] holding at least ``coverage`` mass."""
    if lam <= 0:
        return (0, 0)
    alpha = (1.0 - coverage) / 2.0
    lo = hi = None
    pmf = math.exp(-lam)
    cdf = pmf
    x = 0
    limit = int(lam + 20 * math.sqrt(lam) + 50)
    while x <= limit:
        if lo is None and cdf >= alpha:
            lo = x
        if cdf >= 1.0 - alpha:
            hi = x
            break
        x += 1
        pmf *= lam / x
        cdf += pmf
    return (lo if lo is not None else 0, hi if hi is not None else limit)


def count_within_tolerance(observed: int, expected: float, n_queries: int) -> bool:
    """Statistical acceptance band around an expected event count."""
    if n_queries <= 0:
        return observed == 0
    if expected >= 25:
        p = expected / n_queries
        sigma = math.sqrt(n_queries * p * (1.0 - p))
        return abs(observed - expected) <= 3.0 * sigma
    lo, hi = poisson_interval(expected)
    return lo <= observed <= hi


def shbf_interset_rate_with_collisions(
    m: int, k: int, n: int, s: int, offset_space: int
) -> float:
    """Expected multi-match rate including the offset-collision floor.

    A foreign label matches a member either by a genuine false positive
    or because its offset digest equals the member's own offset
    (probability 1/offset_space), in which case it probes the member's
    own cells.  Used for tolerance bands only.
    """
    p = analytics.shbf_fpp_specific(m, k, n)
    q = 1.0 / offset_space + (1.0 - 1.0 / offset_space) * p
    return -math.expm1((s - 1) * math.log1p(-q))


# -- experiment runners -------------------------------------------------------

def _build_shifting(dataset: Dataset, m: int, k: int, s: int, seed: int,
                    w: int | None = None) -> ShiftingFilter:
    filt = ShiftingFilter(
        m, k, s,
        mode=MODE_WORD if w is not None else MODE_CIRCULAR,
        w=w, seed=seed,
    )
    filt.insert_many(dataset.elements(), dataset.labels())
    filt.seal()
    filt.counters.reset()
    return filt


def _build_spatial(dataset: Dataset, m: int, k: int, s: int, seed: int) -> SpatialFilter:
    filt = SpatialFilter(m, k, s, seed=seed)
    filt.insert_many(dataset.elements(), dataset.labels())
    filt.seal()
    filt.counters.reset()
    return filt


def run_interset_experiment(
    dataset: Dataset,
    k: int,
    seed: int,
    configs: Sequence[tuple[str, int]] = (("sbf", 2**20), ("shbf", 2**20), ("shbf", 2**23)),
    experiment: str = "interset",
) -> list[ExperimentReport]:
    """Classify every member element; tally correct/wrong/ambiguous results."""
    reports = []
    s = dataset.s
    n = dataset.n
    counts = dataset.per_set_counts
    for kind, m in configs:
        t0 = time.perf_counter()
        if kind == "shbf":
            filt: ShiftingFilter | SpatialFilter = _build_shifting(dataset, m, k, s, seed)
            isep_ana = analytics.shbf_isep(m, k, n, s)
            band_rate = shbf_interset_rate_with_collisions(m, k, n, s, m)
        elif kind == "sbf":
            filt = _build_spatial(dataset, m, k, s, seed)
            isep_ana = analytics.sbf_isep_overall(m, k, counts)
            band_rate = isep_ana
        else:
            raise ValueError(f"unknown filter kind {kind!r}")
        tally = filt.classify_many(dataset.elements(), dataset.labels())
        elapsed = (time.perf_counter() - t0) * 1000.0
        report = ExperimentReport(
            experiment=experiment, filter_kind=kind, m=m, l_bits=filt.l_bits,
            k=k, s=s, n=n, seed=seed, queries=n, tally=tally,
            isep_ana=isep_ana,
            entropy_value=analytics.entropy(tally),
            hashes_per_query=filt.counters.hash_evaluations / n,
            cells_read_total=filt.counters.cells_read,
            ms=elapsed,
        )
        if not count_within_tolerance(report.interset_count, band_rate * n, n):
            report.flags.append(
                f"interset count {report.interset_count} outside tolerance of "
                f"expected {band_rate * n:.4g}"
            )
        reports.append(report)
    return reports


def run_word_size_sweep(
    dataset: Dataset,
    k: int,
    seed: int,
    m: int = 2**23,
    word_sizes: Sequence[int | None] = DEFAULT_WORD_SIZES,
    experiment: str = "word-sweep",
) -> list[ExperimentReport]:
    """Member classification under offset bounds; None means unbounded."""
    reports = []
    s = dataset.s
    n = dataset.n
    for w in word_sizes:
        if w is not None and w > m:
            raise ValueError(f"word size {w} exceeds cell count {m}")
        t0 = time.perf_counter()
        filt = _build_shifting(dataset, m, k, s, seed, w=w)
        tally = filt.classify_many(dataset.elements(), dataset.labels())
        elapsed = (time.perf_counter() - t0) * 1000.0
        band_rate = shbf_interset_rate_with_collisions(m, k, n, s, w if w else m)
        report = ExperimentReport(
            experiment=experiment, filter_kind="shbf", m=m, l_bits=filt.l_bits,
            k=k, s=s, n=n, w=w, seed=seed, queries=n, tally=tally,
            isep_ana=analytics.shbf_isep(m, k, n, s),
            entropy_value=analytics.entropy(tally),
            hashes_per_query=filt.counters.hash_evaluations / n,
            cells_read_total=filt.counters.cells_read,
            ms=elapsed,
        )
        if not count_within_tolerance(report.interset_count, band_rate * n, n):
            report.flags.append(
                f"multi-match count {report.interset_count} outside tolerance of "
                f"expected {band_rate * n:.4g} at w={w}"
            )
        reports.append(report)
    return reports


def run_fpp_sweep(
    dataset: Dataset,
    non_elements: NonElementSet,
    k: int,
    seed: int,
    kinds: Sequence[str] = ("shbf", "sbf"),
    m_values: Sequence[int] = DEFAULT_SWEEP_M,
    experiment: str = "fpp-sweep",
) -> list[ExperimentReport]:
    """Empirical false-positive rate over a non-member corpus per (kind, m)."""
    reports = []
    s = dataset.s
    n = dataset.n
    probes = list(non_elements.elements)
    zeros = [0] * len(probes)
    for kind in kinds:
        for m in m_values:
            t0 = time.perf_counter()
            if kind == "shbf":
                filt: ShiftingFilter | SpatialFilter = _build_shifting(dataset, m, k, s, seed)
                fpp_ana = analytics.shbf_fpp_overall(m, k, n, s)
            elif kind == "sbf":
                filt = _build_spatial(dataset, m, k, s, seed)
                fpp_ana = analytics.bf_fpp(m, k, n)
            else:
                raise ValueError(f"unknown filter kind {kind!r}")
            tally = filt.classify_many(probes, zeros)
            elapsed = (time.perf_counter() - t0) * 1000.0
            report = ExperimentReport(
                experiment=experiment, filter_kind=kind, m=m, l_bits=filt.l_bits,
                k=k, s=s, n=n, seed=seed, queries=len(probes), tally=tally,
                fpp_ana=fpp_ana,
                hashes_per_query=filt.counters.hash_evaluations / len(probes),
                cells_read_total=filt.counters.cells_read,
                ms=elapsed,
            )
            if not count_within_tolerance(tally.fp, fpp_ana * len(probes), len(probes)):
                report.flags.append(
                    f"false-positive count {tally.fp} outside tolerance of "
                    f"expected {fpp_ana * len(probes):.4g}"
                )
            reports.append(report)
    return reports


def run_fpp_curves(
    k: int,
    n: int,
    m_values: Sequence[int] = (2**20, 2**23),
    s_values: Sequence[int] | None = None,
    experiment: str = "fpp-curves",
) -> list[ExperimentReport]:
    """Purely analytic false-positive curves as the set count grows."""
    if s_values is None:
        s_values = tuple(range(1, 256))
    reports = []
    for m in m_values:
        for s in s_values:
            reports.append(ExperimentReport(
                experiment=experiment, filter_kind="shbf", m=m, l_bits=m,
                k=k, s=s, n=n,
                fpp_ana=analytics.shbf_fpp_overall(m, k, n, s),
            ))
            sbf_bits = m * max(1, s.bit_length())
            reports.append(ExperimentReport(
                experiment=experiment, filter_kind="sbf", m=m, l_bits=sbf_bits,
                k=k, s=s, n=n,
                fpp_ana=analytics.bf_fpp(m, k, n),
            ))
    return reports


def run_cost_experiment(
    k_s_grid: Sequence[tuple[int, int]] = ((2, 1), (2, 16), (10, 64), (10, 255)),
    queries: int = 256,
    seed: int = 1,
    m: int = 2**14,
    n: int = 256,
    experiment: str = "cost",
) -> list[ExperimentReport]:
    """Measure per-query counters and compare with the cost model exactly."""
    from .workload import gen_non_elements, gen_uniform

    reports = []
    for k, s in k_s_grid:
        per_set = max(1, n // s)
        dataset = gen_uniform(s, per_set, seed)
        probes = list(gen_non_elements(queries, seed + 1, dataset).elements)
        for kind in ("shbf", "sbf"):
            model = analytics.cost_model(kind, k, s)
            t0 = time.perf_counter()
            if kind == "shbf":
                filt: ShiftingFilter | SpatialFilter = _build_shifting(dataset, m, k, s, seed)
            else:
                filt = _build_spatial(dataset, m, k, s, seed)
            filt.query_many(probes)
            elapsed = (time.perf_counter() - t0) * 1000.0
            hashes_per_query = filt.counters.hash_evaluations / queries
            report = ExperimentReport(
                experiment=experiment, filter_kind=kind, m=m, l_bits=filt.l_bits,
                k=k, s=s, n=dataset.n, seed=seed, queries=queries,
                hashes_per_query=hashes_per_query,
                cells_read_total=filt.counters.cells_read,
                ms=elapsed,
            )
            if hashes_per_query != model.hashes_per_query:
                report.flags.append(
                    f"hashes/query {hashes_per_query} != model {model.hashes_per_query}"
                )
            if not (queries * model.cells_read_min
                    <= filt.counters.cells_read
                    <= queries * model.cells_read_max):
                report.flags.append(
                    f"cells read {filt.counters.cells_read} outside "
                    f"[{queries * model.cells_read_min}, {queries * model.cells_read_max}]"
                )
            if filt.counters.lookups != queries * model.lookups_per_query:
                report.flags.append(
                    f"lookups {filt.counters.lookups} != model "
                    f"{queries * model.lookups_per_query}"
                )
            reports.append(report)
    return reports


# -- CSV ---------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def report_row(report: ExperimentReport, include_timings: bool = False) -> list[str]:
    tally = report.tally
    return [
        report.experiment,
        report.filter_kind,
        _fmt(report.m),
        _fmt(report.l_bits),
        _fmt(report.k),
        _fmt(report.s),
        _fmt(report.n),
        _fmt(report.w),
        _fmt(report.seed),
        _fmt(report.queries if report.queries else None),
        _fmt(tally.c if tally else None),
        _fmt(tally.e if tally else None),
        _fmt(tally.u_at(2) if tally else None),
        _fmt(tally.u_at(3) if tally else None),
        _fmt(tally.u_at(4) if tally else None),
        _fmt(tally.u_at_least(5) if tally else None),
        _fmt(tally.fp if tally else None),
        _fmt(tally.tn if tally else None),
        _fmt(report.fpp_emp),
        _fmt(report.fpp_ana),
        _fmt(report.isep_emp),
        _fmt(report.isep_ana),
        _fmt(report.entropy_value),
        _fmt(report.hashes_per_query),
        _fmt(report.cells_read_total),
        _fmt(report.ms if include_timings else None),
    ]


def write_csv(
    reports: Sequence[ExperimentReport],
    path: str | Path,
    include_timings: bool = False,
) -> None:
    """Write reports atomically; timings are opt-in so reruns of the same
    seed produce byte-identical files."""
    path = Path(path)
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(",".join(report_row(r, include_timings)) for r in reports)
    payload = "\n".join(lines) + "\n"
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(payload)
    os.replace(tmp, path)
