"""Experiment harness tests at desk scale: report contents, tolerance
machinery, CSV schema and reproducibility."""

import math

import pytest

from msetfilters import analytics, experiments, workload
from msetfilters.experiments import (
    CSV_COLUMNS,
    count_within_tolerance,
    poisson_interval,
    shbf_interset_rate_with_collisions,
)


@pytest.fixture(scope="module")
def small_dataset():
    return workload.gen_uniform(16, 32, seed=21)


@pytest.fixture(scope="module")
def small_non_elements(small_dataset):
    return workload.gen_non_elements(4000, 22, small_dataset)


class TestToleranceMachinery:
    def test_poisson_interval_moderate_lambda(self):
        lo, hi = poisson_interval(3.0)
        assert lo == 0
        assert 8 <= hi <= 10

    def test_poisson_interval_zero(self):
        assert poisson_interval(0.0) == (0, 0)

    def test_poisson_interval_large_lambda_covers_mean(self):
        lo, hi = poisson_interval(400.0)
        assert lo < 400 < hi
        # roughly mean +- 2.58 sqrt(mean)
        assert abs(lo - (400 - 2.58 * 20)) < 8
        assert abs(hi - (400 + 2.58 * 20)) < 8

    def test_binomial_band_used_above_25(self):
        n, p = 10000, 0.01  # expected 100
        sigma = math.sqrt(n * p * (1 - p))
        assert count_within_tolerance(int(100 + 2.9 * sigma), 100.0, n)
        assert not count_within_tolerance(int(100 + 3.5 * sigma), 100.0, n)

    def test_poisson_band_used_below_25(self):
        assert count_within_tolerance(0, 3.0, 10000)
        assert count_within_tolerance(8, 3.0, 10000)
        assert not count_within_tolerance(14, 3.0, 10000)

    def test_collision_floor_dominates_on_large_sparse_filter(self):
        base = analytics.shbf_isep(2**23, 10, 65280, 255)
        with_floor = shbf_interset_rate_with_collisions(2**23, 10, 65280, 255, 2**23)
        assert with_floor > 1000 * base
        assert with_floor == pytest.approx(254 / 2**23, rel=0.05)


@pytest.fixture(scope="module")
def interset_reports(small_dataset):
    return experiments.run_interset_experiment(
        small_dataset, k=4, seed=5,
        configs=(("sbf", 2**12), ("shbf", 2**12), ("shbf", 2**14)),
    )


class TestIntersetExperiment:

    def test_report_shape(self, interset_reports):
        assert [r.filter_kind for r in interset_reports] == ["sbf", "shbf", "shbf"]
        for report in interset_reports:
            assert report.queries == 512
            assert report.tally.member_queries == 512
            assert report.entropy_value is not None

    def test_sbf_never_produces_multi_match(self, interset_reports):
        assert interset_reports[0].tally.u == {}

    def test_shbf_never_produces_wrong_single(self, interset_reports):
        assert interset_reports[1].tally.e == 0

    def test_analytic_columns_recomputed(self, interset_reports):
        sbf = interset_reports[0]
        assert sbf.isep_ana == pytest.approx(
            analytics.sbf_isep_overall(2**12, 4, [32] * 16))
        shbf = interset_reports[1]
        assert shbf.isep_ana == pytest.approx(analytics.shbf_isep(2**12, 4, 512, 16))

    def test_hashes_per_query(self, interset_reports):
        assert interset_reports[0].hashes_per_query == 4
        assert interset_reports[1].hashes_per_query == 4 + 16 - 1

    def test_empirical_within_band(self, interset_reports):
        # seeded run agrees with its own tolerance machinery
        for report in interset_reports:
            assert report.flags == []

    def test_unknown_kind_rejected(self, small_dataset):
        with pytest.raises(ValueError):
            experiments.run_interset_experiment(
                small_dataset, k=2, seed=1, configs=(("nope", 64),))


@pytest.fixture(scope="module")
def word_reports(small_dataset):
    return experiments.run_word_size_sweep(
        small_dataset, k=4, seed=6, m=2**14,
        word_sizes=(2**4, 2**8, 2**12, None),
    )


class TestWordSweep:

    def test_one_report_per_word_size(self, word_reports):
        assert [r.w for r in word_reports] == [16, 256, 4096, None]

    def test_small_words_mean_more_ambiguity(self, word_reports):
        multi = [r.tally.u_total for r in word_reports]
        assert multi[0] > 10 * max(multi[-1], 1)
        assert sorted(multi, reverse=True) == multi

    def test_unbounded_equals_circular_run(self, small_dataset, word_reports):
        circular = experiments.run_interset_experiment(
            small_dataset, k=4, seed=6, configs=(("shbf", 2**14),))
        assert circular[0].tally == word_reports[-1].tally

    def test_oversized_word_rejected(self, small_dataset):
        with pytest.raises(ValueError):
            experiments.run_word_size_sweep(
                small_dataset, k=2, seed=1, m=64, word_sizes=(128,))


@pytest.fixture(scope="module")
def fpp_reports(small_dataset, small_non_elements):
    return experiments.run_fpp_sweep(
        small_dataset, small_non_elements, k=4, seed=8,
        m_values=(2**10, 2**13),
    )


class TestFppSweep:

    def test_rows_per_kind_and_m(self, fpp_reports):
        assert len(fpp_reports) == 4
        assert {r.filter_kind for r in fpp_reports} == {"shbf", "sbf"}

    def test_l_bits_accounting(self, fpp_reports):
        for report in fpp_reports:
            if report.filter_kind == "shbf":
                assert report.l_bits == report.m
            else:
                assert report.l_bits == report.m * 5  # 16 sets -> 5-bit cells

    def test_fp_tn_partition_probes(self, fpp_reports):
        for report in fpp_reports:
            assert report.tally.fp + report.tally.tn == 4000

    def test_empirical_tracks_analytic(self, fpp_reports):
        for report in fpp_reports:
            assert report.flags == [], (report.filter_kind, report.m, report.flags)

    def test_shbf_worse_than_sbf_at_equal_cells(self, fpp_reports):
        by_key = {(r.filter_kind, r.m): r for r in fpp_reports}
        assert by_key[("shbf", 2**10)].fpp_ana > by_key[("sbf", 2**10)].fpp_ana


class TestFppCurves:
    def test_sbf_curve_constant_in_s(self):
        reports = experiments.run_fpp_curves(k=10, n=65280, m_values=(2**20,),
                                             s_values=range(1, 256))
        sbf_values = {r.fpp_ana for r in reports if r.filter_kind == "sbf"}
        assert len(sbf_values) == 1

    def test_shbf_curve_increases_and_matches_endpoint(self):
        reports = experiments.run_fpp_curves(k=10, n=65280, m_values=(2**20,),
                                             s_values=range(1, 256))
        shbf = [r for r in reports if r.filter_kind == "shbf"]
        values = [r.fpp_ana for r in shbf]
        assert all(a < b for a, b in zip(values, values[1:]))
        at_250 = next(r for r in shbf if r.s == 250)
        assert at_250.fpp_ana > 0.1

    def test_single_set_curves_coincide(self):
        reports = experiments.run_fpp_curves(k=10, n=65280, m_values=(2**20,),
                                             s_values=(1,))
        assert reports[0].fpp_ana == pytest.approx(reports[1].fpp_ana)


@pytest.fixture(scope="module")
def cost_reports():
    return experiments.run_cost_experiment(
        k_s_grid=((10, 1), (10, 7), (10, 255)), queries=64, seed=2, m=2**12)


class TestCostExperiment:

    def test_exact_hash_counts(self, cost_reports):
        for report in cost_reports:
            model = analytics.cost_model(report.filter_kind, report.k, report.s)
            assert report.hashes_per_query == model.hashes_per_query
            assert report.flags == []

    def test_linear_vs_constant_shape(self, cost_reports):
        shbf = {r.s: r.hashes_per_query for r in cost_reports if r.filter_kind == "shbf"}
        sbf = {r.s: r.hashes_per_query for r in cost_reports if r.filter_kind == "sbf"}
        assert shbf[255] - shbf[7] == 255 - 7  # slope one in s at fixed k
        assert sbf[1] == sbf[7] == sbf[255] == 10
        assert shbf[1] == sbf[1]  # single set degenerates to the same cost


class TestCsv:
    def test_header_and_shape(self, tmp_path, small_dataset):
        reports = experiments.run_interset_experiment(
            small_dataset, k=3, seed=4, configs=(("sbf", 2**10),))
        path = tmp_path / "out.csv"
        experiments.write_csv(reports, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 2
        row = lines[1].split(",")
        assert len(row) == len(CSV_COLUMNS)
        assert row[0] == "interset"
        assert row[1] == "sbf"
        assert row[CSV_COLUMNS.index("ms")] == ""  # timings opt-in

    def test_reruns_are_byte_identical(self, tmp_path, small_dataset):
        def run(path):
            reports = experiments.run_interset_experiment(
                small_dataset, k=3, seed=4, configs=(("sbf", 2**10), ("shbf", 2**10)))
            experiments.write_csv(reports, path)
            return path.read_bytes()

        assert run(tmp_path / "a.csv") == run(tmp_path / "b.csv")

    def test_timings_column_opt_in(self, tmp_path, small_dataset):
        reports = experiments.run_interset_experiment(
            small_dataset, k=3, seed=4, configs=(("sbf", 2**10),))
        path = tmp_path / "timed.csv"
        experiments.write_csv(reports, path, include_timings=True)
        row = path.read_text().splitlines()[1].split(",")
        assert row[CSV_COLUMNS.index("ms")] != ""

    def test_floats_at_ten_significant_digits(self, tmp_path):
        report = experiments.ExperimentReport(
            experiment="probe", filter_kind="sbf", m=4, l_bits=8, k=1, s=3, n=0,
            fpp_ana=1 / 3,
        )
        path = tmp_path / "fmt.csv"
        experiments.write_csv([report], path)
        row = path.read_text().splitlines()[1].split(",")
        assert row[CSV_COLUMNS.index("fpp_ana")] == "0.3333333333"
        assert row[CSV_COLUMNS.index("w")] == ""
