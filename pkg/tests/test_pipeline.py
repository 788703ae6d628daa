import io
import math

import numpy as np
import pytest

from permcap import pipeline
from permcap.errors import DegenerateInputError, IngestionError
from permcap.estimators import Sided


def load(dataset):
    matrix_path, label_path, gmt_path = dataset
    matrix = pipeline.read_expression_tsv(matrix_path)
    labels = pipeline.read_labels_csv(label_path, matrix.samples)
    return matrix, labels, pipeline.read_gmt(gmt_path)


def tiny_matrix():
    values = np.array([[0, 2, 0, 2], [0, 0, 4, 4], [3, -3, 3, -3]], dtype=float)
    return pipeline.ExpressionMatrix(("A", "B", "C"), ("s1", "s2", "s3", "s4"), values)


class TestIngestion:
    def test_reads_fixture(self, dataset):
        matrix, labels, sets = load(dataset)
        assert matrix.values.shape == (40, 13)
        assert labels.labels.sum() == 7
        np.testing.assert_array_equal(labels.labels, [0] * 6 + [1] * 7)
        assert [s.name for s in sets] == ["UP", "NULL", "MIXED", "EMPTY"]

    def test_missing_value(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("gene\ta\tb\nG1\t1.0\tNA\n")
        with pytest.raises(IngestionError, match="missing"):
            pipeline.read_expression_tsv(p)

    def test_ragged_row(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("gene\ta\tb\nG1\t1.0\n")
        with pytest.raises(IngestionError):
            pipeline.read_expression_tsv(p)

    def test_duplicate_gene(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("gene\ta\tb\nG1\t1\t2\nG1\t3\t4\n")
        with pytest.raises(IngestionError, match="duplicate"):
            pipeline.read_expression_tsv(p)

    def test_labels_reconciled_by_id(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text("b,1\na,0\nc,1\nextra,0\n")
        lv = pipeline.read_labels_csv(p, ("a", "b", "c"))
        np.testing.assert_array_equal(lv.labels, [0, 1, 1])

    def test_missing_label(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text("a,0\nb,1\n")
        with pytest.raises(IngestionError, match="no label"):
            pipeline.read_labels_csv(p, ("a", "b", "c"))

    def test_conflicting_labels(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text("a,0\na,1\nb,1\n")
        with pytest.raises(IngestionError, match="conflicting"):
            pipeline.read_labels_csv(p, ("a", "b"))

    def test_single_class(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text("a,1\nb,1\n")
        with pytest.raises(IngestionError):
            pipeline.read_labels_csv(p, ("a", "b"))

    def test_gmt_dedupes_and_skips_blank(self, tmp_path):
        p = tmp_path / "s.gmt"
        p.write_text("X\tdesc\tA\tB\tA\t\n\nY\t\tC\n")
        sets = pipeline.read_gmt(p)
        assert sets.sets[0].genes == ("A", "B")
        assert len(sets) == 2

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(IngestionError):
            pipeline.read_gmt(tmp_path / "nope.gmt")


class TestCompositeResponse:
    def test_single_gene(self):
        m = tiny_matrix()
        r, info = pipeline.composite_response(m, pipeline.GeneSet("s", "", ("A",)))
        np.testing.assert_allclose(r, [0, 2, 0, 2])
        assert info.used == ["A"]

    def test_hand_computed_three_genes(self):
        # population sd: A -> 1, B -> 2, C -> 3
        m = tiny_matrix()
        r, _ = pipeline.composite_response(m, pipeline.GeneSet("s", "", ("A", "B", "C")))
        np.testing.assert_allclose(r, [1, 1, 3, 3], atol=1e-15)

    def test_duplicate_rows_double(self):
        v = np.array([[1.0, 4.0, 2.0, 7.0], [1.0, 4.0, 2.0, 7.0]])
        m = pipeline.ExpressionMatrix(("A", "A2"), ("a", "b", "c", "d"), v)
        one, _ = pipeline.composite_response(m, pipeline.GeneSet("s", "", ("A",)))
        two, _ = pipeline.composite_response(m, pipeline.GeneSet("s", "", ("A", "A2")))
        np.testing.assert_allclose(two, 2 * one)

    def test_sd_convention_does_not_change_rho(self):
        m = tiny_matrix()
        labels = np.array([0, 1, 0, 1])
        gs = pipeline.GeneSet("s", "", ("A", "B", "C"))
        pop, _ = pipeline.composite_response(m, gs)
        sample, _ = pipeline.composite_response(m, gs, scales=m.values.std(axis=1, ddof=1))
        a = pipeline.standardize(pop, labels).rho_hat
        b = pipeline.standardize(sample, labels).rho_hat
        assert a == pytest.approx(b, abs=1e-15)

    def test_skips_constant_and_absent(self, dataset):
        matrix, labels, sets = load(dataset)
        _, info = pipeline.composite_response(matrix, sets.sets[2], labels)
        assert info.used == ["G3", "G15"]
        assert info.missing == ["ABSENT"]
        assert info.zero_variance == ["G39"]

    def test_empty_intersection(self, dataset):
        matrix, labels, sets = load(dataset)
        with pytest.raises(DegenerateInputError) as err:
            pipeline.composite_response(matrix, sets.sets[3], labels)
        assert err.value.info.missing == ["ABSENT"]


class TestRunEstimate:
    def test_records_and_invariants(self, dataset):
        matrix, labels, sets = load(dataset)
        recs = pipeline.run_estimate(matrix, sets, labels, sided=Sided.ONE, with_rmse=True)
        assert [r["name"] for r in recs] == ["UP", "NULL", "MIXED", "EMPTY"]
        gran = 1 / math.comb(13, 7)
        for r in recs[:3]:
            assert r["status"] == "ok"
            assert r["granularity"] == pytest.approx(gran)
            for e in ("p2", "p3"):
                assert r[f"{e}_estimate"] >= gran
                assert r[f"{e}_rmse"] >= 0
                assert r[f"{e}_chebychev"] >= r[f"{e}_estimate"]
        assert recs[3]["status"].startswith("skipped")
        assert recs[3]["n_missing"] == 1
        assert recs[2]["n_zero_variance"] == 1

    def test_two_sided_bounds(self, dataset):
        matrix, labels, sets = load(dataset)
        for r in pipeline.run_estimate(matrix, sets, labels)[:3]:
            for e in ("p1", "p2", "p3"):
                assert 0 < r[f"{e}_estimate"] <= 2

    def test_thread_count_does_not_change_values(self, dataset):
        matrix, labels, sets = load(dataset)
        a = pipeline.run_estimate(matrix, sets, labels, with_rmse=True, threads=1)
        b = pipeline.run_estimate(matrix, sets, labels, with_rmse=True, threads=3)
        assert a == b or all(
            (x == y) or (isinstance(x, float) and math.isnan(x) and math.isnan(y))
            for ra, rb in zip(a, b) for x, y in zip(ra.values(), rb.values())
        )

    def test_field_order(self):
        cols = pipeline.record_fields(("p1", "p2"), True, False)
        assert cols[:4] == ["name", "size", "n_missing", "n_zero_variance"]
        assert cols[-6:] == ["p1_rmse_ref1", "p2_estimate", "p2_log10", "p2_rmse", "p2_cv", "p2_chebychev"]


class TestRecordIO:
    @pytest.mark.parametrize("fmt", ["json", "csv"])
    def test_round_trip(self, dataset, fmt):
        matrix, labels, sets = load(dataset)
        recs = pipeline.run_estimate(matrix, sets, labels, with_rmse=True)
        fields = pipeline.record_fields(("p1", "p2", "p3"), True, False)
        buf = io.StringIO()
        pipeline.write_records(recs, buf, fmt, fields)
        back = pipeline.read_records(io.StringIO(buf.getvalue()), fmt)
        assert len(back) == len(recs)
        for orig, new in zip(recs, back):
            assert list(new) == fields
            for k in fields:
                assert new[k] == orig[k], k

    def test_nonfinite_values_survive(self):
        buf = io.StringIO()
        pipeline.write_records([{"a": math.inf, "b": 1.5}], buf, "json")
        back = pipeline.read_records(io.StringIO(buf.getvalue()), "json")
        assert back == [{"a": math.inf, "b": 1.5}]


class TestSweep:
    def test_small_table(self):
        rows = pipeline.sweep([6], [0.0, 0.5, 1.0], Sided.ONE)
        assert [r["rho"] for r in rows] == [0.0, 0.5, 1.0]
        assert rows[0]["p1"] == pytest.approx(0.5, abs=1e-15)
        gran = 1 / math.comb(12, 6)
        assert rows[-1]["p2"] == pytest.approx(gran, rel=1e-12)
        assert rows[-1]["rmse2_p2"] <= 1e-6 * rows[-1]["p2"]
        assert set(rows[0]) == set(pipeline.SWEEP_FIELDS)

    def test_small_rows_match_oracle(self):
        """Sweep moments at m = 3 against exact enumeration under subsphere sampling."""
        from permcap.combinatorics import GroupSizes
        from permcap.oracle import orbit_vectors, p_values_for_centers, sample_subsphere

        rho = 0.4
        row = pipeline.sweep([3], [rho], Sided.ONE)[0]
        g = GroupSizes(3, 3)
        orbit = orbit_vectors(g)
        y = sample_subsphere(orbit[-1], rho, 50_000, seed=12, stream=1)
        p = p_values_for_centers(g, y, rho, "one", orbit)
        se = p.std(ddof=1) / math.sqrt(p.size)
        assert abs(row["p2"] - p.mean()) <= 4 * se
        dev = (p - row["p1"]) ** 2
        assert abs(row["rmse2_p1"] ** 2 - dev.mean()) <= 4 * dev.std(ddof=1) / math.sqrt(p.size)

    def test_properties_report(self):
        rows = pipeline.sweep([8], np.linspace(0, 1, 11), Sided.ONE)
        names = [n for n, ok, _ in pipeline.sweep_properties(rows, Sided.ONE)]
        assert any("1/N" in n for n in names)


class TestBenchSim:
    def test_separation_counted(self):
        labels = np.array([0, 0, 1, 1])
        assert pipeline.is_separated(labels, np.array([0.0, 1.0, 2.0, 3.0]))
        assert not pipeline.is_separated(labels, np.array([0.0, 2.5, 2.0, 3.0]))
        _, summary = pipeline.bench_sim("exp", 50.0, 4, 4, reps=5, seed=0)
        assert summary["separated_excluded"] == 5 and summary["retained"] == 0

    def test_small_run(self):
        rows, summary = pipeline.bench_sim("t5", 0.8, 5, 5, reps=20, seed=3)
        assert summary["retained"] + summary["separated_excluded"] == 20
        assert all(r["p"] >= 1 / 252 for r in rows)
        assert summary["max_z2"] < 30

    def test_seed_reproducible(self):
        a = pipeline.bench_sim("uniform", None, 4, 5, reps=6, seed=9)
        b = pipeline.bench_sim("uniform", None, 4, 5, reps=6, seed=9)
        assert a == b


class TestValidateHarness:
    def test_all_pass_small_design(self):
        checks = pipeline.validate(3, 3, draws=20_000, seed=1, grid=(0.3,))
        assert checks and all(c.passed for c in checks)
        assert {c.suite for c in checks} == {"V2", "P1", "P2", "moments", "oracle"}

    def test_loose_quadrature_is_reported(self):
        from permcap.sphere import QuadratureConfig

        checks = pipeline.validate(3, 3, draws=5_000, seed=1, grid=(0.3,), q=QuadratureConfig(rel_tol=1.0))
        assert any(not c.passed for c in checks)

    def test_fixture_pair(self):
        from permcap.combinatorics import GroupSizes

        sp = pipeline.fixture_pair(GroupSizes(4, 5), 0.35, seed=2)
        assert sp.rho_hat == pytest.approx(0.35, abs=1e-14)
