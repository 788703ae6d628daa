import json
import subprocess
import sys

import pytest

from permcap import cli, pipeline


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestRunEstimate:
    def test_json_records(self, dataset, capsys):
        m, lab, gmt = dataset
        code, out, _ = run(["run-estimate", "--matrix", str(m), "--labels", str(lab),
                            "--genesets", str(gmt), "--estimators", "p1,p2"], capsys)
        assert code == 0
        recs = [json.loads(line) for line in out.splitlines()]
        assert [r["name"] for r in recs] == ["UP", "NULL", "MIXED", "EMPTY"]
        assert list(recs[0]) == pipeline.record_fields(("p1", "p2"), False, False)
        assert recs[3]["p2_estimate"] is None

    def test_byte_identical_across_threads(self, dataset, tmp_path, capsys):
        m, lab, gmt = dataset
        outs = []
        for threads in ("1", "1", "4"):
            path = tmp_path / f"o{len(outs)}.csv"
            code, _, _ = run(["run-estimate", "--matrix", str(m), "--labels", str(lab), "--genesets",
                              str(gmt), "--with-rmse", "--format", "csv", "--threads", threads,
                              "--out", str(path)], capsys)
            assert code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_csv_round_trip(self, dataset, tmp_path, capsys):
        m, lab, gmt = dataset
        path = tmp_path / "o.csv"
        run(["run-estimate", "--matrix", str(m), "--labels", str(lab), "--genesets", str(gmt),
             "--format", "csv", "--out", str(path)], capsys)
        with open(path) as fh:
            recs = pipeline.read_records(fh, "csv")
        again = tmp_path / "again.csv"
        with open(again, "w", newline="") as fh:
            pipeline.write_records(recs, fh, "csv", list(recs[0]))
        assert again.read_bytes() == path.read_bytes()

    def test_timing_column_opt_in(self, dataset, capsys):
        m, lab, gmt = dataset
        _, out, _ = run(["run-estimate", "--matrix", str(m), "--labels", str(lab), "--genesets", str(gmt),
                         "--estimators", "p2", "--timing"], capsys)
        assert all(json.loads(line)["seconds"] is not None for line in out.splitlines()[:3])

    def test_ingestion_error_exit_code(self, dataset, tmp_path, capsys):
        m, _, gmt = dataset
        bad = tmp_path / "bad.csv"
        bad.write_text("S00,0\n")
        code, _, err = run(["run-estimate", "--matrix", str(m), "--labels", str(bad),
                            "--genesets", str(gmt)], capsys)
        assert code == 2
        rec = json.loads(err.strip().splitlines()[-1])
        assert rec["error"] == "IngestionError"

    def test_unknown_estimator(self, dataset, capsys):
        m, lab, gmt = dataset
        code, _, _ = run(["run-estimate", "--matrix", str(m), "--labels", str(lab),
                          "--genesets", str(gmt), "--estimators", "p9"], capsys)
        assert code == 2

    def test_env_tolerance_override(self, dataset, capsys, monkeypatch):
        m, lab, gmt = dataset
        monkeypatch.setenv("PERMCAP_QUAD_REL_TOL", "not-a-number")
        code, _, _ = run(["run-estimate", "--matrix", str(m), "--labels", str(lab), "--genesets", str(gmt)], capsys)
        assert code == 2
        monkeypatch.setenv("PERMCAP_QUAD_REL_TOL", "1e-8")
        monkeypatch.setenv("PERMCAP_THREADS", "2")
        code, _, _ = run(["run-estimate", "--matrix", str(m), "--labels", str(lab), "--genesets", str(gmt)], capsys)
        assert code == 0


class TestValidate:
    def test_passes_and_is_deterministic(self, capsys):
        argv = ["validate", "--m0", "3", "--m1", "3", "--draws", "20000", "--seed", "4", "--grid", "0.3"]
        code1, out1, _ = run(argv, capsys)
        code2, out2, _ = run(argv, capsys)
        assert code1 == code2 == 0
        assert out1 == out2
        assert out1.rstrip().endswith("checks passed")
        assert "FAIL" not in out1

    def test_corrupted_tolerance_fails(self, capsys):
        code, out, _ = run(["validate", "--m0", "3", "--m1", "3", "--draws", "5000",
                            "--grid", "0.3", "--quad-rel-tol", "1"], capsys)
        assert code == 1
        assert "FAIL" in out


class TestSweepAndBench:
    def test_sweep_small(self, tmp_path, capsys):
        path = tmp_path / "s.csv"
        code, _, err = run(["sweep", "--m-grid", "5", "--rho-grid", "0..1:0.25", "--sided", "one",
                            "--out", str(path)], capsys)
        assert path.read_text().splitlines()[0] == ",".join(pipeline.SWEEP_FIELDS)
        assert len(path.read_text().splitlines()) == 6
        assert "p2 >= 1/N" in err
        assert code in (0, 1)

    def test_bench_summary(self, capsys):
        code, out, _ = run(["bench-sim", "--dist", "exp", "--m0", "4", "--m1", "4", "--reps", "5"], capsys)
        assert code == 0
        summary = json.loads(out)
        assert summary["shift"] == 2.0 and summary["reps"] == 5


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "permcap", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("run-estimate", "validate", "sweep", "bench-sim"):
        assert cmd in res.stdout


def test_bad_arguments_exit_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["validate"])
    assert exc.value.code == 2
