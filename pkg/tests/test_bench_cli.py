import json

import numpy as np
import pytest

from odr_dro import apps, bench, cli
from odr_dro.errors import InputError


class TestRunSpec:
    def test_fraction_resolution(self):
        inst = apps.gen_newsvendor(40, 0)
        assert bench.RunSpec("pca-lb", 0.2).resolve_m1(inst) == 8
        assert bench.RunSpec("pca-lb", 0.2).label(inst) == "pca-lb@8"

    def test_defaults(self):
        inst = apps.gen_newsvendor(10, 0)
        assert bench.RunSpec("odr-lb").resolve_m1(inst) == 2
        assert bench.RunSpec("odr-rlb").resolve_m1(inst) == 1
        assert bench.RunSpec("full").resolve_m1(inst) is None

    def test_rlb_width_bounds(self):
        inst = apps.gen_newsvendor(10, 0)
        with pytest.raises(InputError):
            bench.RunSpec("odr-rlb", 5).resolve_m1(inst)

    def test_unknown_method(self):
        with pytest.raises(InputError):
            bench.RunSpec("magic")


class TestRunMethod:
    def test_full_and_lower(self):
        inst = apps.gen_newsvendor(5, 0)
        full = bench.run_method(inst, bench.RunSpec("full"))
        assert full.side == "exact" and full.error is None
        lb = bench.run_method(inst, bench.RunSpec("pca-lb", 2), full.value)
        assert lb.side == "lower"
        assert lb.metrics.gap1 is not None and lb.metrics.gap1 >= -1e-4

    def test_pca_ub_infeasible_is_inf(self):
        inst = apps.gen_newsvendor(5, 1)
        rep = bench.run_method(inst, bench.RunSpec("pca-ub", 2))
        assert rep.value == np.inf and rep.certified

    def test_heuristic_on_cvar_records_error(self):
        inst = apps.gen_cvar(4, 0)
        rep = bench.run_method(inst, bench.RunSpec("heuristic-b", 2))
        assert rep.error is not None


class TestTripwire:
    def test_lower_violation_detected(self):
        with pytest.raises(bench.SandwichViolation):
            bench._check_tripwire("odr-lb@2", "lower", -1.0, -2.0)

    def test_upper_violation_detected(self):
        with pytest.raises(bench.SandwichViolation):
            bench._check_tripwire("odr-ub@2", "upper", -3.0, -2.0)

    def test_valid_bounds_pass(self):
        bench._check_tripwire("odr-lb@2", "lower", -2.5, -2.0)
        bench._check_tripwire("odr-ub@2", "upper", -1.5, -2.0)
        bench._check_tripwire("odr-rlb@1", "lower", -1.0, -2.0)  # not certified-lower


class TestRunMatrix:
    def test_two_rows(self):
        inst = apps.gen_newsvendor(4, 0)
        cells = [bench.MatrixCell(4, 0, inst, bench.RunSpec("full")),
                 bench.MatrixCell(4, 0, inst, bench.RunSpec("pca-lb", 2))]
        rows = bench.run_matrix(cells)
        assert len(rows) == 2
        assert [r["Method"] for r in rows] == ["full", "pca-lb@2"]
        assert rows[1]["Gap1"] != "-"

    def test_missing_full_marks_gaps_absent(self):
        inst = apps.gen_newsvendor(4, 1)
        cells = [bench.MatrixCell(4, 0, inst, bench.RunSpec("pca-lb", 2))]
        rows = bench.run_matrix(cells)
        assert rows[0]["Gap1"] == "-" and rows[0]["Gap2"] == "-"

    def test_csv_roundtrip(self):
        inst = apps.gen_newsvendor(4, 2)
        cells = [bench.MatrixCell(4, 0, inst, bench.RunSpec("full"))]
        rows = bench.run_matrix(cells)
        text = bench.rows_to_csv(rows)
        back = bench.read_csv(text)
        assert back == rows


class TestCli:
    def test_gen_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert cli.main(["gen", "--app", "cvar", "--m", "5", "--seed", "3",
                         "--out", str(a)]) == 0
        assert cli.main(["gen", "--app", "cvar", "--m", "5", "--seed", "3",
                         "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_solve_demo_value(self, capsys):
        assert cli.main(["solve", "--app", "cvar-demo", "--method", "full"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert abs(out["value"] - 2.0) <= 1e-4

    def test_bench_deterministic_csv(self, tmp_path):
        outs = []
        for name in ("r1.csv", "r2.csv"):
            path = tmp_path / name
            code = cli.main(["bench", "--app", "newsvendor", "--sizes", "4",
                             "--seeds", "2", "--methods",
                             "full,pca-lb@2,heuristic-b@2", "--out", str(path),
                             "--no-times"])
            assert code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_report_pure_function_of_csv(self, tmp_path):
        csv_path = tmp_path / "r.csv"
        cli.main(["bench", "--app", "cvar", "--sizes", "4", "--seeds", "1",
                  "--methods", "full,pca-lb@2,pca-ub@2", "--out", str(csv_path),
                  "--no-times"])
        arts = []
        for tag in ("x", "y"):
            table = tmp_path / f"table-{tag}.txt"
            figs = tmp_path / f"figs-{tag}"
            assert cli.main(["report", str(csv_path), "--out", str(table),
                             "--plots", str(figs)]) == 0
            arts.append((table.read_bytes(),
                         (figs / "gaps.svg").read_bytes(),
                         (figs / "times.svg").read_bytes()))
        assert arts[0] == arts[1]

    def test_config_file_defaults(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"app": "newsvendor", "sizes": "4",
                                   "seeds": 1, "methods": "full",
                                   "out": str(tmp_path / "cfg-out.csv")}))
        assert cli.main(["bench", "--config", str(cfg), "--no-times"]) == 0
        assert (tmp_path / "cfg-out.csv").exists()

    def test_verify_passes(self, capsys):
        assert cli.main(["verify"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out and "PASS" in out

    def test_gen_roundtrips_through_solve(self, tmp_path):
        path = tmp_path / "inst.json"
        cli.main(["gen", "--app", "newsvendor", "--m", "4", "--seed", "1",
                  "--out", str(path)])
        assert cli.main(["solve", "--instance", str(path),
                         "--method", "pca-lb", "--m1", "2"]) == 0

    def test_worker_pool_reproduces_rows(self, tmp_path, monkeypatch):
        outs = []
        for tag, threads in (("t1", "1"), ("t2", "2")):
            monkeypatch.setenv("ODR_DRO_THREADS", threads)
            path = tmp_path / f"{tag}.csv"
            assert cli.main(["bench", "--app", "newsvendor", "--sizes", "4,5",
                             "--seeds", "2", "--methods", "full,pca-lb@2",
                             "--out", str(path), "--no-times"]) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]


class TestAggregation:
    def test_plot_series_means_match_rows(self):
        from odr_dro import plots
        rows = [
            {"Size": "4", "Inst": "0", "Method": "pca-lb@2", "Gap1": "2.0"},
            {"Size": "4", "Inst": "1", "Method": "pca-lb@2", "Gap1": "4.0"},
            {"Size": "8", "Inst": "0", "Method": "pca-lb@2", "Gap1": "6.0"},
            {"Size": "8", "Inst": "1", "Method": "pca-lb@2", "Gap1": "-"},
        ]
        series = plots._series(rows, "Gap1")
        sizes, means = series["pca-lb@2"]
        assert sizes == [4, 8]
        assert means == [pytest.approx(3.0), pytest.approx(6.0)]
