import json

import pytest

import golden
from crthte.cli import main
from crthte.solver import Series
from crthte.cli import emit_series


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, argv):
    code, out, err = run_cli(capsys, argv + ["--format", "json"])
    assert code == 0, err
    return json.loads(out)


class TestGoldenCommands:
    def test_lire_solve_m(self, capsys):
        doc = run_json(capsys, golden.LIRE_SOLVE_M)
        assert doc["result"]["solved_value"] == 353
        assert doc["schema_version"] == "1"

    def test_umdex_solve_n(self, capsys):
        assert run_json(capsys, golden.UMDEX_SOLVE_N_M11)["result"]["solved_value"] == 35
        assert run_json(capsys, golden.UMDEX_SOLVE_N_M8)["result"]["solved_value"] == 48

    def test_umdex_2x2_power(self, capsys, tmp_path):
        csv_path = tmp_path / "design.csv"
        csv_path.write_text(golden.UMDEX_2X2_CSV)
        doc = run_json(capsys, golden.umdex_2x2_power(str(csv_path)))
        assert doc["result"]["achieved_power"] == pytest.approx(0.899, abs=0.002)

    def test_byte_identical_across_runs(self, capsys, tmp_path):
        csv_path = tmp_path / "design.csv"
        csv_path.write_text(golden.UMDEX_2X2_CSV)
        commands = [
            golden.LIRE_SOLVE_M,
            golden.UMDEX_SOLVE_N_M11,
            golden.UMDEX_SOLVE_N_M8,
            golden.umdex_2x2_power(str(csv_path)),
        ]
        for argv in commands:
            _, first, _ = run_cli(capsys, argv + ["--format", "json"])
            _, second, _ = run_cli(capsys, argv + ["--format", "json"])
            assert first == second and first.endswith("\n")

    def test_null_effect_power_in_json(self, capsys):
        argv = [
            "power", "--design", "parallel", "--cluster-size", "5", "--clusters", "10",
            "--outcome-sd", "1", "--covariate-sd", "1", "--delta", "0",
        ]
        doc = run_json(capsys, argv)
        assert doc["result"]["achieved_power"] == pytest.approx(0.025, abs=1e-9)


class TestExitCodes:
    def test_validation_error_is_2(self, capsys):
        code, _, err = run_cli(capsys, [
            "power", "--design", "parallel", "--cluster-size", "5", "--clusters", "10",
            "--outcome-sd", "1", "--covariate-sd", "1", "--delta", "0.5", "--alpha", "1.5",
        ])
        assert code == 2
        assert "alpha" in err

    def test_parse_error_is_4(self, capsys, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("0,2\n1,0\n")
        code, _, err = run_cli(capsys, [
            "power", "--design", "custom", "--design-csv", str(bad),
            "--outcome-sd", "1", "--covariate-sd", "1", "--delta", "0.5",
            "--clusters", "4", "--cluster-size", "3",
        ])
        assert code == 4
        assert "line 1, column 2" in err

    def test_infeasible_is_3(self, capsys):
        code, _, err = run_cli(capsys, [
            "solve-m", "--design", "parallel", "--clusters", "10",
            "--icc-outcome", "0.05", "--outcome-sd", "1",
            "--covariate-level", "cluster", "--covariate-sd", "1",
            "--delta", "0.2", "--power", "0.9",
        ])
        assert code == 3
        assert "asymptotic power" in err


class TestValidateCommand:
    def test_hard_violation_fails(self, capsys):
        code, out, _ = run_cli(capsys, [
            "validate", "--design", "parallel", "--icc-outcome", "1.2",
            "--outcome-sd", "1", "--covariate-sd", "1",
        ])
        assert code == 2
        assert "ICC out of" in out

    def test_clean_scenario_passes(self, capsys):
        code, out, _ = run_cli(capsys, [
            "validate", "--design", "parallel", "--icc-outcome", "0.02",
            "--icc-covariate", "0.1", "--outcome-sd", "1", "--covariate-sd", "1",
        ])
        assert code == 0
        assert "ok" in out


class TestDesignCommands:
    def test_gen_emits_csv(self, capsys):
        code, out, _ = run_cli(capsys, [
            "design", "gen", "--design", "stepped-wedge", "--periods", "6",
            "--clusters", "100", "--format", "csv",
            "--outcome-sd", "1", "--covariate-sd", "1",
        ])
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "n_clusters,p1,p2,p3,p4,p5,p6"
        assert len(lines) == 6

    def test_check_reports_matrix(self, capsys, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("n_clusters,p1,p2\n20,1,0\n20,0,1\n")
        doc = run_json(capsys, [
            "design", "check", "--design-csv", str(path),
            "--outcome-sd", "1", "--covariate-sd", "1",
        ])
        assert doc["result"]["rows"] == [[1, 0], [0, 1]]
        assert doc["result"]["n_total"] == 40


class TestSeriesOutput:
    def test_sweep_csv_columns(self, capsys):
        code, out, _ = run_cli(capsys, [
            "sweep", "--design", "parallel", "--cluster-size", "11",
            "--icc-outcome", "0.02", "--icc-covariate", "0.2",
            "--covariate-type", "binary", "--prevalence", "0.36",
            "--delta", "0.7", "--standardized", "--power", "0.9",
            "--axis", "m_vs_n", "--range", "8,11,2", "--format", "csv",
        ])
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "x,y,band_label"
        rows = [line.split(",") for line in lines[1:]]
        as_dict = {float(r[0]): float(r[1]) for r in rows}
        assert as_dict[8.0] == 48 and as_dict[11.0] == 35

    def test_emit_series_json_round_trip(self):
        series = [Series(label="assumed", x_name="m", y_name="power", points=((1.0, 0.3), (2.0, 0.4)))]
        doc = json.loads(emit_series(series, "json"))
        parsed = doc["result"]["series"][0]
        assert parsed["points"] == [[1.0, 0.3], [2.0, 0.4]]
        assert parsed["label"] == "assumed"

    def test_band_labels_present(self, capsys):
        code, out, _ = run_cli(capsys, [
            "sweep", "--design", "stepped-wedge", "--periods", "6", "--clusters", "100",
            "--icc-outcome", "0.022", "--cac-outcome", "0.5",
            "--icc-covariate", "0.1", "--cac-covariate", "0.9",
            "--covariate-type", "binary", "--prevalence", "0.2",
            "--delta", "-0.05", "--standardized",
            "--icc-outcome-range", "0.01,0.05",
            "--axis", "m_vs_power", "--range", "300,400,3", "--format", "csv",
        ])
        assert code == 0
        labels = {line.rsplit(",", 1)[1] for line in out.strip().split("\n")[1:]}
        assert labels == {"min", "assumed", "max"}


class TestHumanFormat:
    def test_variance_report_shown(self, capsys):
        code, out, _ = run_cli(capsys, golden.UMDEX_SOLVE_N_M11)
        assert code == 0
        assert "HTE design effect" in out
        assert "solved value    : 35" in out


class TestSimulateCommand:
    def test_small_run(self, capsys, tmp_path):
        out_path = tmp_path / "reps.csv"
        code, out, _ = run_cli(capsys, [
            "simulate", "--design", "parallel", "--cluster-size", "4", "--clusters", "8",
            "--outcome-sd", "1", "--covariate-sd", "1", "--delta", "0.8",
            "--reps", "100", "--seed", "1", "--replicates-out", str(out_path),
            "--format", "json",
        ])
        assert code == 0
        doc = json.loads(out)
        assert doc["result"]["reps"] == 100
        assert 0 <= doc["result"]["rejection_rate"] <= 1
        assert out_path.read_text().startswith("replicate,beta3_hat,z,reject")
