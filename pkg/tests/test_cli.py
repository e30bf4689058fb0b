import json
import math

import numpy as np
import pytest

from ratio_convexity.cli import build_parser, main, parse_samples_csv
from ratio_convexity.errors import UsageError
from ratio_convexity.ratio import laplace_log_ratio


# -------------------------------------------------------------- CSV parsing


def test_parse_csv_with_header(tmp_path):
    path = tmp_path / "small.csv"
    path.write_text("value\n1.5\n-2.0\n0.25\n")
    sample = parse_samples_csv(path)
    assert sample.count == 3
    assert sample.dimension == 1
    assert sample.data[:, 0].tolist() == [1.5, -2.0, 0.25]


def test_parse_csv_without_header(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("1.0,2.0\n3.0,4.0\n5.0,6.0\n")
    sample = parse_samples_csv(path)
    assert sample.count == 3
    assert sample.dimension == 2
    assert sample.data[2].tolist() == [5.0, 6.0]


def test_parse_csv_skips_blank_lines(tmp_path):
    path = tmp_path / "gaps.csv"
    path.write_text("x\n\n1.0\n\n\n2.0\n3.0\n")
    sample = parse_samples_csv(path)
    assert sample.count == 3


def test_parse_csv_ragged_row_reports_line_number(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("a,b\n1.0,2.0\n3.0\n")
    with pytest.raises(UsageError, match="row 3"):
        parse_samples_csv(path)


def test_parse_csv_bad_cell_reports_position(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1.0,2.0\n3.0,oops\n")
    with pytest.raises(UsageError, match="row 2, column 2"):
        parse_samples_csv(path)


def test_parse_csv_missing_file():
    with pytest.raises(UsageError, match="cannot read"):
        parse_samples_csv("/nonexistent/path.csv")


def test_parse_csv_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("x,y\n")
    with pytest.raises(UsageError, match="no data rows"):
        parse_samples_csv(path)


# ------------------------------------------------------------------ probe


def test_probe_gaussian_defaults(run_cli_json):
    payload = run_cli_json(["probe", "--model", "gaussian",
                            "--mu", "0", "--sigma", "1"])
    assert payload["schema_version"] == 1
    assert payload["command"] == "probe"
    assert sorted(payload["properties"]) == ["convex", "log-concave",
                                             "log-convex"]
    for verdict in payload["properties"].values():
        assert verdict["verdict"] == "no-violation-found"
        assert verdict["violation_count"] == 0


def test_probe_laplace_exact_witness(run_cli_json):
    payload = run_cli_json(["probe", "--model", "laplace", "--y-set", "1",
                            "--steps", "1", "--x-range", "-4,4",
                            "--points", "9", "--property", "convex"])
    verdict = payload["properties"]["convex"]
    assert verdict["verdict"] == "violation-found"
    assert verdict["violation_count"] == 1
    witness = verdict["witnesses"][0]
    assert witness["x"] == [-1.0]
    assert witness["y"] == [1.0]
    assert witness["step"] == 1.0
    expected = math.exp(-1) - math.exp(1)
    assert witness["margin"] == pytest.approx(expected, abs=1e-12)


def test_probe_series_matches_closed_form(run_cli_json):
    payload = run_cli_json(["probe", "--model", "laplace", "--y-set", "0.5",
                            "--x-range", "-2,2", "--points", "5",
                            "--steps", "0.5", "--property", "quasi-convex"])
    series = payload["series"]
    # --y-set values are literal: no sign expansion
    assert {s["y"][0] for s in series} == {0.5}
    for entry in series:
        y = entry["y"][0]
        for x, value in zip(entry["x"], entry["log_ratio"]):
            assert value == pytest.approx(laplace_log_ratio(x, y), abs=1e-14)


def test_probe_property_flag_forms(run_cli_json):
    payload = run_cli_json(["probe", "--model", "gaussian", "--mu", "0",
                            "--sigma", "1", "--x-range", "-2,2",
                            "--points", "5", "--y-set", "1", "--steps", "1",
                            "--property", "convex,concave",
                            "--property", "quasi-convex"])
    assert sorted(payload["properties"]) == ["concave", "convex", "quasi-convex"]
    # a Gaussian ratio is strictly convex, so the concave probe must object
    assert payload["properties"]["concave"]["verdict"] == "violation-found"


def test_probe_witness_cap(run_cli_json):
    payload = run_cli_json(["probe", "--model", "laplace",
                            "--property", "convex", "--witness-cap", "2"])
    verdict = payload["properties"]["convex"]
    assert len(verdict["witnesses"]) == 2
    assert verdict["violation_count"] > 2


def test_probe_kde_from_csv(run_cli_json, normal_csv):
    payload = run_cli_json(["probe", "--input", str(normal_csv)])
    assert payload["model"]["kind"] == "kde"
    assert payload["model"]["count"] == 60
    assert payload["model"]["bandwidth"][0] > 0.0
    # data-driven grid: centered near the sample mean, a few sd wide
    lo, hi, count = payload["grid"]["x_range"][0]
    assert lo < 0.0 < hi
    assert count >= 3


# -------------------------------------------------------------------- fit


def test_fit_gaussian_recovers_parameters(run_cli_json):
    payload = run_cli_json(["fit", "--model", "gaussian",
                            "--mu", "1", "--sigma", "2"])
    fit = payload["fit"]
    assert fit["failure_reason"] is None
    assert fit["gaussian"]["mean"][0] == pytest.approx(1.0, abs=1e-8)
    assert fit["gaussian"]["covariance"][0][0] == pytest.approx(2.0, rel=1e-8)
    assert fit["residual_max"] <= 1e-9


def test_fit_gaussian_full_covariance(run_cli_json):
    payload = run_cli_json(["fit", "--model", "gaussian", "--mu", "1,-1",
                            "--sigma", "2,0.5,0.5,1"])
    covariance = payload["fit"]["gaussian"]["covariance"]
    np.testing.assert_allclose(covariance, [[2.0, 0.5], [0.5, 1.0]], rtol=1e-8)


def test_fit_laplace_is_rejected(run_cli_json):
    payload = run_cli_json(["fit", "--model", "laplace"])
    fit = payload["fit"]
    assert fit["gaussian"] is None
    assert fit["failure_reason"].startswith("not log-quadratic")
    assert fit["residual_max"] > 0.1


def test_fit_quartic_is_rejected(run_cli_json):
    payload = run_cli_json(["fit", "--model", "quartic"])
    assert payload["fit"]["gaussian"] is None


def test_fit_kde_sample_has_loose_tolerance(run_cli_json, normal_csv):
    payload = run_cli_json(["fit", "--input", str(normal_csv)])
    assert payload["fit"]["fit_tol"] == 0.25
    assert payload["command"] == "fit"


# ------------------------------------------------------------------- test


def test_test_subcommand_full_payload(run_cli_json, normal_csv):
    payload = run_cli_json(["test", "--input", str(normal_csv),
                            "--reps", "99", "--seed", "5"])
    assert payload["schema_version"] == 1
    assert payload["sample"] == {"count": 60, "dimension": 1}
    report = payload["report"]
    assert report["statistic"] == pytest.approx(9.654638336626796, rel=1e-11)
    assert report["p_value"] == 0.54
    assert report["reps"] == 99
    assert [d["alpha"] for d in report["decisions"]] == [0.01, 0.05, 0.10]
    assert all(d["reject"] is False for d in report["decisions"])
    provenance = payload["provenance"]
    assert provenance["backend"] in ("compiled", "pure")
    assert provenance["grid"]["x_range"] == [[-3.0, 3.0, 61]]


def test_test_output_is_byte_identical(run_cli, normal_csv):
    argv = ["test", "--input", str(normal_csv), "--reps", "99", "--seed", "5"]
    code_a, text_a = run_cli(argv)
    code_b, text_b = run_cli(argv)
    assert code_a == code_b == 0
    assert text_a == text_b
    assert text_a.endswith("\n")


def test_test_alpha_override(run_cli_json, normal_csv):
    payload = run_cli_json(["test", "--input", str(normal_csv),
                            "--reps", "99", "--seed", "5",
                            "--alpha", "0.5"])
    decisions = payload["report"]["decisions"]
    assert decisions == [{"alpha": 0.5, "reject": False}]


def test_test_requires_input(run_cli):
    code, _ = run_cli(["test", "--model", "gaussian", "--mu", "0",
                       "--sigma", "1"])
    assert code == 2


# --------------------------------------------------------- counterexample


def test_counterexample_laplace(run_cli_json):
    payload = run_cli_json(["counterexample", "laplace"])
    assert payload["family"] == "laplace"
    assert payload["max_difference_vs_density"] <= 1e-14
    assert len(payload["branches"]) == 4
    for row in payload["rows"]:
        assert row["log_ratio"] == pytest.approx(
            laplace_log_ratio(row["x"], row["y"]), abs=1e-14)
        assert row["branch"] in payload["branches"].values()


def test_counterexample_quartic(run_cli_json):
    payload = run_cli_json(["counterexample", "quartic"])
    root6 = math.sqrt(6.0)
    assert payload["convexity_threshold"] == pytest.approx(root6, rel=1e-15)
    ys = {row["y"] for row in payload["rows"]}
    assert root6 in ys and -root6 in ys
    for row in payload["rows"]:
        if abs(row["y"]) >= root6:
            assert row["bracket"] >= 0.0
            assert row["bracket_sign"] >= 0
    # the advertised local failure: y = 0.1 at x = 1
    bad = [row for row in payload["rows"]
           if row["y"] == 0.1 and row["x"] == 1.0]
    assert bad and bad[0]["h_xx"] < 0.0


def test_counterexample_quartic_custom_shifts(run_cli_json):
    payload = run_cli_json(["counterexample", "quartic", "--y-set", "1",
                            "--x-range", "-1,1", "--points", "5"])
    ys = sorted({row["y"] for row in payload["rows"]})
    root6 = math.sqrt(6.0)
    assert ys == [-root6, 1.0, root6]  # threshold rows are always appended


# ------------------------------------------------------------- exit codes


def test_usage_errors_exit_2(run_cli, tmp_path):
    assert run_cli(["probe", "--model", "gaussian", "--mu", "0",
                    "--sigma", "-1"])[0] == 2
    assert run_cli(["probe", "--model", "gaussian", "--mu", "0",
                    "--sigma", "1", "--points", "2"])[0] == 2
    assert run_cli(["probe", "--model", "gaussian", "--mu", "0",
                    "--sigma", "1", "--x-range", "5,1"])[0] == 2
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("a,b\n1,2\n3\n")
    assert run_cli(["probe", "--input", str(ragged)])[0] == 2
    tiny = tmp_path / "tiny.csv"
    tiny.write_text("x\n1\n2\n3\n")
    code, _ = run_cli(["test", "--input", str(tiny)])
    assert code == 2


def test_unknown_subcommand_exits_2(run_cli):
    assert run_cli(["frobnicate"])[0] == 2


def test_numeric_failure_exits_3(run_cli, tmp_path):
    constant = tmp_path / "constant.csv"
    constant.write_text("x\n" + "5.0\n" * 30)
    code, _ = run_cli(["test", "--input", str(constant)])
    assert code == 3


def test_negative_numbers_parse_in_flag_values(run_cli_json):
    payload = run_cli_json(["probe", "--model", "gaussian", "--mu", "-2",
                            "--sigma", "1", "--x-range", "-6,-1",
                            "--points", "5", "--y-set", "-0.5",
                            "--steps", "0.5"])
    assert payload["grid"]["x_range"][0][:2] == [-6.0, -1.0]


def test_output_flag_writes_file(run_cli, tmp_path):
    target = tmp_path / "out.json"
    code, text = run_cli(["fit", "--model", "laplace",
                          "--output", str(target)])
    assert code == 0
    payload = json.loads(target.read_text())
    assert payload["command"] == "fit"


def test_help_exits_zero(run_cli):
    code, text = run_cli(["--help"])
    assert code == 0
    assert "probe" in text and "counterexample" in text


def test_parser_builds_and_rejects_empty(run_cli):
    parser = build_parser()
    assert parser.prog == "ratio-convexity"
    code, _ = run_cli([])
    assert code == 2


def test_main_accepts_none_argv(monkeypatch, capsys):
    monkeypatch.setattr("sys.argv", ["ratio-convexity", "counterexample",
                                     "laplace"])
    assert main() == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["family"] == "laplace"


def test_fixture_files_match_their_generators(data_dir):
    import importlib.util

    spec = importlib.util.spec_from_file_location(
        "make_fixtures", data_dir / "make_fixtures.py")
    generators = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(generators)

    for name, distribution, seed, count in generators.RECIPES:
        on_disk = (data_dir / name).read_text()
        assert on_disk == generators.render(distribution, seed, count), name
