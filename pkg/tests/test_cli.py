import csv
import json
import subprocess
import sys

import pytest

from dform.cli import build_parser, main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_count_json(capsys):
    code, out, _ = run(["count", "--form", "circle", "--m", "100", "--json"], capsys)
    assert code == 0
    env = json.loads(out)
    assert env["tool"] == "dform" and env["command"] == "count"
    assert env["payload"]["count"] == 317
    assert env["form"]


def test_count_inline_json(capsys):
    doc = json.dumps({"n": 2, "coeffs": {"2,0": 1, "0,2": 1}})
    code, out, _ = run(["count", "--form", doc, "--m", "5", "--json"], capsys)
    assert code == 0 and json.loads(out)["payload"]["count"] == 21


def test_count_form_file(tmp_path, capsys):
    p = tmp_path / "q.json"
    p.write_text(json.dumps({"n": 2, "coeffs": {"4,0": 2, "2,2": 5, "0,4": 2}}))
    code, out, _ = run(["count", "--form", str(p), "--m", "2"], capsys)
    assert code == 0
    assert "count" in out


def test_analyze(capsys):
    code, out, _ = run(["analyze", "--form", "circle", "--json"], capsys)
    assert code == 0
    p = json.loads(out)["payload"]
    assert p["minimization"]["m_estimate"] == pytest.approx(2.0)
    assert p["exceptional"]["a_prime"] == pytest.approx(1.0)
    assert p["NS"] == pytest.approx(1.0)


def test_volume_report_files(tmp_path, capsys):
    code, out, _ = run(["volume", "--form", "quartic", "--samples", "2000", "--out-dir", str(tmp_path), "--json"], capsys)
    assert code == 0
    files = json.loads(out)["payload"]["files"]
    assert (tmp_path / "volume.csv").exists() and (tmp_path / "volume_profile.png").exists()
    assert len(files) == 2
    rows = list(csv.DictReader(open(tmp_path / "volume.csv")))
    assert rows[0]["method"]


def test_volume_infinite_serializes(capsys):
    code, out, _ = run(["volume", "--form", "hyperbolic", "--samples", "1000", "--json"], capsys)
    assert code == 0
    est = json.loads(out)["payload"]["estimates"][0]
    assert est["infinite"] and est["value"] is None


def test_reduce(capsys):
    code, out, _ = run(["reduce", "--form", "quartic", "--json"], capsys)
    assert code == 0
    p = json.loads(out)["payload"]
    assert p["M_upper"] <= p["bound"]


def test_verify_single_check(tmp_path, capsys):
    code, out, _ = run(["verify", "--check", "scaling_laws", "--form", "circle", "--trials", "2", "--out-dir", str(tmp_path), "--json"], capsys)
    assert code == 0
    assert (tmp_path / "checks.csv").exists() and (tmp_path / "margins.png").exists()


def test_verify_needs_form(capsys):
    code, _, err = run(["verify", "--check", "determinant_sum"], capsys)
    assert code == 2
    assert json.loads(err)["error"] == "FormError"


def test_failed_check_exit_code(capsys):
    code, out, _ = run(["verify", "--check", "eps_family", "--p", "5", "11", "101", "--json"], capsys)
    assert code == 1
    assert json.loads(out)["payload"]["all_passed"] is False


def test_experiment_report(tmp_path, capsys):
    code, out, _ = run(["experiment", "--form", "circle", "--m-min", "100", "--m-max", "1e5", "--points", "4",
                        "--out-dir", str(tmp_path), "--json"], capsys)
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "asymptotics.csv")))
    assert rows[0]["count"] == "317"
    assert (tmp_path / "asymptotics.png").stat().st_size > 0


def test_example_documents(capsys):
    code, out, _ = run(["example", "--family", "integral", "--p", "5", "--json"], capsys)
    assert code == 0
    doc = json.loads(out)["payload"]["document"]
    assert doc["n"] == 2
    code, _, err = run(["example", "--family", "integral"], capsys)
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["count", "--form", "nope", "--m", "1"],
    ["count", "--form", '{"n": 2, "coeffs": {"2,0": 1, "1,0": 1}}', "--m", "1"],
    ["count", "--form", "hyperbolic", "--m", "1", "--strategy", "certified"],
])
def test_bad_input_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert "message" in json.loads(err)


def test_parser_lists_commands():
    p = build_parser()
    for cmd in ("analyze", "volume", "count", "reduce", "verify", "experiment", "example"):
        assert p.parse_args([cmd] + (["--form", "circle"] if cmd not in ("verify", "example") else [])
                            + (["--m", "1"] if cmd == "count" else [])).command == cmd


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "dform.cli", "count", "--form", "circle", "--m", "10", "--json"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["payload"]["count"] == 37
