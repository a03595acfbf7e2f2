import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from conftest import GOLDEN, SCENARIOS, split_parts

from kmf.cli import main
from kmf.service import Service
from kmf.syntax import print_canonical

DATA = Path(__file__).parent / "data"
BUS = str(SCENARIOS / "bus.kmf")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_plan_prints_golden_json(capsys):
    code, out, _ = run(capsys, "plan", BUS, "--bound", "100000")
    assert code == 0
    assert out == (GOLDEN / "bus_plan.json").read_text()


def test_plan_failure_exit_1(capsys):
    code, out, _ = run(capsys, "plan", BUS, "--bound", "1")
    assert code == 1
    assert json.loads(out)["reason"] == "bound-hit"


def test_parse_error_exit_2(capsys, tmp_path):
    broken = tmp_path / "broken.kmf"
    broken.write_text("state s {\n  at(p1, bs1)\n}\n")
    code, _, err = run(capsys, "parse", str(broken))
    assert code == 2
    assert err.startswith(f"error: {broken}:3:1: ")


def test_missing_file_and_bad_flags(capsys):
    assert run(capsys, "parse", "/no/such.kmf")[0] == 2
    assert run(capsys, "plan", BUS, "--bound", "0")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_parse_prints_canonical(capsys, bus):
    code, out, _ = run(capsys, "parse", BUS)
    assert code == 0 and out == print_canonical(bus)


def test_split_files_merge(capsys, tmp_path, bus):
    paths = []
    for part, body in split_parts(bus).items():
        p = tmp_path / f"{part}.kmf"
        p.write_bytes(body)
        paths.append(str(p))
    code, out, _ = run(capsys, "plan", *paths)
    assert code == 0 and out == (GOLDEN / "bus_plan.json").read_text()


def test_validate(capsys, tmp_path):
    assert run(capsys, "validate", BUS)[:2] == (0, "ok\n")
    bad = tmp_path / "bad.kmf"
    bad.write_text("state s { is_passenger(p1). is_poi(bs1). at(bs1, p1). }")
    code, out, _ = run(capsys, "validate", str(bad))
    assert code == 1
    assert out.count("violation:") == 1


def test_metrics(capsys):
    code, out, _ = run(capsys, "metrics", BUS)
    doc = json.loads(out)
    assert code == 0
    assert Fraction(doc["ratio"]) == Fraction(4, 5)
    assert 0 <= doc["index"] <= 1


def test_metrics_with_library_flag(capsys, library_dir):
    code, out, _ = run(capsys, "metrics", str(SCENARIOS / "truck.kmf"), "--library", str(library_dir))
    assert code == 0 and json.loads(out)["ratio"] == "1/2"


def test_exec_matches_golden_log(capsys):
    code, out, err = run(capsys, "exec", BUS, "--script", str(DATA / "displaced.json"), "--run-id", "run-1")
    assert code == 0
    assert out == (GOLDEN / "replan_displaced.jsonl").read_text()
    assert "status: done" in err
    code, out, _ = run(capsys, "exec", BUS, "--script", str(DATA / "capacity_zero.json"), "--run-id", "run-1")
    assert code == 1
    assert out == (GOLDEN / "replan_capacity.jsonl").read_text()


def test_gen_pddl_stdout(capsys):
    code, out, _ = run(capsys, "gen-pddl", BUS, "--name", "kmf")
    assert code == 0
    assert out == (GOLDEN / "bus_domain.pddl").read_text() + "\n" + (GOLDEN / "bus_problem.pddl").read_text()


def test_cli_and_http_artifacts_identical(capsys, tmp_path, bus):
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "gen-pddl", BUS, "--out", str(out_dir))
    assert code == 0
    cli_uris = json.loads(out)

    service = Service(tmp_path / "store")
    for part, body in split_parts(bus).items():
        service.handle("PUT", f"/models/bus/{part}", body)
    http_uris = service.handle("POST", "/models/bus/pddl").json()
    assert cli_uris == http_uris
    assert service.handle("GET", http_uris["domain_uri"]).body == (out_dir / "domain.pddl").read_bytes()
    assert service.handle("GET", http_uris["problem_uri"]).body == (out_dir / "problem.pddl").read_bytes()


def test_mapping_error_exit_1(capsys, tmp_path):
    m = tmp_path / "m.kmf"
    m.write_text(
        "state s { is_a(x). c(x, 2). } initial s. goal s."
        " transition t { pre { c(X, N). } compute { multiply(N, 2, M). } }"
        " rules { types { is_a. } fluents { c/2. } }"
    )
    code, _, err = run(capsys, "gen-pddl", str(m))
    assert code == 1 and "multiply" in err


@pytest.mark.parametrize("argv", [["--help"], ["plan", "--help"]])
def test_help_exits_zero(capsys, argv):
    assert run(capsys, *argv)[0] == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kmf", "plan", BUS], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout == (GOLDEN / "bus_plan.json").read_text()
