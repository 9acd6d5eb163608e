"""
Tests for the command line interface.
"""
import io
import json
import math

import pytest

from app import cli
from app.core.config import settings
from app.core.errors import NumericalFailure
from app.services import reports


def run(*argv):
    out = io.StringIO()
    code = cli.run(list(argv), out=out)
    text = out.getvalue()
    return code, text


def run_json(*argv):
    code, text = run(*argv)
    return code, json.loads(text)


def test_threshold_payload():
    code, payload = run_json("bridge", "threshold", "--d", "3")
    assert code == 0
    assert payload["lambda_star_exact"] == "5/12"
    assert payload["harmonic_exact"] == "11/6"


def test_jm_check_exit_codes():
    code, payload = run_json("jm", "check", "--stdlib", "pauli_xz", "--param", "eta=0.7")
    assert code == 0
    assert payload["verdict"] == "jointly_measurable"
    assert payload["verification"]["passed"]
    code, payload = run_json("jm", "check", "--stdlib", "pauli_xz", "--param", "eta=0.72")
    assert code == 1
    assert payload["verdict"] == "not_jointly_measurable"


def test_jm_check_dump(tmp_path):
    dump = tmp_path / "problem.json"
    code, _ = run("jm", "check", "--stdlib", "pauli_xz", "--dump", str(dump))
    assert code == 1
    layout = json.loads(dump.read_text())
    assert len(layout["blocks"]) == 4


def test_jm_robustness_payload():
    code, payload = run_json("jm", "robustness", "--stdlib", "pauli_xz")
    assert code == 0
    assert payload["lambda_max"] == pytest.approx(1 / math.sqrt(2), abs=1e-5)


def test_jm_parent_refused_is_negative():
    code, payload = run_json("jm", "parent", "--stdlib", "pauli_xz", "--lam", "0.9")
    assert code == 1
    assert payload["error"] == "NotJointlyMeasurable"


def test_ft_eval_orthogonal_axes():
    code, payload = run_json("ft", "eval", "--x1", "0.6,0,0", "--x2", "0,0.6,0", "--x3", "0,0,0.6")
    assert code == 0
    assert payload["verdict"] == "steerable"
    assert payload["value"] == pytest.approx(2.4 * math.sqrt(3), abs=1e-9)
    code, payload = run_json("ft", "eval", "--x1", "0.5,0,0", "--x2", "0,0.5,0", "--x3", "0,0,0.5")
    assert code == 1


def test_ft_eval_needs_all_vectors():
    code, payload = run_json("ft", "eval", "--x1", "0.5,0,0")
    assert code == 2
    assert payload["error"] == "SchemaError"


def test_ft_eval_from_stdlib_assemblage():
    code, payload = run_json("ft", "eval", "--stdlib", "pauli_xyz", "--eta", "0.6")
    assert code == 0
    assert payload["value"] == pytest.approx(2.4 * math.sqrt(3), abs=1e-9)


def test_schema_error_reports_pointer(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dim": 2, "povms": [["not a matrix"]]}))
    code, payload = run_json("jm", "check", "--input", str(path))
    assert code == 2
    assert payload["error"] == "SchemaError"
    assert payload["pointer"].startswith("/povms/0")


def test_invalid_json_is_a_schema_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{")
    code, payload = run_json("steer", "check", "--input", str(path))
    assert code == 2
    assert payload["error"] == "SchemaError"


def test_argument_errors_exit_with_two():
    with pytest.raises(SystemExit) as info:
        cli.run(["jm"], out=io.StringIO())
    assert info.value.code == 2


def test_numerical_failure_exits_with_three(monkeypatch):
    def failing(d):
        raise NumericalFailure("stalled")

    monkeypatch.setattr(reports, "threshold", failing)
    code, payload = run_json("bridge", "threshold", "--d", "2")
    assert code == 3
    assert payload["error"] == "NumericalFailure"


def test_emitted_json_is_accepted_back(tmp_path):
    code, payload = run_json("stdlib", "mub", "--param", "d=3", "--param", "count=2")
    assert code == 0
    assert payload["dim"] == 3
    measurements = tmp_path / "mub.json"
    measurements.write_text(json.dumps(payload))
    code, _ = run_json("jm", "check", "--input", str(measurements))
    assert code == 1

    code, payload = run_json("bridge", "to-assemblage", "--input", str(measurements))
    assert code == 0
    assemblage = tmp_path / "asm.json"
    assemblage.write_text(json.dumps(payload))
    code, result = run_json("steer", "check", "--input", str(assemblage))
    assert code == 0
    assert result["verdict"] == "steerable"
    code, back = run_json("bridge", "to-measurements", "--input", str(assemblage))
    assert code == 0
    assert back["dim"] == 3


def test_duality_check_with_seeded_state():
    code, payload = run_json("bridge", "duality-check", "--stdlib", "pauli_xyz", "--lam", "0.4", "--seed", "7")
    assert code == 0
    assert payload["passed"]


def test_tolerance_override_is_restored():
    before = settings.feasibility_tol
    run("jm", "check", "--stdlib", "pauli_xz", "--param", "eta=0.5", "--tol", "1e-6")
    assert settings.feasibility_tol == before


def test_lhv_scan_csv_to_stdout():
    code, text = run(
        "lhv", "scan",
        "--s-grid", repr(1 / math.sqrt(2)),
        "--ua-grid", "1", "--ua-random", "0",
        "--classes", "noisy_bell", "--jobs", "1", "--csv", "-",
    )
    assert code == 0
    header, row = text.strip().splitlines()
    assert header.startswith("s,lambda_max")
    assert float(row.split(",")[1]) == pytest.approx(0.6595, abs=2e-3)


def test_lhv_decompose_payload():
    code, payload = run_json("lhv", "decompose", "--s", repr(1 / math.sqrt(2)), "--lam", "0.6", "--classes", "noisy_bell")
    assert code == 0
    assert payload["feasible"]
    assert payload["weights_total"] == pytest.approx(1.0)


@pytest.mark.parametrize(
    "argv",
    [
        ("bridge", "duality-check", "--stdlib", "pauli_xyz", "--lam", "0.4", "--seed", "7"),
        ("jm", "robustness", "--stdlib", "pauli_xz"),
        ("steer", "check", "--stdlib", "pauli_xyz", "--eta", "0.5"),
    ],
)
def test_repeated_runs_are_byte_identical(argv):
    first, second = run(*argv), run(*argv)
    assert first == second
