import json
import shutil
import subprocess
import sys
from fractions import Fraction

import pytest

from mvalloc.cli import main
from mvalloc.engine import available_backends
from mvalloc.fixtures import robot_model_text
from mvalloc.formats import (
    dump_model,
    dump_scheme,
    parse_assignment,
    parse_compacted,
    parse_scheme,
)
from mvalloc.model import (
    Component,
    HardwareNode,
    Kind,
    Platform,
    Repository,
    ResourceDemand,
    SystemArchitecture,
)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture()
def robot_file(tmp_path):
    path = tmp_path / "robot.json"
    path.write_text(robot_model_text())
    return str(path)


def _tiny_model(mem_demand, mem_cap):
    repo = Repository(
        components=[
            Component(
                id="only",
                kind=Kind.CPU,
                function="f",
                demand=ResourceDemand(Fraction(mem_demand), Fraction(1), 0, Fraction(2)),
            )
        ]
    )
    platform = Platform(nodes=[HardwareNode("h", Fraction(mem_cap), Fraction(10))])
    arch = SystemArchitecture(units=[], singletons=["only"])
    return dump_model(repo, platform, arch)


def test_example_writes_the_fixture(tmp_path, capsys):
    out = tmp_path / "model.json"
    code, stdout, _ = run(capsys, "example", "-o", str(out))
    assert code == 0
    assert out.read_text() == robot_model_text()
    assert str(out) in stdout


def test_validate_ok(robot_file, capsys):
    code, stdout, stderr = run(capsys, "validate", robot_file)
    assert code == 0
    assert stdout.strip() == "ok"
    assert stderr == ""


def test_validate_reports_diagnostics_on_stderr(tmp_path, capsys):
    doc = json.loads(robot_model_text())
    doc["repository"]["components"][0]["mem"] = "-1"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, stdout, stderr = run(capsys, "validate", str(path))
    assert code == 1
    assert "mem-negative" in stderr
    assert "problem(s) found" in stdout


def test_validate_parse_failure_is_exit_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{broken")
    code, _, stderr = run(capsys, "validate", str(path))
    assert code == 2
    assert "line 1" in stderr


def test_missing_file_is_exit_2(capsys):
    code, _, stderr = run(capsys, "validate", "/nonexistent/model.json")
    assert code == 2
    assert "error" in stderr


def test_compact_writes_the_high_layer(robot_file, tmp_path, capsys):
    out = tmp_path / "compact.json"
    code, stdout, _ = run(capsys, "compact", robot_file, "-o", str(out))
    assert code == 0
    model = parse_compacted(out.read_text())
    by_id = {u.id: u for u in model.units}
    assert len(by_id["FrontVision"].variants) == 6
    assert len(by_id["BottomVision"].variants) == 5
    assert len(model.singletons) == 5
    assert "2 unit(s)" in stdout


def test_solve_writes_the_optimal_scheme(robot_file, tmp_path, capsys):
    out = tmp_path / "scheme.json"
    code, stdout, _ = run(capsys, "solve", robot_file, "-o", str(out))
    assert code == 0
    scheme = parse_scheme(out.read_text())
    assert scheme.status == "optimal"
    assert scheme.objective_ms == Fraction(45)
    assert scheme.placements["FrontVision"].node == "H1"
    assert "objective 45 ms" in stdout


def test_solve_oracle_agrees(robot_file, tmp_path, capsys):
    out = tmp_path / "scheme.json"
    code, stdout, _ = run(capsys, "solve", robot_file, "-o", str(out), "--oracle")
    assert code == 0
    assert "oracle agrees" in stdout


def test_solve_python_backend(robot_file, tmp_path, capsys):
    out = tmp_path / "scheme.json"
    code, _, _ = run(capsys, "solve", robot_file, "-o", str(out), "--backend", "python")
    assert code == 0
    assert parse_scheme(out.read_text()).objective_ms == Fraction(45)


def test_solve_from_compacted_file(robot_file, tmp_path, capsys):
    compacted = tmp_path / "compact.json"
    assert run(capsys, "compact", robot_file, "-o", str(compacted))[0] == 0
    out = tmp_path / "scheme.json"
    code, _, _ = run(
        capsys, "solve", robot_file, "--compacted", str(compacted), "-o", str(out)
    )
    assert code == 0
    assert parse_scheme(out.read_text()).objective_ms == Fraction(45)


def test_solve_weights_change_the_objective(robot_file, tmp_path, capsys):
    weights = tmp_path / "weights.json"
    weights.write_text(json.dumps({"FrontVision": 2}))
    out = tmp_path / "scheme.json"
    code, _, _ = run(
        capsys, "solve", robot_file, "--weights", str(weights), "-o", str(out)
    )
    assert code == 0
    scheme = parse_scheme(out.read_text())
    assert scheme.status == "optimal"
    assert scheme.objective_ms > Fraction(45)


def test_solve_infeasible_still_writes_the_scheme(tmp_path, capsys):
    model = tmp_path / "model.json"
    model.write_text(_tiny_model(mem_demand=100, mem_cap=10))
    out = tmp_path / "scheme.json"
    code, stdout, _ = run(capsys, "solve", str(model), "-o", str(out))
    assert code == 3
    assert "infeasible" in stdout
    scheme = parse_scheme(out.read_text())
    assert scheme.status == "infeasible"
    assert scheme.placements == {}


def test_solve_timeout_is_exit_4(robot_file, tmp_path, capsys):
    out = tmp_path / "scheme.json"
    code, stdout, _ = run(
        capsys, "solve", robot_file, "-o", str(out), "--time-limit-ms", "0"
    )
    assert code == 4
    assert "timeout" in stdout
    assert parse_scheme(out.read_text()).status == "timeout"


def test_unfold_round_trip(robot_file, tmp_path, capsys):
    scheme_path = tmp_path / "scheme.json"
    assert run(capsys, "solve", robot_file, "-o", str(scheme_path))[0] == 0
    out = tmp_path / "assignment.json"
    code, stdout, _ = run(capsys, "unfold", robot_file, str(scheme_path), "-o", str(out))
    assert code == 0
    assignment = parse_assignment(out.read_text())
    assert assignment["MergeAndEnhanceGPU"] == "H1"
    assert assignment["DecisionCenter"] == "H2"
    assert assignment["Camera1"] == "H1"
    assert "13 component(s)" in stdout


def test_unfold_rejects_an_overloaded_scheme(robot_file, tmp_path, capsys):
    scheme_path = tmp_path / "scheme.json"
    assert run(capsys, "solve", robot_file, "-o", str(scheme_path))[0] == 0
    scheme = parse_scheme(scheme_path.read_text())
    for unit_id in ("FrontVision", "BottomVision"):
        scheme.placements[unit_id] = type(scheme.placements[unit_id])(
            variant=scheme.placements[unit_id].variant, node="H2"
        )
    scheme_path.write_text(dump_scheme(scheme))
    out = tmp_path / "assignment.json"
    code, _, stderr = run(capsys, "unfold", robot_file, str(scheme_path), "-o", str(out))
    assert code == 1
    assert "over gpu_threads" in stderr
    assert not out.exists()


def test_unfold_unknown_node_is_a_domain_error(robot_file, tmp_path, capsys):
    scheme_path = tmp_path / "scheme.json"
    assert run(capsys, "solve", robot_file, "-o", str(scheme_path))[0] == 0
    scheme = parse_scheme(scheme_path.read_text())
    placement = scheme.placements["VisionManager"]
    scheme.placements["VisionManager"] = type(placement)(variant=0, node="H9")
    scheme_path.write_text(dump_scheme(scheme))
    code, _, stderr = run(
        capsys, "unfold", robot_file, str(scheme_path), "-o", str(tmp_path / "a.json")
    )
    assert code == 1
    assert "unknown id" in stderr


def test_export_lp(robot_file, tmp_path, capsys):
    out = tmp_path / "problem.lp"
    code, stdout, _ = run(capsys, "export-lp", robot_file, "-o", str(out))
    assert code == 0
    text = out.read_text()
    assert text.startswith("\\ allocation MILP")
    assert text.endswith("End\n")
    assert "7 unit(s)" in stdout


def test_bench_smoke(tmp_path, capsys):
    json_out = tmp_path / "report.json"
    csv_out = tmp_path / "report.csv"
    code, stdout, _ = run(
        capsys,
        "bench",
        "--n",
        "3",
        "--seed",
        "1",
        "--reps",
        "2",
        "--warmup",
        "1",
        "--json",
        str(json_out),
        "--csv",
        str(csv_out),
    )
    assert code == 0
    assert "naive_cpu" in stdout
    assert "(mean solve time per model, ms)" in stdout
    payload = json.loads(json_out.read_text())
    assert len(payload["reports"]) == 1
    assert len(csv_out.read_text().strip().splitlines()) == 4


@pytest.mark.skipif("c" not in available_backends(), reason="extension not built")
def test_bench_both_backends(capsys):
    code, stdout, _ = run(
        capsys, "bench", "--n", "3", "--reps", "1", "--warmup", "0", "--backend", "both"
    )
    assert code == 0
    rows = [line for line in stdout.splitlines() if line.lstrip().startswith("3")]
    assert len(rows) == 2


def test_unrecognized_log_level_warns_but_runs(robot_file, capsys, monkeypatch):
    monkeypatch.setenv("ALLOC_LOG", "chatty")
    code, stdout, stderr = run(capsys, "validate", robot_file)
    assert code == 0
    assert stdout.strip() == "ok"
    assert "ALLOC_LOG" in stderr


def test_missing_output_flag_is_a_usage_error(robot_file, capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["compact", robot_file])
    assert excinfo.value.code == 2
    capsys.readouterr()


def test_console_script_is_installed():
    exe = shutil.which("mvalloc")
    if exe is None:
        pytest.skip("entry point not on PATH")
    proc = subprocess.run(
        [exe, "--help"], capture_output=True, text=True, timeout=60
    )
    assert proc.returncode == 0
    assert "validate" in proc.stdout


def test_module_main_guard(robot_file, tmp_path):
    proc = subprocess.run(
        [
            sys.executable,
            "-c",
            "import sys; from mvalloc.cli import main; sys.exit(main(sys.argv[1:]))",
            "validate",
            robot_file,
        ],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "ok"
