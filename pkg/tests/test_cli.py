import csv
import json
import math
import subprocess
import sys

import pytest

from hybridcv import __version__
from hybridcv.cli import DEFAULTS, main
from hybridcv.schemas import SCHEMAS, validate_file


def run(tmp_path, *args):
    return main(list(args) + ["--output-dir", str(tmp_path)])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_demo_transfer_outputs(tmp_path):
    # the default configuration misses its threshold, which is exit code 3
    assert run(tmp_path, "demo-transfer") == 3
    report = json.loads((tmp_path / "fidelity.json").read_text())
    assert report["passed"] is False
    assert report["fidelity"] == pytest.approx(0.94455, abs=5e-5)
    assert report["conditioned_mean_x"]["0"] == pytest.approx(0.0, abs=0.05)
    assert report["conditioned_mean_x"]["1"] == pytest.approx(1.0, abs=0.05)
    for name in ("fidelity.json", "wigner_mode2_given_x0.csv", "wigner_mode2_given_x1.csv"):
        assert validate_file(tmp_path / name) == []
    rows = read_csv(tmp_path / "wigner_mode2_given_x1.csv")
    assert len(rows) == DEFAULTS["demo-transfer"]["x_points"] * DEFAULTS["demo-transfer"]["p_points"]


def test_demo_transfer_threshold_and_spacing(tmp_path):
    assert run(tmp_path, "demo-transfer", "--delta", str(math.sqrt(2)), "--threshold", "0.99") == 0
    report = json.loads((tmp_path / "fidelity.json").read_text())
    assert report["fidelity"] == pytest.approx(0.99860, abs=5e-5)


def test_config_file_then_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"delta": 1.4142135623730951, "threshold": 0.5, "cutoff": 60}))
    assert run(tmp_path, "demo-transfer", "--config", str(cfg), "--cutoff", "80") == 0
    report = json.loads((tmp_path / "fidelity.json").read_text())
    assert report["delta"] == pytest.approx(math.sqrt(2))
    assert report["threshold"] == 0.5
    assert report["cutoff"] == 80


@pytest.mark.parametrize("args", [
    ["demo-transfer", "--n", "3", "--m", "2"],
    ["demo-transfer", "--squeeze", "0.0"],
    ["wigner", "--x-min", "2", "--x-max", "1"],
    ["demo-qft", "--a", "0"],
    ["demo-qft", "--a-prime", "2"],
    ["demo-qft", "--sigma-ratio", "0.6"],
    ["demo-error-correct", "--delta", "-1"],
    ["resources", "--d", "1"],
    ["wigner", "--cutoff", "1"],
])
def test_invalid_configuration_exits_2(tmp_path, args, capsys):
    assert run(tmp_path, *args) == 2
    assert capsys.readouterr().err.startswith("error:")
    # validation precedes any simulation output
    assert not any(p.suffix in (".csv", ".json") for p in tmp_path.iterdir())


def test_bad_config_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nope": 1}')
    assert run(tmp_path, "wigner", "--config", str(bad)) == 2
    bad.write_text("[1, 2]")
    assert run(tmp_path, "wigner", "--config", str(bad)) == 2
    assert run(tmp_path, "wigner", "--config", str(tmp_path / "missing.json")) == 2


def test_error_correct_demo(tmp_path):
    assert run(tmp_path, "demo-error-correct") == 0
    rows = read_csv(tmp_path / "displacement_sweep.csv")
    assert [float(r["delta_err"]) for r in rows] == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.2])
    assert all(r["in_guarantee"] == "true" for r in rows)
    assert validate_file(tmp_path / "error_correction.json") == []
    assert validate_file(tmp_path / "displacement_sweep.csv") == []


def test_error_correct_outside_window_exits_3(tmp_path, capsys):
    assert run(tmp_path, "demo-error-correct", "--delta-errs", "0.6") == 3
    assert "outside the window" in capsys.readouterr().err
    rows = read_csv(tmp_path / "displacement_sweep.csv")
    assert rows[0]["in_guarantee"] == "false"
    assert float(rows[0]["fidelity_after"]) < 0.9


def test_resources_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "resources") == 0
    assert run(b, "resources") == 0
    for name in ("breakeven.csv", "resources.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
        assert validate_file(a / name) == []
    data = json.loads((a / "resources.json").read_text())
    assert data["runtime_constant"] == pytest.approx(1 + math.log2(1000))
    assert data["bounds"]["label"].startswith("bound shape")


@pytest.mark.parametrize("state", ["vacuum", "packet", "cat"])
def test_wigner_states(tmp_path, state):
    grid = ["--x-min", "-7", "--x-max", "7", "--x-points", "141"]
    assert run(tmp_path, "wigner", "--state", state, "--cutoff", "60", *grid) == 0
    assert validate_file(tmp_path / "wigner.csv") == []
    rows = read_csv(tmp_path / "wigner.csv")
    assert len(rows) == 141 * 81
    w = [float(r["w"]) for r in rows]
    step = 0.1
    assert sum(w) * step * step == pytest.approx(1.0, abs=1e-3)
    if state == "vacuum":
        assert max(w) == pytest.approx(1 / math.pi)
    if state == "cat":
        assert min(w) < -0.1  # interference fringes go negative


def test_demo_qft_small(tmp_path):
    assert run(tmp_path, "demo-qft", "--n", "1", "--m", "1", "--a", "1") == 0
    rows = read_csv(tmp_path / "qft_sweep.csv")
    assert len(rows) == 1
    assert float(rows[0]["infidelity"]) == pytest.approx(0.0755110, abs=1e-6)
    report = json.loads((tmp_path / "qft_report.json").read_text())
    assert report["monotone"] is True
    assert validate_file(tmp_path / "qft_report.json") == []


def test_validate_subcommand(tmp_path, capsys):
    good = tmp_path / "breakeven.csv"
    good.write_text("d,epsilon,required_ratio\n2,0.1,438.6\n")
    assert main(["validate", str(good)]) == 0
    bad = tmp_path / "other.csv"
    bad.write_text("d,epsilon\n2,0.1\n")
    assert main(["validate", str(bad), "--schema", "breakeven.csv"]) == 2
    assert "header" in capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "hybridcv", "--version"], capture_output=True,
                         text=True, check=True)
    assert __version__ in out.stdout


def test_every_output_has_a_schema():
    names = {"fidelity.json", "wigner_mode2_given_x0.csv", "wigner_mode2_given_x1.csv",
             "qft_sweep.csv", "qft_report.json", "displacement_sweep.csv",
             "error_correction.json", "breakeven.csv", "resources.json", "wigner.csv"}
    assert names <= set(SCHEMAS)
