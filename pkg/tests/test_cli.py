import csv
import json
import subprocess
import sys

import pytest

from modeqfi.cli import CSV_FIELDS, RunConfig, list_scenarios, main, parse_config, render
from modeqfi.errors import NumericalError, ValidationError


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_single_run_json(tmp_path):
    cfg = write(tmp_path, "scenario = displaced-gaussian\nw = 1\nstate = coherent\nN = 4\n")
    out = tmp_path / "out.json"
    assert main(["run", "--config", str(cfg), "--output", str(out)]) == 0
    (record,) = json.loads(out.read_text())
    assert record["total"] == pytest.approx(16.0, abs=1e-8)
    assert record["params"] == {"N": 4, "state": "coherent", "w": 1}
    assert record["oracle"] is None


def test_superresolution_sweep_csv(tmp_path):
    cfg = write(tmp_path, "\n".join([
        "# thermal sources, sigma = 1",
        "scenario = superresolution",
        "sigma = 1",
        "N = 3",
        "state = thermal",
        "sweep.param = s",
        "sweep.lo = 0.2",
        "sweep.hi = 4.0",
        "sweep.n = 20",
        "format = csv",
    ]))
    out = tmp_path / "sweep.csv"
    assert main(["run", "--config", str(cfg), "--output", str(out), "--oracle"]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == CSV_FIELDS
    assert len(rows) == 20
    assert [float(r["param_value"]) for r in rows] == pytest.approx([0.2 + 0.2 * i for i in range(20)])
    for r in rows:
        assert abs(float(r["total"]) - float(r["closed_form"])) < 1e-8
        assert float(r["oracle_dev"]) < 1e-7 * float(r["total"])


def test_invalid_sweep_writes_nothing(tmp_path):
    cfg = write(tmp_path, "scenario = superresolution\nsweep.param = s\nsweep.lo = 0.2\nsweep.hi = 4\nsweep.n = 1\n")
    out = tmp_path / "out.json"
    assert main(["run", "--config", str(cfg), "--output", str(out)]) == 2
    assert not out.exists()


@pytest.mark.parametrize("text", [
    "w = 1\n",
    "scenario = nowhere\n",
    "scenario = displaced-gaussian\nformat = xml\n",
    "scenario = displaced-gaussian\nsweep.param = w\nsweep.lo = 2\nsweep.hi = 1\nsweep.n = 3\n",
    "scenario = displaced-gaussian\nsweep.param = w\nsweep.n = 3\n",
    "scenario = displaced-gaussian\nsweep.step = 3\n",
    "scenario = displaced-gaussian\nseed = abc\n",
    "scenario = displaced-gaussian\njust a line\n",
])
def test_malformed_configs(tmp_path, text):
    cfg = write(tmp_path, text)
    out = tmp_path / "out.json"
    assert main(["run", "--config", str(cfg), "--output", str(out)]) == 2
    assert not out.exists()


def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.cfg")]) == 2


def test_unphysical_params_exit_2(tmp_path):
    cfg = write(tmp_path, "scenario = displaced-gaussian\nw = -1\n")
    assert main(["run", "--config", str(cfg), "--output", str(tmp_path / "o.json")]) == 2


def test_numerical_failure_exit_3(tmp_path):
    cfg = write(tmp_path, "scenario = superresolution\ns = 1e-9\n")
    out = tmp_path / "o.json"
    assert main(["run", "--config", str(cfg), "--output", str(out)]) == 3
    assert not out.exists()


def test_determinism(tmp_path):
    cfg = write(tmp_path, "scenario = hg-waist\nseed = 7\nN1 = 2\nsweep.param = r2\nsweep.lo = 0\nsweep.hi = 0.6\n"
                          "sweep.n = 4\nstate2 = squeezed\noracle = true\n")
    outs = [tmp_path / "a.json", tmp_path / "b.json"]
    for out in outs:
        assert main(["run", "--config", str(cfg), "--output", str(out)]) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()


def test_stdout_and_format_override(tmp_path, capsys):
    cfg = write(tmp_path, "scenario = mach-zehnder\nN1 = 4\n")
    assert main(["run", "--config", str(cfg), "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    fields = lines[1].split(",")
    assert fields[1] == "" and fields[-1] == ""


def test_parse_config_values():
    cfg = parse_config("scenario = oam-linear-phase  # comment\nk = 3\nN = 4.5\nstate = 'coherent'\noracle = yes\n")
    assert cfg.params == {"k": 3, "N": 4.5, "state": "coherent"}
    assert cfg.oracle is True and cfg.format == "json" and cfg.sweep is None


def test_render_reasserts_total():
    record = {k: None for k in CSV_FIELDS} | {"classical": 1.0, "unitary": 1.0, "vacuum": 1.0, "total": 4.0}
    with pytest.raises(NumericalError):
        render([record], "json")


def test_run_config_validation():
    with pytest.raises(ValidationError):
        RunConfig("displaced-gaussian", format="yaml")


def test_list_is_alphabetical(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    names = [line for line in out.splitlines() if line and not line.startswith(" ")]
    assert names == sorted(names)
    assert "mach-zehnder" in names and "superresolution" in names
    assert out == list_scenarios()


def test_module_entry_point(tmp_path):
    result = subprocess.run([sys.executable, "-m", "modeqfi", "list"], capture_output=True, text=True, check=True)
    assert "hg-waist" in result.stdout
