import io
import json
import subprocess
import sys

import numpy as np
import pytest

from udwharvest import cli
from udwharvest.cli import CSV_COLUMNS, SweepRequest, figure2_request, main, read_sweep_csv, run_sweep
from udwharvest.errors import InvalidParameter, NonConvergence

from conftest import make_config


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_compute_schema(tmp_path, capsys):
    path = _write(tmp_path, "c.json", make_config().to_dict())
    assert main(["compute", "--config", path]) == 0
    doc = json.loads(capsys.readouterr().out)
    for key in ("L", "L_AB_re", "L_AB_im", "M_re", "M_im", "M_plus_re", "M_plus_im",
                "M_minus_re", "M_minus_im", "negativity", "errors", "config"):
        assert key in doc
    assert doc["config"]["coupling"] == "derivative"
    assert doc["negativity"] == max(abs(complex(doc["M_re"], doc["M_im"])) - doc["L"], 0.0)


def test_compute_writes_out_file(tmp_path):
    path = _write(tmp_path, "c.json", make_config().to_dict())
    out = tmp_path / "o.json"
    assert main(["compute", "--config", path, "--out", str(out), "--rel-tol", "1e-6"]) == 0
    assert "M_re" in json.loads(out.read_text())


def test_unsupported_dimension_exit_code(tmp_path, capsys):
    d = make_config().to_dict()
    d["dim"] = 4
    assert main(["compute", "--config", _write(tmp_path, "c.json", d)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "UnsupportedDimension"


@pytest.mark.parametrize("edit,code", [({"smaering": 0.1}, "InvalidParameter"),
                                       ({"ir_cutoff": 0.1}, "ForbiddenCutoff"),
                                       ({"smearing": -1.0}, "NegativeWidth")])
def test_config_errors(tmp_path, capsys, edit, code):
    d = make_config().to_dict()
    d.update(edit)
    assert main(["compute", "--config", _write(tmp_path, "c.json", d)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == code


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    assert main(["compute", "--config", str(path)]) == 2


def test_zero_coupling(tmp_path, capsys):
    d = make_config(coupling_strength=0.0).to_dict()
    assert main(["compute", "--config", _write(tmp_path, "c.json", d)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert all(doc[k] == 0 for k in ("L", "M_re", "M_im", "L_AB_re", "negativity"))


def test_nonconvergence_exit_code(tmp_path, capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise NonConvergence("forced", 0j, 1.0)

    monkeypatch.setattr(cli, "compute_elements", boom)
    path = _write(tmp_path, "c.json", make_config().to_dict())
    assert main(["compute", "--config", path]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "NonConvergence"


def _sweep_doc(points=2):
    return {"base": make_config().to_dict(), "axis": "delay", "start": 0.0, "stop": 10.0,
            "points": points}


def test_trivial_sweep(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", _write(tmp_path, "s.json", _sweep_doc()), "--out", str(out)]) == 0
    lines = out.read_text().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 4 and lines[-1] == ""


def test_sweep_request_validation():
    with pytest.raises(InvalidParameter):
        SweepRequest.from_dict(dict(_sweep_doc(), points=1))
    with pytest.raises(InvalidParameter):
        SweepRequest.from_dict(dict(_sweep_doc(), start=3.0, stop=1.0))
    with pytest.raises(InvalidParameter):
        SweepRequest.from_dict(dict(_sweep_doc(), axis="gap"))
    with pytest.raises(InvalidParameter):
        SweepRequest.from_dict(dict(_sweep_doc(), outputs=["L", "Q"]))
    with pytest.raises(InvalidParameter):
        SweepRequest.from_dict(dict(_sweep_doc(), extra=1))


def test_separation_axis():
    req = SweepRequest.from_dict(dict(_sweep_doc(5), axis="separation", start=1.0, stop=3.0))
    assert [c.separation for c in req.configs()] == [1.0, 1.5, 2.0, 2.5, 3.0]


def test_figure_presets():
    for panel, (dim, coupling) in zip("abcd", [(1, "derivative"), (3, "derivative"),
                                              (1, "amplitude"), (3, "amplitude")]):
        req = figure2_request(panel)
        assert (req.base.dim, req.base.coupling.value) == (dim, coupling)
        assert (req.base.gap, req.base.separation, req.base.smearing) == (4.0, 5.0, 0.05)
        assert (req.start, req.stop, req.points) == (0.0, 10.0, 201)
    assert figure2_request("c").base.ir_cutoff == 0.02
    with pytest.raises(InvalidParameter):
        figure2_request("e")


def test_preset_is_deterministic_and_thread_order_independent():
    req = figure2_request("a")
    runs = []
    for threads in (1, 1, 4):
        buf = io.StringIO()
        assert run_sweep(req, buf, threads=threads) == 0
        runs.append(buf.getvalue())
    assert runs[0] == runs[1] == runs[2]
    text = runs[0]
    assert "\r" not in text and '"' not in text
    data = read_sweep_csv(text)
    assert len(data["axis_value"]) == 201
    assert np.all(np.diff(data["axis_value"]) > 0)
    # the negativity column is reproduced exactly from the emitted columns
    assert np.array_equal(np.maximum(data["abs_M"] - data["L"], 0.0), data["negativity"])


def test_seventeen_significant_digits():
    buf = io.StringIO()
    run_sweep(SweepRequest.from_dict(_sweep_doc()), buf)
    row = buf.getvalue().split("\n")[2].split(",")
    assert float(row[0]) == 10.0
    value = float(row[1])
    assert row[1] == format(value, ".17g")


def test_failed_point_emits_sentinel(monkeypatch):
    real = cli.compute_elements

    def flaky(config, spec):
        if config.delay > 5:
            raise NonConvergence("forced", 0j, 1.0)
        return real(config, spec)

    monkeypatch.setattr(cli, "compute_elements", flaky)
    buf = io.StringIO()
    assert run_sweep(SweepRequest.from_dict(_sweep_doc(3)), buf) == 3
    rows = buf.getvalue().strip().split("\n")
    assert len(rows) == 4
    assert rows[-1].endswith("error=NonConvergence") and rows[-1].startswith("10,")
    assert "error" not in rows[1]


def test_module_entry_point(tmp_path):
    path = _write(tmp_path, "c.json", make_config().to_dict())
    proc = subprocess.run([sys.executable, "-m", "udwharvest", "compute", "--config", path],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "negativity" in proc.stdout


def test_oracle_check_command(tmp_path, capsys):
    d = make_config("derivative_1d", smearing=0.3, delay=2.0, separation=1.0).to_dict()
    assert main(["oracle-check", "--config", _write(tmp_path, "c.json", d)]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_signal_check_command(capsys):
    assert main(["signal-check"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["passed"] and doc["commuting_signal_norm"] <= 1e-12
