import csv
import io
import json

import pytest

from crystalbec import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_cfg(tmp_path, **data):
    data.setdefault("schema_version", 1)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data))
    return str(path)


def table(out):
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_integrals_check(capsys, tmp_path):
    cfg = write_cfg(tmp_path, grid={"beta": [0.5, 2.0]})
    code, out, _ = run(capsys, "integrals-check", "--config", cfg, "--tol", "1e-10")
    assert code == 0
    rows = table(out)
    assert rows and all(float(r["rel_error [1]"]) < 1e-10 for r in rows)
    assert out.splitlines()[0].startswith("beta [1],integral")


def test_bifurcation_scan_summary(capsys, tmp_path):
    cfg = write_cfg(tmp_path, grid={"tau": {"min": 0.03, "max": 1.0, "count": 7, "log": True}})
    code, out, _ = run(capsys, "bifurcation-scan", "--config", cfg, "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["summary"]["tau_min"] == pytest.approx(0.0554095, abs=5e-7)
    assert data["summary"]["tau_star"] == pytest.approx(0.409698, abs=1e-5)
    assert len(data["rows"]) == 8


def test_condensate_solve(capsys, tmp_path):
    cfg = write_cfg(tmp_path, grid={"tau": [0.3], "rho_c_fraction": [0.0, 0.1]})
    code, out, _ = run(capsys, "condensate-solve", "--config", cfg)
    assert code == 0
    rows = table(out)
    assert len(rows) == 2
    assert all(abs(float(r["virial_residual [internal]"])) < 1e-8 for r in rows)


def test_mathieu_verify_chi_flag(capsys):
    code, out, _ = run(capsys, "mathieu-verify", "--chi", "2", "3", "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["chi"] for r in rows] == [2.0, 3.0]
    assert rows[1]["c_abs_error"] < rows[0]["c_abs_error"]


def test_landau_phase(capsys):
    code, out, _ = run(capsys, "landau-phase")
    assert code == 0
    rows = table(out)
    assert len(rows) == 15
    assert {r["scenario"] for r in rows} == {"two_transitions", "one_transition_superfluid", "degenerate"}


def test_planewave_band_flags_degenerate_row(capsys, tmp_path):
    cfg = write_cfg(tmp_path, grid={"p": [0.0, 0.5]}, params={"cutoff": 3})
    code, out, _ = run(capsys, "planewave-band", "--config", cfg)
    assert code == 0
    rows = table(out)
    assert rows[0]["flag"] == "" and rows[1]["flag"] == "DegenerateBranchError"


def test_empty_grid_is_config_error(capsys, tmp_path):
    cfg = write_cfg(tmp_path, grid={"beta": []})
    code, _, err = run(capsys, "integrals-check", "--config", cfg)
    assert code == 2 and "grid.beta" in err


@pytest.mark.parametrize("data, field", [
    ({"schema_version": 2}, "schema_version"),
    ({"schema_version": 1, "bogus": 1}, "bogus"),
    ({"schema_version": 1, "grid": {"tau": {"min": 1, "max": 0, "count": 3}}}, "grid.tau"),
    ({"schema_version": 1, "command": "landau-phase"}, "config.command"),
])
def test_bad_config_names_field(capsys, tmp_path, data, field):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    code, _, err = run(capsys, "bifurcation-scan", "--config", str(path))
    assert code == 2 and field in err


def test_numerical_failure_exit_code(capsys, tmp_path):
    cfg = write_cfg(tmp_path, grid={"tau": [0.3], "rho_c_fraction": [0.3]})
    code, _, err = run(capsys, "condensate-solve", "--config", cfg)
    assert code == 3 and "RegimeError" in err


def test_deterministic_and_thread_order(capsys):
    _, a, _ = run(capsys, "mathieu-verify", "--chi", "2", "2.5", "3", "4")
    _, b, _ = run(capsys, "mathieu-verify", "--chi", "2", "2.5", "3", "4", "--threads", "4")
    _, c, _ = run(capsys, "mathieu-verify", "--chi", "2", "2.5", "3", "4")
    assert a == b == c


def test_out_and_figure_files(capsys, tmp_path):
    out, fig = tmp_path / "scan.csv", tmp_path / "scan.png"
    code, stdout, _ = run(capsys, "bifurcation-scan", "--out", str(out), "--figure", str(fig))
    assert code == 0 and stdout == ""
    assert out.read_text().startswith("row,tau")
    assert "tau_min" in json.loads(out.with_suffix(".summary.json").read_text())
    assert fig.stat().st_size > 0


def test_acceptance_subset(capsys, tmp_path):
    cfg = write_cfg(tmp_path, params={"criteria": [1, 6]})
    code, out, err = run(capsys, "acceptance", "--config", cfg)
    assert code == 0
    assert err.count("[PASS]") == 2
