import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from edpqm import tables
from edpqm.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_spectrum_free_oscillator(capsys):
    code, out, _ = run(["spectrum", "--family", "linear", "--gamma", "0", "--nmax", "3"], capsys)
    assert code == 0
    assert [float(r["energy"]) for r in rows(out)] == [0.5, 1.5, 2.5, 3.5]


def test_spectrum_figure_dataset(capsys):
    code, out, _ = run(["spectrum", "--family", "linear", "--gamma=0,0.1,-0.1,0.2,-0.2", "--nmax", "8"], capsys)
    assert code == 0
    recs = rows(out)
    assert len(recs) == 45
    assert list(recs[0]) == ["family", "gamma", "n", "energy", "lam", "norm_sq"]


def test_spectrum_quadratic_partial(capsys):
    code, out, err = run(["spectrum", "--family", "quadratic", "--gamma", "0.1", "--nmax", "5"], capsys)
    assert code == 3
    assert [r["n"] for r in rows(out)] == ["0", "1", "2"]
    assert "n=3" in err


def test_json_mirrors_csv(capsys):
    argv = ["sumrule", "--gamma", "0.25", "--nmax", "3"]
    _, out_csv, _ = run(argv, capsys)
    _, out_json, _ = run(argv + ["--format", "json"], capsys)
    a, b = rows(out_csv), json.loads(out_json)
    assert len(a) == len(b)
    for r, j in zip(a, b):
        assert float(r["partial_sum"]) == pytest.approx(j["partial_sum"], rel=1e-11)


def test_deterministic_output(capsys):
    argv = ["closure", "--family", "sqrt", "--gamma=0.1,-0.1", "--nmax", "5"]
    _, first, _ = run(argv, capsys)
    _, second, _ = run(argv, capsys)
    assert first == second


def test_tables_table1_passes(capsys):
    code, out, _ = run(["tables", "--table", "1"], capsys)
    assert code == 0
    recs = rows(out)
    assert list(recs[0]) == ["table_id", "row_key", "col_key", "computed", "paper", "abs_diff", "status"]
    assert len(recs) == 40 and all(r["status"] == "PASS" for r in recs)
    cell = next(r for r in recs if r["row_key"] == "0.05" and r["col_key"] == "nmax3")
    assert cell["computed"] == "0.481445"


def test_tables_fail_gives_exit_3(tmp_path, monkeypatch, capsys):
    src = tables.golden_dir()
    for f in src.glob("*.csv"):
        shutil.copy(f, tmp_path / f.name)
    path = tmp_path / "table3.csv"
    text = path.read_text().replace("0.10,exact,0.512496", "0.10,exact,0.512596")
    path.write_text(text)
    monkeypatch.setenv("EDPQM_GOLDEN_DIR", str(tmp_path))
    code, out, _ = run(["tables", "--table", "3"], capsys)
    assert code == 3
    bad = [r for r in rows(out) if r["status"] == "FAIL"]
    assert [(r["row_key"], r["col_key"]) for r in bad] == [("0.10", "exact")]


def test_missing_golden_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("EDPQM_GOLDEN_DIR", str(tmp_path / "nowhere"))
    code, _, _ = run(["tables", "--table", "1"], capsys)
    assert code == 2


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"family": "linear", "gamma_list": [0.1], "n_max": 1}))
    _, out, _ = run(["spectrum", "--config", str(cfg)], capsys)
    assert len(rows(out)) == 2
    _, out, _ = run(["spectrum", "--config", str(cfg), "--nmax", "3"], capsys)
    assert len(rows(out)) == 4


@pytest.mark.parametrize(
    "payload",
    [{"bogus": 1}, {"n_max": -1}, {"output": "xml"}, {"mode": "tables"}, {"scan": [2, 1]}, [1, 2]],
)
def test_bad_config_exit_2(tmp_path, capsys, payload):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(payload))
    code, _, err = run(["spectrum", "--config", str(cfg)], capsys)
    assert code == 2
    assert "error" in err


def test_unreadable_config(tmp_path, capsys):
    bad = tmp_path / "x.json"
    bad.write_text("{not json")
    assert run(["spectrum", "--config", str(bad)], capsys)[0] == 2


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["spectrum", "--gamma", "a,b"])
    assert info.value.code == 2


def test_solve_toy_root(capsys):
    code, out, _ = run(["solve", "--gamma=-0.1", "--nmax", "0", "--scan", "0.1:2"], capsys)
    assert code == 0
    (r,) = rows(out)
    assert float(r["z"]) == pytest.approx(0.4876562, abs=1e-7)


def test_solve_quartic_sanity(capsys):
    code, out, _ = run(
        ["solve", "--v0", "0.5*x^4", "--v1", "0", "--g", "1", "--nmax", "0", "--scan", "0.1:2"], capsys
    )
    assert code == 0
    (r,) = rows(out)
    assert abs(float(r["residual"])) < 1e-8


def test_solve_malformed_expression(capsys):
    code, _, err = run(["solve", "--v0", "x+*2", "--v1", "0", "--g", "1"], capsys)
    assert code == 2
    assert "offset 2" in err


def test_solve_no_root_exit_3(capsys):
    code, _, err = run(["solve", "--gamma", "0.1", "--nmax", "0", "--scan", "3:4"], capsys)
    assert code == 3
    assert "no fixed point" in err


def test_equivalence_report(capsys):
    code, out, err = run(["equivalence", "--A", "0.5", "--K", "0.05", "--nmax", "4"], capsys)
    assert code == 0
    recs = rows(out)
    assert all(r["status"] == "PASS" for r in recs)
    assert "FAIL" in err and "4.472136" in err


def test_moments_report(capsys):
    code, out, _ = run(["moments", "--gamma", "0.1", "--nmax", "0"], capsys)
    assert code == 0
    (r,) = rows(out)
    assert r["critical_order"] == "42"
    assert float(r["x2"]) == pytest.approx(0.463281, abs=5e-7)


def test_out_path(tmp_path, capsys):
    target = tmp_path / "o.csv"
    code, out, _ = run(["sumrule", "--gamma", "0.1", "--nmax", "1", "--out", str(target)], capsys)
    assert code == 0 and out == ""
    assert target.read_text().startswith("gamma,n_max,partial_sum,exact")


def test_console_script_entry():
    proc = subprocess.run(
        [sys.executable, "-m", "edpqm.cli", "spectrum", "--gamma", "0", "--nmax", "0"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "0.5" in proc.stdout
