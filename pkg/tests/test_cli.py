import csv
import io
import json
import subprocess
import sys

import pytest

from horolab import __version__
from horolab.cli import RunConfig, parse_grid, run
from horolab.errors import ValidationError


def _rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    return meta, list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def _run(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_zeros(capsys):
    code, out, _ = _run(capsys, "zeros", "--count", "3")
    assert code == 0
    meta, rows = _rows(out)
    assert meta["version"] == __version__ and meta["config"]["count"] == 3
    got = [float(r["value_re"]) for r in rows]
    for g, ref in zip(got, (14.134725, 21.022040, 25.010858)):
        assert abs(g - ref) < 1e-3


def test_horocycle_plot_csv(tmp_path, capsys):
    path = tmp_path / "h.csv"
    code, _, _ = _run(capsys, "horocycle-plot", "--y", "0.01", "--n", "20000", "--out", "csv", "-o", str(path))
    assert code == 0
    meta, rows = _rows(path.read_text())
    assert len(rows) == 20000
    assert list(rows[0]) == ["param", "value_re", "value_im", "err_est"]
    for r in rows[::997]:
        x, y = float(r["value_re"]), float(r["value_im"])
        assert abs(x) <= 0.5 + 1e-9 and x * x + y * y >= 1 - 1e-9


def test_unfold_check_report(capsys):
    code, out, _ = _run(capsys, "unfold-check", "--fn", "poincare_typeII", "--alpha", "0.3", "--t", "2",
                        "--eps", "1e-8")
    assert code == 0
    meta, rows = _rows(out)
    assert meta["config"]["function"] == {"name": "poincare_typeII", "alpha": 0.3}
    assert [r["param"] for r in rows] == ["2.0:pairing", "2.0:i_of_t"]
    assert float(rows[0]["err_est"]) < 1e-6


def test_json_mirrors_csv(capsys):
    _, out_csv, _ = _run(capsys, "eval", "--kind", "theta1", "--param", "0.5,1,2")
    _, out_json, _ = _run(capsys, "eval", "--kind", "theta1", "--param", "0.5,1,2", "--out", "json")
    _, rows = _rows(out_csv)
    doc = json.loads(out_json)
    assert doc["meta"]["config"]["format"] == "json"
    assert [r["value_re"] for r in doc["rows"]] == [float(r["value_re"]) for r in rows]


def test_thread_count_does_not_change_output(capsys, monkeypatch):
    args = ("eval", "--kind", "estar", "--param", "0.3,0.7,1.5+2j", "--x", "0.1", "--y", "1.3")
    _, one, _ = _run(capsys, *args, "--threads", "1")
    _, four, _ = _run(capsys, *args, "--threads", "4")
    monkeypatch.setenv("HOROLAB_THREADS", "3")
    _, env, _ = _run(capsys, *args)
    assert one == four == env


def test_lemma_and_asymptotics(capsys):
    code, out, _ = _run(capsys, "lemma-check", "--constant", "half", "--t", "0.5,2")
    assert code == 0
    _, rows = _rows(out)
    assert max(float(r["err_est"]) for r in rows) < 1e-8
    code, out, _ = _run(capsys, "i-asym", "--t", "100")
    _, rows = _rows(out)
    ratio = {r["param"]: float(r["value_re"]) for r in rows}["100.0:ratio_large_t"]
    assert abs(ratio - 1) < 1e-9


def test_rs_poles(capsys):
    code, out, _ = _run(capsys, "rs", "--s", "2.5", "--poles")
    assert code == 0
    _, rows = _rows(out)
    poles = {r["param"]: r for r in rows if r["param"].startswith("pole@")}
    assert float(poles["pole@0.3"]["err_est"]) < 0.01 * 1.81


def test_cusp_probe_and_equidist(capsys):
    code, out, _ = _run(capsys, "cusp-probe", "--cusp", "1/2")
    assert code == 0
    _, rows = _rows(out)
    d = {r["param"]: float(r["value_re"]) for r in rows}
    assert abs(d["slope"] / d["slope_transport"] - 1) < 0.1
    code, out, _ = _run(capsys, "equidist", "--y", "1e-3", "--n", "20000")
    assert code == 0
    meta, rows = _rows(out)
    assert abs(float(rows[0]["value_re"]) - meta["target"]) < 0.02


def test_fit_and_avg(capsys):
    code, out, _ = _run(capsys, "fit", "--y", "0.001:0.05:24")
    assert code == 0
    meta, rows = _rows(out)
    assert float(rows[0]["err_est"]) < 0.01 * float(rows[0]["value_re"])
    code, out, _ = _run(capsys, "avg", "--fn", "eisenstein_fixed", "--s0", "1.25", "--y", "0.1,1")
    _, rows = _rows(out)
    assert max(float(r["err_est"]) for r in rows) < 1e-9


def test_reduce(capsys):
    code, out, _ = _run(capsys, "reduce", "--x", "0.3", "--y", "0.01")
    _, rows = _rows(out)
    m = {r["param"]: float(r["value_re"]) for r in rows}
    assert m["a"] * m["d"] - m["b"] * m["c"] == 1


@pytest.mark.parametrize("argv,code", [
    (("avg", "--fn", "nope", "--y", "1"), 2),
    (("eval", "--kind", "theta1", "--param", "2,1"), 2),
    (("zeros", "--count", "3", "--eps", "0.5"), 2),
    (("cusp-probe", "--cusp", "2/4"), 2),
    (("unfold-check", "--fn", "poincare_typeII", "--alpha", "0.6", "--t", "2"), 2),
    (("bogus",), 2),
    (("zeros", "--count", "99"), 3),
    (("rs", "--s", "0.3"), 3),
])
def test_exit_codes(capsys, argv, code):
    assert _run(capsys, *argv)[0] == code


def test_unwritable_output(capsys, tmp_path):
    assert _run(capsys, "zeros", "-o", str(tmp_path / "missing" / "x.csv"))[0] == 2


def test_run_config_validation():
    with pytest.raises(ValidationError):
        RunConfig("zeros", eps=1e-20)
    with pytest.raises(ValidationError):
        RunConfig("avg", grids={"y": []})
    assert parse_grid("1:100:3") == pytest.approx([1, 10, 100])


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "horolab", "zeros", "--count", "1"], capture_output=True,
                         text=True, check=True)
    assert "14.1347" in out.stdout
