import csv
import io
import json

import pytest

from deformed_ldp.cli import main, parse_grid
from deformed_ldp.errors import ConfigError

GOE = '{"atoms": [[0, 1]]}'


@pytest.fixture
def m2(tmp_path):
    p = tmp_path / "m2.json"
    p.write_text('{"atoms": [[-1, 0.5], [1, 0.5]]}')
    return str(p)


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_rate_csv(capsys, m2):
    code, out, _ = run(capsys, "rate", "--measure", m2, "--t", "1", "--outlier", "-2",
                       "--grid", "-4:-2.6:50")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["lambda", "rate", "branch"]
    assert len(rows) == 51
    assert all(float(r[1]) >= 0 for r in rows[1:])


def test_rate_marks_infinity(capsys):
    code, out, _ = run(capsys, "rate", "--measure", GOE, "--grid", "-3:-1:3")
    assert out.splitlines()[-1] == "-1,inf,above-edge"


def test_bbp_json(capsys, tmp_path):
    p = tmp_path / "goe.json"
    p.write_text(GOE)
    code, out, _ = run(capsys, "bbp", "--measure", str(p), "--t", "1", "--outlier", "-2")
    doc = json.loads(out)
    assert code == 0
    assert {k: doc[k] for k in ("rho", "edge", "ell_lambda", "regime")} == \
        {"rho": -2.5, "edge": -2, "ell_lambda": -2.5, "regime": "bbp"}


def test_compare_maida(capsys):
    code, out, _ = run(capsys, "compare", "maida", "--outlier", "-1", "--grid", "-3:-1.6:20")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 20
    assert max(float(r["abs_diff"]) for r in rows) <= 1e-8


def test_compare_mckenna(capsys, m2):
    code, out, _ = run(capsys, "compare", "mckenna", "--measure", m2, "--grid", "-5:-2.7:8")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert max(float(r["abs_diff"]) for r in rows) <= 1e-6


def test_edge_and_selberg(capsys):
    _, out, _ = run(capsys, "edge", "--measure", GOE)
    assert json.loads(out) == {"shock_point": -1, "edge": -2}
    _, out, _ = run(capsys, "selberg", "--N", "2000")
    assert abs(json.loads(out)["ratio"] - 0.5) <= 0.02


def test_precision_and_out(capsys, tmp_path):
    target = tmp_path / "r.csv"
    code, out, _ = run(capsys, "--precision", "4", "--out", str(target), "rate",
                       "--measure", GOE, "--grid", "-3:-2.5:2")
    assert code == 0 and out == ""
    assert target.read_text().splitlines()[1] == "-3,0.7146,pulled-branch"


def test_density_json_roundtrip(capsys):
    _, out, _ = run(capsys, "--format", "json", "density", "--measure", GOE, "--n", "50")
    doc = json.loads(out)
    assert set(doc[0]) == {"x", "density"} and len(doc) >= 50


def test_fixedpoint(capsys):
    _, out, _ = run(capsys, "fixedpoint", "--measure", '{"atoms": [[1, 1]]}',
                    "--outlier", "-1", "--lambda", "-2", "--restarts", "10")
    doc = json.loads(out)
    assert set(doc) == {"lambda", "rate", "residual", "argmin_y", "phi_at_argmin"}
    assert doc["residual"] <= 1e-6


def test_bad_grid_exit_2(capsys):
    code, _, err = run(capsys, "rate", "--measure", GOE, "--grid", "oops")
    assert code == 2
    assert json.loads(err)["kind"] == "ConfigError"


def test_missing_file_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "edge", "--measure", str(tmp_path / "nope.json"))
    assert code == 2 and "error" in json.loads(err)


def test_unknown_option_exit_2(capsys):
    assert run(capsys, "rate", "--bogus")[0] == 2


def test_compute_error_exit_3(capsys):
    code, _, err = run(capsys, "fixedpoint", "--measure", '{"atoms": [[1, 1]]}',
                       "--outlier", "-1", "--lambda", "0")
    assert code == 3 and json.loads(err)["kind"] == "AboveEdge"


def test_mc_same_bytes(tmp_path, capsys):
    outs = []
    for workers in ("1", "2"):
        p = tmp_path / f"mc{workers}.json"
        code = main(["--out", str(p), "mc", "--measure", '{"atoms": [[1, 1]]}',
                     "--outlier", "-1", "--N", "30", "--n", "600", "--x", "-1.6",
                     "--workers", workers])
        assert code == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["n_samples"] == 600


def test_parse_grid():
    assert list(parse_grid("0:1:3")) == [0, 0.5, 1]
    for bad in ("0:1:1", "1:0:3", "a:b:c"):
        with pytest.raises(ConfigError):
            parse_grid(bad)
