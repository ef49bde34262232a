import json
import math
import subprocess
import sys

import pytest

from qtree import cli
from qtree.graph import graph_from_dict, graph_to_dict, load_fixture

PI2 = math.pi ** 2


def call(capsys, *argv):
    # argparse errors leave through SystemExit with the same code
    try:
        code = cli.main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def call_json(capsys, *argv):
    code, out, err = call(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_point_spectrum_fig2(capsys):
    d = call_json(capsys, "point-spectrum", "--graph", "fig2", "--window", "0,45")
    (atom,) = d["atoms"]
    assert atom["lambda"] == pytest.approx(9.8696044, abs=1e-7)
    assert atom["mass"] == pytest.approx(0.3529412, abs=1e-7)
    assert atom["boundary"] == ["A", "B"] and atom["index"] == 1


def test_spectrum_interval(capsys):
    d = call_json(capsys, "spectrum", "--graph", "interval", "--window", "0,45")
    assert [e["lambda"] for e in d["eigenvalues"]] == pytest.approx([PI2, 4 * PI2], rel=1e-10)


def test_graph_file_input(capsys, tmp_path):
    p = tmp_path / "g.json"
    p.write_text(json.dumps(graph_to_dict(load_fixture("interval"))))
    d = call_json(capsys, "spectrum", "--graph", str(p), "--window", "0,45")
    assert len(d["eigenvalues"]) == 2


def test_aomoto(capsys):
    d = call_json(capsys, "aomoto", "--graph", "k5", "--lambda", "1")
    assert d["index"] == 5
    d = call_json(capsys, "aomoto", "--graph", "fig2", "--lambda", "2")
    assert d["index"] == 0 and d["mass"] == 0.0
    d = call_json(capsys, "aomoto", "--graph", "fig2", "--lambda", repr(PI2), "--exact")
    assert d["index"] == 1


def test_derived(capsys):
    d = call_json(capsys, "derived", "--graph", "fig2", "--lambda", "3")
    assert len(d["vertices"]) == 15 and len(d["edges"]) == 30


def test_companion(capsys):
    d = call_json(capsys, "companion", "--graph", "fig2", "--lambda", repr(PI2))
    assert d["representatives"] == ["T0", "T1", "T2"]
    assert d["coupling_nullity"] == 1 and d["index_identity"] is True
    code, _, err = call(capsys, "companion", "--graph", "fig2", "--lambda", "2")
    assert code == 2 and "not an eigenvalue" in err


def test_cover(capsys):
    d = call_json(capsys, "cover", "--graph", "k5", "--n", "3", "--seed", "42")
    assert d["n"] == 3
    g = graph_from_dict(d["graph"])
    assert len(g.vertices) == 15 and len(g.edges) == 30
    assert set(d["fiber_map"].values()) <= set(load_fixture("k5").vertices) | set(
        load_fixture("k5").edge)


def test_cover_table(capsys):
    code, out, err = call(capsys, "cover", "--graph", "fig2", "--n", "2", "--table",
                          "--window", "0,45")
    assert code == 0, err
    lines = out.splitlines()
    assert lines[0] == "n,girth,lambda,mass,engine_mass" and len(lines) == 3
    code, _, _ = call(capsys, "cover", "--graph", "fig2", "--n", "2", "--table")
    assert code == 2


def test_dos_bounds(capsys):
    d = call_json(capsys, "dos-bounds", "--graph", "fig2", "--window", "1,45")
    assert d["ok"] is True and d["applicable"] is True
    assert d["weyl"][0]["ok"] is True
    d = call_json(capsys, "dos-bounds", "--graph", "fig2", "--window", "0,45")
    assert d["applicable"] is False


def test_perturb(capsys):
    d = call_json(capsys, "perturb", "--graph", "k5", "--epsilon", "0.01", "--trials", "10",
                  "--seed", "7")
    assert d["empty_fraction"] == 1.0


def test_unfold(capsys):
    d = call_json(capsys, "unfold", "--graph", "k5", "--root", "v1", "--depth", "1")
    assert len(d["graph"]["vertices"]) == 5 and len(d["graph"]["edges"]) == 4
    assert max(d["depth"].values()) == 1 and d["root"] in d["depth"]


def test_verify(capsys):
    d = call_json(capsys, "verify", "--graph", "fig2", "--window", "0,45")
    assert d["ok"] is True
    names = {c["name"] for c in d["checks"]}
    assert {"wronskian", "orientation identities", "eigenvalue count", "derived kernel"} <= names


def test_verify_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setitem(cli.COMMANDS, "verify", lambda g, args: {"ok": False, "checks": []})
    code, _, _ = call(capsys, "verify", "--graph", "fig2", "--window", "0,45")
    assert code == 3


# ---------------------------------------------------------------------------
# errors

@pytest.mark.parametrize("argv", [
    ["nonsense", "--graph", "fig2"],
    ["spectrum", "--graph", "fig2"],
    ["spectrum", "--graph", "fig2", "--window", "5,1"],
    ["spectrum", "--graph", "fig2", "--window", "abc"],
    ["spectrum", "--graph", "fig2", "--window", "0,45", "--tol", "0.1"],
    ["cover", "--graph", "fig2", "--n", "0"],
    ["spectrum", "--graph", "no-such-file.json", "--window", "0,1"],
    ["perturb", "--graph", "interval", "--epsilon", "0.01", "--trials", "2"],
])
def test_invalid_input_exit_2(capsys, argv):
    code, _, err = call(capsys, *argv)
    assert code == 2
    assert err


def test_malformed_json_exit_2(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    code, _, err = call(capsys, "spectrum", "--graph", str(p), "--window", "0,1")
    assert code == 2 and "malformed JSON" in err
    p.write_text(json.dumps({"vertices": [{"id": "a", "alpha": 0}], "edges": [
        {"id": "e", "from": "a", "to": "b", "length": 1}]}))
    code, _, err = call(capsys, "spectrum", "--graph", str(p), "--window", "0,1")
    assert code == 2


def test_cap_exit_3(capsys):
    code, _, err = call(capsys, "cover", "--graph", "k5", "--n", "21")
    assert code == 3 and "cap" in err
    code, _, err = call(capsys, "cover", "--graph", "cycle", "--n", "2", "--girth-min", "100",
                        "--max-tries", "5")
    assert code == 3 and "best girth" in err


def test_bad_thread_count(capsys, monkeypatch):
    monkeypatch.setenv("QTS_THREADS", "many")
    code, _, _ = call(capsys, "spectrum", "--graph", "fig2", "--window", "0,10")
    assert code == 2


# ---------------------------------------------------------------------------
# round trips and determinism

def test_emitted_graph_round_trip(capsys):
    d = call_json(capsys, "cover", "--graph", "lollipop", "--n", "2", "--seed", "1")
    g = graph_from_dict(d["graph"])
    assert graph_to_dict(graph_from_dict(graph_to_dict(g))) == graph_to_dict(g)
    d = call_json(capsys, "unfold", "--graph", "fig2", "--root", "A", "--depth", "2")
    assert graph_to_dict(graph_from_dict(d["graph"])) == d["graph"]


@pytest.mark.parametrize("argv", [
    ["point-spectrum", "--graph", "lollipop", "--window", "0,45"],
    ["cover", "--graph", "k5", "--n", "3", "--seed", "42"],
    ["perturb", "--graph", "lollipop", "--epsilon", "0.01", "--trials", "2", "--seed", "3"],
    ["companion", "--graph", "k5", "--lambda", "1"],
])
def test_byte_identical(capsys, argv):
    _, a, _ = call(capsys, *argv)
    _, b, _ = call(capsys, *argv)
    assert a == b and a


def test_output_file(capsys, tmp_path):
    p = tmp_path / "out.json"
    code, out, _ = call(capsys, "spectrum", "--graph", "interval", "--window", "0,45",
                        "--output", str(p))
    assert code == 0 and out == ""
    assert len(json.loads(p.read_text())["eigenvalues"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qtree", "spectrum", "--graph", "interval",
                          "--window", "0,45"], capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert len(json.loads(res.stdout)["eigenvalues"]) == 2
