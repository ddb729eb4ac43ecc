import io
import json
from pathlib import Path

import jsonschema
import pytest

from taxman.cli import main
from taxman.strategy import MP_STRATEGY_SCHEMA, REACH_STRATEGY_SCHEMA

GAMES = Path(__file__).resolve().parent.parent / "games"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", GAMES / "cycle4_target.json")
    doc = json.loads(out)
    assert code == 0 and doc["vertices"] == 4 and doc["strongly_connected"]


def test_validate_reads_stdin(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO((GAMES / "two_vertex.json").read_text()))
    code, out, _ = run(capsys, "validate", "-")
    assert code == 0 and json.loads(out)["vertices"] == 2


def test_solve_reach_json_and_csv(capsys):
    code, out, _ = run(capsys, "solve", GAMES / "chain3.json", "--objective", "reach", "--tau", "1/2")
    assert code == 0
    assert json.loads(out)["th"]["t"] == "0"
    code, out, _ = run(capsys, "solve", GAMES / "chain3.json", "--objective", "reach", "--tau", "1/2",
                       "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "vertex,th"


def test_solve_mp_value(capsys):
    code, out, _ = run(capsys, "solve", GAMES / "two_vertex.json", "--objective", "mp-value",
                       "--tau", "0", "--ratio", "0.6")
    assert code == 0 and float(json.loads(out)["value"]) == pytest.approx(0.2)


def test_solve_mp_threshold(capsys):
    code, out, _ = run(capsys, "solve", GAMES / "two_vertex.json", "--objective", "mp-threshold", "--tau", "1/3")
    assert code == 0 and float(json.loads(out)["threshold"]) == pytest.approx(0.5)


def test_curve(capsys):
    code, out, _ = run(capsys, "curve", GAMES / "two_vertex.json", "--ratio", "0.6", "--points", "3")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "tau,value" and len(lines) == 4
    assert float(lines[1].split(",")[1]) == pytest.approx(0.2)
    assert float(lines[-1].split(",")[1]) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("argv, code", [
    (["solve", "nope.json", "--objective", "reach", "--tau", "1"], 2),
    (["solve", "{g}", "--objective", "reach", "--tau", "3/2"], 2),
    (["solve", "{g}", "--objective", "reach", "--tau", "abc"], 2),
    (["solve", "{g}", "--objective", "mp-value", "--tau", "1/2"], 2),
    (["simulate", "{g}", "--tau", "1/2", "--p1", "all-in", "--p2", "all-in", "--steps", "0"], 2),
    (["synth", "{g}", "--kind", "reach", "--tau", "0"], 3),
    (["synth", "{g}", "--kind", "max-mp", "--tau", "1/2", "--ratio", "1/2", "--initial-ratio", "0.4"], 3),
    (["simulate", "{g}", "--tau", "1/2", "--p1", "wizard", "--p2", "all-in"], 3),
    (["bogus"], 2),
])
def test_exit_codes(capsys, argv, code):
    g = str(GAMES / "cycle4_target.json")
    got, _, err = run(capsys, *[a.replace("{g}", g) for a in argv])
    assert got == code
    assert err


def test_malformed_game_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"vertices": [')
    assert run(capsys, "validate", bad)[0] == 2


def test_synth_documents_validate_and_load(tmp_path, capsys):
    path = tmp_path / "s.json"
    code, _, _ = run(capsys, "synth", GAMES / "mp_square.json", "--kind", "max-mp", "--tau", "1/2",
                     "--ratio", "1/2", "--initial-ratio", "0.55", "-o", path)
    assert code == 0
    jsonschema.validate(json.loads(path.read_text()), MP_STRATEGY_SCHEMA)
    code, out, _ = run(capsys, "synth", GAMES / "cycle4_target.json", "--kind", "reach", "--tau", "1/2",
                       "--epsilon", "1/100")
    assert code == 0
    jsonschema.validate(json.loads(out), REACH_STRATEGY_SCHEMA)

    code, out, _ = run(capsys, "simulate", GAMES / "mp_square.json", "--tau", "1/2", "--p1", path,
                       "--p2", "random", "--budget1", "0.55", "--steps", "2000", "--seed", "3")
    doc = json.loads(out)
    assert code == 0 and float(doc["ledger_min_slack"]) >= -1e-9


def test_simulate_is_byte_identical(tmp_path, capsys):
    outs = []
    for k in range(2):
        trace = tmp_path / f"t{k}.csv"
        code, out, err = run(capsys, "simulate", GAMES / "mp_ring.json", "--tau", "1/3", "--p1", "random",
                             "--p2", "strength-mimic", "--tie-break", "random", "--steps", "3000",
                             "--seed", "17", "--trace", trace, "--exact")
        assert code == 0 and "s" in err
        outs.append((out, trace.read_bytes()))
    assert outs[0] == outs[1]


def test_export_etr(capsys):
    code, out, _ = run(capsys, "export-etr", GAMES / "chain3.json", "--tau", "1/2", "--vertex", "u")
    assert code == 0
    assert out.splitlines()[1] == "(set-logic QF_NRA)" and out.rstrip().endswith("(check-sat)")
