import io
import json

import pytest

from sspa import library
from sspa.cli import dumps, main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def path(name):
    return str(library.bundled_path(name))


@pytest.fixture
def write(tmp_path):
    def _write(text, name="m.sspa"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return str(p)
    return _write


@pytest.mark.parametrize("name", library.bundled_names())
def test_bundled_models_check_in_documented_mode(name):
    code, out, _ = run("check", path(name), "--mode", library.BUNDLED_MODES[name])
    assert code == 0, out


def test_check_text_trigger_strict():
    code, out, _ = run("check", path("biological_text"))
    assert code == 1
    assert "T0:" in out and "NOT well-formed" in out


def test_check_overlap(write):
    code, out, _ = run("check", write("X = (a,1.0).X + (a,?).X;"))
    assert code == 1
    assert "a" in out and "error" in out


def test_check_json():
    code, out, _ = run("check", path("biological"), "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["ok"] and data["schema"] == 1
    c0 = next(p for p in data["processes"] if p["name"] == "C0")
    assert c0["active"] == ["c"] and c0["passive"] == ["a"] and c0["unique_passive"] == ["a"]


def test_parse_error_exit(write):
    code, _, err = run("check", write("P = (a,0).P;"))
    assert code == 2
    assert ":1:8:" in err


def test_missing_file(tmp_path):
    assert run("check", str(tmp_path / "nope.sspa"))[0] == 2


def test_unknown_name():
    assert run("lts", path("biological"), "Nope")[0] == 2
    assert run("solve", path("biological"), "E0")[0] == 2


def test_lts_open_cycle():
    code, out, _ = run("lts", path("alternating"), "A0")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 4
    assert sum("?" in ln for ln in lines) == 2


def test_lts_closed_cycle():
    code, out, _ = run("lts", path("alternating"), "Closed")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 4
    assert lines[0] == "A0[b <- 0.5] --a,1.0--> A0#1[b <- 0.5]"
    assert not any("?" in ln for ln in lines)


def test_lts_blocked_pair():
    code, out, _ = run("lts", path("nonassoc"), "Inner")
    assert code == 0 and out == ""


def test_lts_dot_and_json():
    code, out, _ = run("lts", path("alternating"), "A0", "--dot")
    assert code == 0 and out.startswith("digraph")
    code, out, _ = run("lts", path("alternating"), "A0", "--format", "json")
    assert json.loads(out)["schema"] == 1


def test_lts_budget():
    code, _, err = run("lts", path("biological"), "Cell", "--budget-states", "3")
    assert code == 3 and "budget" in err


def test_budget_env(monkeypatch):
    monkeypatch.setenv("SSPA_BUDGET_STATES", "3")
    assert run("lts", path("biological"), "Cell")[0] == 3


def test_solve_cell():
    code, out, _ = run("solve", path("biological"), "Cell")
    assert code == 0
    assert "status: satisfied" in out
    assert "kappa[a] = 2\n" in out


def test_solve_json_is_byte_stable():
    a = run("solve", path("biological"), "Cell", "--format", "json")[1]
    b = run("solve", path("biological"), "Cell", "--format", "json")[1]
    assert a == b
    data = json.loads(a)
    assert data["kappas"]["a"] == 2.0


def test_solve_independent():
    assert run("solve", path("independent"), "Pair")[0] == 0


def test_solve_spoiled():
    code, out, _ = run("solve", path("spoiled"), "Cell")
    assert code == 4 and "status: violated" in out and "spread" in out


def test_solve_not_converged():
    assert run("solve", path("biological"), "Cell", "--max-iter", "1")[0] == 5


def test_solve_ill_formed():
    code, _, err = run("solve", path("biological_text"), "Cell")
    assert code == 1 and "not well-formed" in err


@pytest.mark.parametrize("name, system, mode, expected", [
    ("biological", "Cell", "strict", 0),
    ("spoiled", "Cell", "strict", 0),
    ("independent", "Pair", "strict", 0),
    ("biological_text", "Cell", "lenient", 0),
])
def test_verify_agrees(name, system, mode, expected):
    code, out, _ = run("verify", path(name), system, "--mode", mode)
    assert code == expected, out
    assert "agreement: agree" in out


def test_verify_json():
    code, out, _ = run("verify", path("biological"), "Cell", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["oracle"]["gap_abs"] < 1e-9 and data["agreement"] == "agree"


def test_bisim():
    assert run("bisim", path("nonassoc"), "Left", "Zero")[0] == 0
    code, out, _ = run("bisim", path("nonassoc"), "Right", "Zero")
    assert code == 1 and "≇" in out
    assert run("bisim", path("alternating"), "Swap1", "Swap2")[0] == 0
    assert run("bisim", path("alternating"), "A0", "A0")[0] == 0


def test_bisim_witness():
    code, out, _ = run("bisim", path("alternating"), "Swap1", "Swap2", "--witness")
    assert code == 0 and "{" in out
    code, out, _ = run("bisim", path("alternating"), "Swap1", "Swap2", "--witness", "--format", "json")
    assert json.loads(out)["partition"]


def test_dumps_format():
    assert dumps({"b": 0.1, "a": [1, True, None]}) == (
        '{\n  "b": 0.10000000000000001,\n  "a": [\n    1,\n    true,\n    null\n  ]\n}')
