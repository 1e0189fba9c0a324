"""Scenario files, their validation, and the command-line tool."""
from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from asc1 import cli
from asc1.scenario import (ScenarioParseError, ValidationError, execute,
                           load_scenario, normalize, parse_scenario)

ROOT = Path(__file__).resolve().parent.parent
SCEN = ROOT / "scenarios"
MINIMAL = {"genesis": {"user": "G"}, "users": {"A": {}},
           "actions": [{"tx": {"type": "pay", "snd": "G", "rcv": "A", "val": 300000, "signers": ["G"]}}]}


def run_cli(*argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_normalize_fills_defaults_and_is_idempotent():
    d = normalize(MINIMAL)
    assert d["seed"] == 0 and d["max_rounds"] == 10 and d["genesis"]["supply"] == 10**16
    assert d["users"]["G"]["seed"] == "user:G"
    assert normalize(d) == d
    assert json.loads(json.dumps(d)) == d


def test_unknown_top_level_key_is_named():
    with pytest.raises(ValidationError) as ei:
        normalize({**MINIMAL, "bogus": 1})
    assert ei.value.key == "bogus"
    with pytest.raises(ValidationError) as ei:
        normalize({**MINIMAL, "genesis": {"user": "G", "extra": 1}})
    assert ei.value.key == "genesis.extra"


def test_actions_and_strategies_are_exclusive():
    with pytest.raises(ValidationError) as ei:
        normalize({**MINIMAL, "strategies": []})
    assert ei.value.key == "strategies"


def test_unknown_names_raise_validation_errors():
    with pytest.raises(ValidationError):
        normalize({**MINIMAL, "properties": ["nope"]})
    with pytest.raises(ValidationError):
        normalize({**MINIMAL, "contracts": {"c": {"kind": "nope"}}})
    bad = json.dumps({**MINIMAL, "actions": [{"tx": {"type": "pay", "snd": "Q", "rcv": "A", "signers": ["G"]}}]})
    with pytest.raises(ValidationError):
        execute(parse_scenario(bad))


def test_parse_error_position():
    with pytest.raises(ScenarioParseError) as ei:
        parse_scenario('{"genesis":\n  {"user": }}')
    assert ei.value.line == 2


def test_minimal_scenario_executes():
    out = execute(parse_scenario(json.dumps(MINIMAL)))
    assert out.ok and out.error is None and len(out.run.labels) == 2


def test_bundled_scenarios(tmp_path, capsys):
    expected = {"htlc.json": 0, "double-spend.json": 1, "fuzz.json": 0,
                "lottery-withhold.json": 0, "oracle.json": 0}
    assert {p.name for p in SCEN.glob("*.json")} == set(expected)
    for name, want in expected.items():
        code, out, _ = run_cli("run", SCEN / name, "--trace", tmp_path / f"{name}.jsonl", capsys=capsys)
        assert code == want, (name, out)
    _, out, _ = run_cli("run", SCEN / "double-spend.json", "--trace", tmp_path / "d", capsys=capsys)
    assert "actions.1: DoubleSpend" in out


def test_htlc_trace_shows_the_close(tmp_path, capsys):
    trace = tmp_path / "h.jsonl"
    code, out, _ = run_cli("run", SCEN / "htlc.json", "--trace", trace, capsys=capsys)
    assert code == 0 and out.strip().endswith("ok")
    lines = [json.loads(x) for x in trace.read_text().splitlines()]
    assert lines[0]["kind"] == "genesis"
    sc = load_scenario(SCEN / "htlc.json")
    out2 = execute(sc)
    closes = [t for _, _, t in out2.run.transactions() if t.type.value == "close"]
    assert len(closes) == 1 and closes[0].rcv == sc.users["A"].address
    assert sum(x["kind"] == "group" for x in lines) >= 1


def test_fuzz_scenario_is_reproducible(tmp_path, capsys):
    digests = []
    for k in range(2):
        _, out, _ = run_cli("run", SCEN / "fuzz.json", "--trace", tmp_path / f"f{k}", capsys=capsys)
        digests.append([ln for ln in out.splitlines() if ln.startswith("trace digest")])
    assert digests[0] == digests[1] and digests[0]
    assert (tmp_path / "f0").read_bytes() == (tmp_path / "f1").read_bytes()


def test_check_accepts_and_rejects(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    run_cli("run", SCEN / "htlc.json", "--trace", trace, capsys=capsys)
    code, out, _ = run_cli("check", trace, capsys=capsys)
    assert code == 0 and "close-monotone: holds" in out
    lines = trace.read_text().splitlines()
    last = json.loads(lines[-1])
    last["state"] = "00" * 32
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join(lines[:-1] + [json.dumps(last)]) + "\n")
    code, out, _ = run_cli("check", bad, capsys=capsys)
    assert code == 1 and "does not replay" in out
    garbage = tmp_path / "g.jsonl"
    garbage.write_text("not json\n")
    code, _, err = run_cli("check", garbage, capsys=capsys)
    assert code == 2 and "error" in err


def test_exit_code_two_on_bad_input(tmp_path, capsys):
    broken = tmp_path / "b.json"
    broken.write_text("{ not json")
    code, _, err = run_cli("run", broken, capsys=capsys)
    assert code == 2 and "parse error" in err
    invalid = tmp_path / "i.json"
    invalid.write_text(json.dumps({**MINIMAL, "bogus": 1}))
    code, _, err = run_cli("run", invalid, capsys=capsys)
    assert code == 2 and "bogus" in err
    script = tmp_path / "s.asc"
    script.write_text("1 +")
    code, _, err = run_cli("compile", script, capsys=capsys)
    assert code == 2 and "script parse error" in err


def test_compile_eval_translate(tmp_path, capsys):
    code, out, _ = run_cli("compile", "htlc", capsys=capsys)
    assert code == 0 and out.startswith("#pragma version") and "// script htlc:" in out
    code, out, _ = run_cli("compile", "lottery", "-o", tmp_path / "l.teal", capsys=capsys)
    assert code == 0 and len(list(tmp_path.glob("l.*.teal"))) == 3
    script = tmp_path / "s.asc"
    script.write_text("tx.val >= 5 and H(arg(0)) = h")
    import hashlib
    h = hashlib.sha256(b"k").hexdigest()
    snd = "key:" + "11" * 32
    group = tmp_path / "g.json"
    group.write_text(json.dumps({"type": "pay", "snd": snd, "rcv": "key:" + "22" * 32, "val": 7}))
    code, out, _ = run_cli("eval", script, "--group", group, "--arg", b"k".hex(), "--env", f"h={h}",
                           capsys=capsys)
    assert code == 0 and "value 1" in out and "accept" in out
    code, out, _ = run_cli("eval", script, "--group", group, "--arg", "00", "--env", f"h={h}", capsys=capsys)
    assert "reject" in out
    code, out, _ = run_cli("translate", group, capsys=capsys)
    assert code == 0 and json.loads(out)["amt"] == 7
    code, out, _ = run_cli("fuzz", "--runs", "2", "--max-labels", "40", capsys=capsys)
    assert code == 0 and "2 runs, 0 with violations" in out


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "asc1.cli", "run", str(SCEN / "oracle.json"),
                        "--trace", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stdout + r.stderr
