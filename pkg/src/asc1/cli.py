"""Command-line entry point (``asc1``)."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import trace as tracefmt
from .codec import decode_address
from .ledger import ALGO, Address, Transaction, single
from .scenario import (ScenarioParseError, ValidationError, execute,
                       load_scenario)
from .script import BOTTOM, EvalContext, accepts, evaluate
from .sim import PROPERTIES
from .syntax import ParseError, parse, pretty
from .teal import Untranslatable, compile_script, translate_tx
from .templates import BUILDERS
from .txtype import TxType
from .wire import DecodeError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    pass


# -- model transactions as JSON -------------------------------------------

def _address(v, key: str) -> Address:
    if not isinstance(v, str):
        raise CliError(f"{key}: expected an address string")
    try:
        if v.startswith("key:"):
            return single(bytes.fromhex(v[4:]))
        return decode_address(bytes.fromhex(v.removeprefix("hex:")))
    except (ValueError, DecodeError) as exc:
        raise CliError(f"{key}: bad address {v!r} ({exc})") from None


def tx_from_json(d: dict, key: str = "tx") -> Transaction:
    """A model transaction from JSON. Addresses are hex address encodings,
    or ``key:<hex>`` for a single-key account."""
    if not isinstance(d, dict):
        raise CliError(f"{key}: expected an object")
    extra = set(d) - {"type", "snd", "rcv", "val", "asst", "fv", "lv", "lx"}
    if extra:
        raise CliError(f"{key}: unknown key {sorted(extra)[0]!r}")
    try:
        ty = TxType[str(d["type"]).upper()]
    except KeyError:
        raise CliError(f"{key}.type: unknown or missing transaction type") from None
    if "snd" not in d:
        raise CliError(f"{key}.snd: missing")
    rcv = _address(d["rcv"], f"{key}.rcv") if "rcv" in d else None
    try:
        return Transaction(ty, _address(d["snd"], f"{key}.snd"), rcv, d.get("val", 0),
                           d.get("asst", ALGO), d.get("fv", 0), d.get("lv", 0), d.get("lx", 0))
    except ValueError as exc:
        raise CliError(f"{key}: {exc}") from None


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise CliError(str(exc)) from None


def _group(data) -> tuple[Transaction, ...]:
    items = data if isinstance(data, list) else [data]
    return tuple(tx_from_json(x, f"group[{i}]") for i, x in enumerate(items))


def _show_value(v) -> str:
    if v is BOTTOM:
        return "BOTTOM"
    if isinstance(v, bytes):
        return "0x" + v.hex()
    return str(v)


# -- subcommands ----------------------------------------------------------

def cmd_run(a) -> int:
    sc = load_scenario(a.scenario)
    out = execute(sc)
    path = Path(a.trace) if a.trace else Path(f"{sc.data['name']}.trace.jsonl")
    with path.open("w") as fp:
        tracefmt.write(out.run, fp)
    for m in out.messages:
        print(m)
    print(f"{len(out.run.labels)} labels, round {out.run.final.chain.round}, trace {path}")
    print(f"trace digest {tracefmt.trace_digest(out.run).hex()}")
    print("ok" if out.ok else "FAILED")
    return EXIT_OK if out.ok else EXIT_FAIL


def _load_script(path: str, env: dict[str, bytes]):
    try:
        src = Path(path).read_text()
    except OSError as exc:
        raise CliError(str(exc)) from None
    return parse(src, env)


def _env(pairs: Sequence[str]) -> dict[str, bytes]:
    env = {}
    for p in pairs or ():
        name, _, val = p.partition("=")
        if not name or not val:
            raise CliError(f"--env expects NAME=HEX, got {p!r}")
        try:
            env[name] = bytes.fromhex(val.removeprefix("0x"))
        except ValueError:
            raise CliError(f"--env {name}: bad hex") from None
    return env


def cmd_eval(a) -> int:
    e = _load_script(a.script, _env(a.env))
    group = _group(_read_json(a.group))
    try:
        args = tuple(bytes.fromhex(x.removeprefix("0x")) for x in a.arg or ())
    except ValueError:
        raise CliError("--arg expects hex") from None
    try:
        ctx = EvalContext(group, a.index, args)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    v = evaluate(ctx, e)
    print(f"value {_show_value(v)}")
    print("accept" if accepts(ctx, e) else "reject")
    return EXIT_OK


def _sample_bundle(kind: str):
    from .corpus import template_cases
    for case in template_cases():
        if case.kind == kind:
            return case.bundle
    raise CliError(f"no sample parameters for {kind!r}")  # pragma: no cover


def cmd_compile(a) -> int:
    if a.source in BUILDERS:
        if a.params:
            from .scenario import parse_scenario
            sc = parse_scenario(json.dumps({
                "genesis": {"user": "G"}, "users": {u: {} for u in a.user or ()},
                "contracts": {"c": {"kind": a.source, "params": _read_json(a.params)}}}))
            bundle = sc.contracts["c"]
        else:
            bundle = _sample_bundle(a.source)
        scripts = dict(bundle.scripts)
        names = dict(bundle.names)
    else:
        scripts = {Path(a.source).stem: _load_script(a.source, _env(a.env))}
        names = _env(a.env)
    outputs = []
    for i, (name, e) in enumerate(scripts.items()):
        prog = compile_script(e)
        header = f"// script {name}: {pretty(e, names)}"
        text = prog.lines[0] + "\n" + header + "\n" + "\n".join(prog.lines[1:]) + "\n"
        if a.output:
            out = Path(a.output)
            if len(scripts) > 1:
                out = out.with_name(f"{out.stem}.{name}{out.suffix or '.teal'}")
            out.write_text(text)
            outputs.append(str(out))
        else:
            sys.stdout.write(text)
    for o in outputs:
        print(f"wrote {o}")
    return EXIT_OK


def cmd_translate(a) -> int:
    data = _read_json(a.tx)
    assets = {}
    if a.assets:
        for k, v in _read_json(a.assets).items():
            assets[int(k)] = (_address(v["manager"], f"assets.{k}.manager"),
                              _address(v.get("creator", v["manager"]), f"assets.{k}.creator"))
    out = [translate_tx(t, assets) for t in _group(data)]
    print(json.dumps(out if isinstance(data, list) else out[0], indent=2))
    return EXIT_OK


def cmd_check(a) -> int:
    try:
        with open(a.trace) as fp:
            run, recorded = tracefmt.load(fp)
    except OSError as exc:
        raise CliError(str(exc)) from None
    replayed = [ln["state"] for ln in tracefmt.trace_lines(run)]
    if replayed != recorded:
        i = next(k for k, (x, y) in enumerate(zip(replayed, recorded)) if x != y) \
            if len(replayed) == len(recorded) else min(len(replayed), len(recorded))
        print(f"trace does not replay: state digest differs at label {i}")
        return EXIT_FAIL
    ok = True
    for pid in a.property or list(PROPERTIES):
        if pid not in PROPERTIES:
            raise CliError(f"unknown property {pid!r}; known: {sorted(PROPERTIES)}")
        v = PROPERTIES[pid](run)
        print(f"{pid}: {'holds' if v.ok else 'FAILS'}" + ("" if v.ok else f" at label {v.position}: {v.detail}"))
        ok = ok and v.ok
    return EXIT_OK if ok else EXIT_FAIL


def cmd_fuzz(a) -> int:
    from .fuzz import FuzzConfig, check_all, fuzz_run
    cfg = FuzzConfig(max_labels=a.max_labels)
    bad = 0
    for s in range(a.seed, a.seed + a.runs):
        run = fuzz_run(s, cfg)
        verdicts = check_all(run, a.property or tuple(PROPERTIES))
        fails = {k: v for k, v in verdicts.items() if not v.ok}
        if a.trace_dir:
            d = Path(a.trace_dir)
            d.mkdir(parents=True, exist_ok=True)
            with (d / f"fuzz-{s}.trace.jsonl").open("w") as fp:
                tracefmt.write(run, fp)
        if fails:
            bad += 1
            for k, v in fails.items():
                print(f"seed {s}: {k} fails at label {v.position}: {v.detail}")
    print(f"{a.runs} runs, {bad} with violations")
    return EXIT_OK if bad == 0 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asc1", description="Algorand stateless contract model tools")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="execute a scenario and write its trace")
    r.add_argument("scenario")
    r.add_argument("--trace", help="trace output path (default: <name>.trace.jsonl)")
    r.set_defaults(fn=cmd_run)

    e = sub.add_parser("eval", help="evaluate a script on a transaction group")
    e.add_argument("script")
    e.add_argument("--group", required=True, help="JSON file with one transaction or a list")
    e.add_argument("--index", type=int, default=0)
    e.add_argument("--arg", action="append", help="witness as hex (repeatable)")
    e.add_argument("--env", action="append", help="NAME=HEX constant for the script")
    e.set_defaults(fn=cmd_eval)

    c = sub.add_parser("compile", help="compile a template or script file to TEAL")
    c.add_argument("source", help=f"template kind ({', '.join(BUILDERS)}) or script file")
    c.add_argument("-o", "--output")
    c.add_argument("--params", help="template parameters as a JSON file (scenario value syntax)")
    c.add_argument("--user", action="append", help="user name usable in --params (repeatable)")
    c.add_argument("--env", action="append", help="NAME=HEX constant for a script file")
    c.set_defaults(fn=cmd_compile)

    t = sub.add_parser("translate", help="translate model transactions to concrete JSON")
    t.add_argument("tx")
    t.add_argument("--assets", help="JSON: {asset id: {manager, creator}}")
    t.set_defaults(fn=cmd_translate)

    k = sub.add_parser("check", help="replay a trace and check run properties")
    k.add_argument("trace")
    k.add_argument("--property", action="append", help=f"one of {', '.join(PROPERTIES)} (repeatable)")
    k.set_defaults(fn=cmd_check)

    f = sub.add_parser("fuzz", help="random runs checked against every run property")
    f.add_argument("--runs", type=int, default=100)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--max-labels", type=int, default=200)
    f.add_argument("--property", action="append")
    f.add_argument("--trace-dir")
    f.set_defaults(fn=cmd_fuzz)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    a = build_parser().parse_args(argv)
    try:
        return a.fn(a)
    except ScenarioParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
    except ParseError as exc:
        print(f"script parse error: {exc}", file=sys.stderr)
    except ValidationError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
    except (CliError, Untranslatable, tracefmt.TraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
