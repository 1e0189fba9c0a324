"""JSON scenarios: loading, validation and execution.

The schema lives in ``data/scenario.schema.json``. Values inside a
scenario refer to things by name:

* an address is a user name, ``contract:NAME`` (the first script of a
  contract), ``contract:NAME.SCRIPT``, or ``hex:`` followed by an address
  encoding;
* a byte string is ``hex:...`` or ``utf8:...``; ``{"sha256": <bytes>}``
  hashes one, ``{"address": <address>}`` is an address encoding, and
  ``{"versig": {"signer": U, "contract": C, "value": <bytes> | "txid"}}``
  is U's signature over a value for contract account C.

Template parameters accept the same forms, plus plain integers.
"""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .codec import decode_address, versig_message
from .crypto import hash_bytes
from .ledger import ALGO, Address, Params, Script, Transaction
from .semantics import TICK, NetState, StepError, Witness, net_step
from .sim import (PROPERTIES, FifoAdversary, RandomAdversary, Run, Submit, User,
                  expand, genesis_state, simulate)
from . import strategies as S
from .templates import BUILDERS, ContractBundle, InvalidParams, build_template
from .txtype import TxType
from .wire import DecodeError

SEED_ENV = "ASC1_SEED"


class ScenarioParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int) -> None:
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line, self.col = line, col


class ValidationError(ValueError):
    def __init__(self, key: str, msg: str) -> None:
        super().__init__(f"{key}: {msg}")
        self.key = key


def _schema() -> dict:
    return json.loads(resources.files("asc1").joinpath("data/scenario.schema.json").read_text())


_TX_TYPES = {t.name.lower(): t for t in TxType}

_DEFAULT_ADVERSARY = {"kind": "fifo", "p_tick": 0.3, "delta": 0, "max_actions_per_round": 1024}


def normalize(raw: dict) -> dict:
    """Validate against the schema and fill in defaults."""
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        raise _validation_error(exc) from None
    d = copy.deepcopy(raw)
    d.setdefault("name", "scenario")
    d.setdefault("seed", 0)
    g = d["genesis"]
    g.setdefault("supply", 10**16)
    p = Params()
    g.setdefault("delta_max", p.delta_max)
    g.setdefault("min_balance", p.min_balance)
    g.setdefault("max_assets", p.max_assets)
    d.setdefault("users", {})
    for name in [g["user"], *d["users"]]:
        d["users"].setdefault(name, {})
        d["users"][name].setdefault("seed", f"user:{name}")
    d.setdefault("contracts", {})
    for c in d["contracts"].values():
        c.setdefault("params", {})
    d.setdefault("setup", [])
    if "strategies" not in d:
        d.setdefault("actions", [])
    adv = d.setdefault("adversary", {})
    for k, v in _DEFAULT_ADVERSARY.items():
        adv.setdefault(k, v)
    d.setdefault("max_rounds", 10)
    d.setdefault("properties", [])
    d.setdefault("expect", {})
    for pid in d["properties"]:
        if pid not in PROPERTIES:
            raise ValidationError("properties", f"unknown property {pid!r}")
    for name, c in d["contracts"].items():
        if c["kind"] not in BUILDERS:
            raise ValidationError(f"contracts.{name}.kind", f"unknown template {c['kind']!r}")
    return d


def _validation_error(exc: jsonschema.ValidationError) -> ValidationError:
    path = ".".join(str(p) for p in exc.absolute_path) or "<top>"
    if exc.validator == "additionalProperties":
        allowed = set(exc.schema.get("properties", {}))
        extra = sorted(set(exc.instance) - allowed) if isinstance(exc.instance, dict) else []
        key = f"{path}.{extra[0]}" if extra and path != "<top>" else (extra[0] if extra else path)
        return ValidationError(key, "unknown key")
    if exc.validator == "not" and path == "<top>":
        return ValidationError("strategies", "a scenario has either actions or strategies, not both")
    return ValidationError(path, exc.message)


def load_scenario(path: str | Path) -> "Scenario":
    return parse_scenario(Path(path).read_text(), str(path))


def parse_scenario(text: str, source: str = "<scenario>") -> "Scenario":
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(raw, dict):
        raise ValidationError("<top>", "a scenario is a JSON object")
    return Scenario(normalize(raw), source)


# -- resolution -----------------------------------------------------------

@dataclass
class Scenario:
    data: dict
    source: str = "<scenario>"
    users: dict[str, User] = field(init=False)
    contracts: dict[str, ContractBundle] = field(init=False)

    def __post_init__(self) -> None:
        self.users = {n: User.from_seed(n, u["seed"]) for n, u in self.data["users"].items()}
        self.contracts = {}
        for name, c in self.data["contracts"].items():
            key = f"contracts.{name}.params"
            params = {k: self.value(v, f"{key}.{k}") for k, v in c["params"].items()}
            try:
                self.contracts[name] = build_template(c["kind"], params)
            except InvalidParams as exc:
                raise ValidationError(key, str(exc)) from None
        for i, s in enumerate(self.data.get("strategies", ())):
            if s["kind"] not in STRATEGY_KINDS:
                raise ValidationError(f"strategies.{i}.kind", f"unknown strategy {s['kind']!r}")

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)

    @property
    def seed(self):
        env = os.environ.get(SEED_ENV)
        if env is None:
            return self.data["seed"]
        return int(env) if env.lstrip("-").isdigit() else env

    @property
    def params(self) -> Params:
        g = self.data["genesis"]
        return Params(g["delta_max"], g["min_balance"], g["max_assets"])

    # references
    def user(self, name: str, key: str) -> User:
        try:
            return self.users[name]
        except KeyError:
            raise ValidationError(key, f"unknown user {name!r}") from None

    def address(self, ref: str, key: str) -> Address:
        if not isinstance(ref, str):
            raise ValidationError(key, f"expected an address reference, got {ref!r}")
        if ref.startswith("contract:"):
            name, _, script = ref[len("contract:"):].partition(".")
            b = self.contracts.get(name)
            if b is None:
                raise ValidationError(key, f"unknown contract {name!r}")
            if script and script not in b.scripts:
                raise ValidationError(key, f"contract {name!r} has no script {script!r}")
            return b.address(script or None)
        if ref.startswith("hex:"):
            try:
                scripts = {Script.of(e).digest: e for b in self.contracts.values() for e in b.scripts.values()}
                return decode_address(bytes.fromhex(ref[4:]), scripts)
            except (ValueError, DecodeError) as exc:
                raise ValidationError(key, f"bad address: {exc}") from None
        return self.user(ref, key).address

    def blob(self, v: Any, key: str, tx: Optional[Transaction] = None) -> bytes:
        if isinstance(v, str):
            if v.startswith("hex:"):
                try:
                    return bytes.fromhex(v[4:])
                except ValueError:
                    raise ValidationError(key, "bad hex") from None
            if v.startswith("utf8:"):
                return v[5:].encode()
            raise ValidationError(key, f"byte strings are hex:... or utf8:..., got {v!r}")
        if isinstance(v, int) and not isinstance(v, bool) and v >= 0:
            return v.to_bytes(8, "big")
        if isinstance(v, dict) and len(v) == 1:
            (k, x), = v.items()
            if k == "sha256":
                return hash_bytes(self.blob(x, f"{key}.sha256"))
            if k == "address":
                return self.address(x, f"{key}.address").encoding
            if k == "versig":
                if not isinstance(x, dict) or set(x) - {"signer", "contract", "value"}:
                    raise ValidationError(f"{key}.versig", "needs signer, contract and value")
                signer = self.user(x.get("signer"), f"{key}.versig.signer")
                contract = self.address(x.get("contract"), f"{key}.versig.contract")
                value = x.get("value")
                if value == "txid":
                    if tx is None:
                        raise ValidationError(f"{key}.versig.value", "txid is only known inside a transaction")
                    data = tx.txid
                else:
                    data = self.blob(value, f"{key}.versig.value")
                return signer.sign(versig_message(contract, data))
        raise ValidationError(key, f"cannot read a byte string from {v!r}")

    def value(self, v: Any, key: str):
        if isinstance(v, bool):
            raise ValidationError(key, "booleans are not template parameters")
        if isinstance(v, int):
            return v
        if isinstance(v, str) and not (v.startswith("hex:") or v.startswith("utf8:")):
            return self.address(v, key)
        return self.blob(v, key)

    # actions
    def tx(self, entry: dict, key: str, rnd: int) -> Transaction:
        fv = entry.get("fv", rnd)
        lv = entry.get("lv", fv + min(10, self.params.delta_max))
        rcv = self.address(entry["rcv"], f"{key}.rcv") if "rcv" in entry else None
        try:
            return Transaction(_TX_TYPES[entry["type"]], self.address(entry["snd"], f"{key}.snd"), rcv,
                               entry.get("val", 0), entry.get("asst", ALGO), fv, lv, entry.get("lx", 0))
        except ValueError as exc:
            raise ValidationError(key, str(exc)) from None

    def submit(self, specs: list[dict], key: str, rnd: int) -> Submit:
        group = tuple(self.tx(s, f"{key}.{i}", rnd) for i, s in enumerate(specs))
        wits = []
        for i, s in enumerate(specs):
            ws = [self.blob(a, f"{key}.{i}.args.{j}", group[i]) for j, a in enumerate(s.get("args", ()))]
            ws += [self.user(u, f"{key}.{i}.signers").sign_tx(group, i) for u in s.get("signers", ())]
            wits.append(tuple(ws))
        return Submit(group, tuple(wits))

    def action(self, a: dict, key: str, rnd: int) -> list:
        """Labels-to-be for one action: Submits, Witness labels or ticks
        (``"tick"`` strings)."""
        if "tx" in a:
            return [self.submit([a["tx"]], f"{key}.tx", rnd)]
        if "group" in a:
            return [self.submit(a["group"], f"{key}.group", rnd)]
        if "tick" in a:
            return ["tick"] * a["tick"]
        if "witness" in a:
            return [Witness(self.blob(a["witness"], f"{key}.witness"))]
        name = a["contract_setup"]
        b = self.contracts.get(name)
        if b is None:
            raise ValidationError(f"{key}.contract_setup", f"unknown contract {name!r}")
        if not b.setup_group:
            raise ValidationError(f"{key}.contract_setup", f"contract {name!r} has no setup group")
        signers = []
        for t in b.setup_group:
            owner = next((u for u in self.users.values() if u.address == t.snd), None)
            if owner is None:
                raise ValidationError(f"{key}.contract_setup", f"no user owns {t.snd!r}")
            signers.append(owner)
        group = b.setup_group
        return [Submit(group, tuple((u.sign_tx(group, i),) for i, u in enumerate(signers)))]

    def strategy(self, entry: dict, key: str):
        kind = entry["kind"]
        maker = STRATEGY_KINDS[kind]
        try:
            return maker(self, entry, key)
        except KeyError as exc:
            raise ValidationError(f"{key}.{exc.args[0]}", "missing") from None


# -- strategy specs -------------------------------------------------------

def _bundle(sc: Scenario, entry: dict, key: str) -> ContractBundle:
    name = entry["contract"]
    if name not in sc.contracts:
        raise ValidationError(f"{key}.contract", f"unknown contract {name!r}")
    return sc.contracts[name]


def _owner(entry: dict, default: str) -> dict:
    return {"owner": entry.get("owner", default)}


def _knobs(entry: dict, allowed: set[str], key: str) -> None:
    extra = set(entry) - allowed - {"kind", "owner", "contract"}
    if extra:
        raise ValidationError(f"{key}.{sorted(extra)[0]}", "unknown key")


def _htlc_reveal(sc, entry, key):
    _knobs(entry, {"secret", "at", "script", "receiver"}, key)
    b = _bundle(sc, entry, key)
    rcv = sc.address(entry["receiver"], f"{key}.receiver") if "receiver" in entry else None
    return S.HtlcReveal(b, sc.blob(entry["secret"], f"{key}.secret"), entry.get("at"),
                        script=entry.get("script", next(iter(b.scripts))), receiver=rcv, **_owner(entry, "A"))


def _htlc_timeout(sc, entry, key):
    _knobs(entry, {"script", "claim", "receiver"}, key)
    b = _bundle(sc, entry, key)
    rcv = sc.address(entry["receiver"], f"{key}.receiver") if "receiver" in entry else None
    return S.HtlcTimeout(b, script=entry.get("script", next(iter(b.scripts))),
                         reveal_claim=entry.get("claim", "A"), receiver=rcv, **_owner(entry, "B"))


def _oracle_claimant(sc, entry, key):
    _knobs(entry, {"party"}, key)
    party = entry.get("party", "A")
    return S.OracleClaimant(_bundle(sc, entry, key), party, **_owner(entry, party))


def _oracle_signer(sc, entry, key):
    _knobs(entry, {"signer", "mode", "at"}, key)
    return S.OracleSigner(_bundle(sc, entry, key), sc.user(entry["signer"], f"{key}.signer"),
                          entry.get("mode", "silent"), entry.get("at", 0), **_owner(entry, entry["signer"]))


def _lottery_player(sc, entry, key):
    _knobs(entry, {"party", "secret", "reveal", "reveal_at"}, key)
    party = entry["party"]
    return S.LotteryPlayer(_bundle(sc, entry, key), party, sc.blob(entry["secret"], f"{key}.secret"),
                           entry.get("reveal", True), entry.get("reveal_at"), **_owner(entry, party))


def _mutual_party(sc, entry, key):
    _knobs(entry, {"party", "secret"}, key)
    party = entry["party"]
    return S.MutualHtlcParty(_bundle(sc, entry, key), party, sc.blob(entry["secret"], f"{key}.secret"),
                             **_owner(entry, party))


def _greedy(sc, entry, key):
    _knobs(entry, set(), key)
    return S.GreedyWithdrawer(_bundle(sc, entry, key), **_owner(entry, "A"))


def _fuzz(sc, entry, key):
    _knobs(entry, {"user", "peers", "p_act", "p_dup", "burst"}, key)
    u = sc.user(entry["user"], f"{key}.user")
    peers = [sc.address(p, f"{key}.peers") for p in entry.get("peers", list(sc.users))]
    scripts = [S.ScriptAccount(b.address(n), [()]) for b in sc.contracts.values() for n in b.scripts]
    return S.FuzzUser(u, peers, scripts, entry.get("p_act", 0.5), entry.get("p_dup", 0.15),
                      entry.get("burst", 2), owner=entry.get("owner", u.name))


def _scripted(sc, entry, key):
    _knobs(entry, {"schedule"}, key)
    sched = []
    for i, item in enumerate(entry.get("schedule", [])):
        k = f"{key}.schedule.{i}"
        if not isinstance(item, dict) or set(item) != {"round", "action"}:
            raise ValidationError(k, "schedule items are {round, action}")
        for act in sc.action(item["action"], f"{k}.action", item["round"]):
            if act == "tick":
                raise ValidationError(k, "ticks are the adversary's choice")
            sched.append((item["round"], act))
    sched.sort(key=lambda x: x[0])
    return S.Scripted(entry.get("name", "scripted"), entry.get("owner", "scripted"), sched)


STRATEGY_KINDS = {
    "htlc-reveal": _htlc_reveal,
    "htlc-timeout": _htlc_timeout,
    "oracle-claimant": _oracle_claimant,
    "oracle-signer": _oracle_signer,
    "lottery-player": _lottery_player,
    "mutual-htlc-party": _mutual_party,
    "greedy-withdrawer": _greedy,
    "fuzz": _fuzz,
    "scripted": _scripted,
}


# -- execution ------------------------------------------------------------

@dataclass
class Outcome:
    run: Run
    ok: bool
    messages: list[str]
    error: Optional[StepError] = None


def _labels(item, knowledge: frozenset) -> list:
    if item == "tick":
        return [TICK]
    if isinstance(item, Witness):
        return [item]
    return expand(item, knowledge)


def initial_state(sc: Scenario) -> NetState:
    g = sc.data["genesis"]
    n = genesis_state(sc.user(g["user"], "genesis.user"), g["supply"], sc.params)
    for i, a in enumerate(sc.data["setup"]):
        for item in sc.action(a, f"setup.{i}", n.chain.round):
            for lab in _labels(item, n.knowledge):
                try:
                    n = net_step(n, lab)
                except StepError as exc:
                    raise ValidationError(f"setup.{i}", f"does not apply: {exc}") from None
    return n


def _scripted_run(sc: Scenario, start: NetState) -> tuple[Run, Optional[StepError], str]:
    run = Run([], [start], sc.seed, ("actions",))
    for i, a in enumerate(sc.data["actions"]):
        for item in sc.action(a, f"actions.{i}", run.states[-1].chain.round):
            for lab in _labels(item, run.states[-1].knowledge):
                try:
                    nxt = net_step(run.states[-1], lab)
                except StepError as exc:
                    return run, exc, f"actions.{i}"
                run.labels.append(lab)
                run.states.append(nxt)
    return run, None, ""


def execute(sc: Scenario) -> Outcome:
    start = initial_state(sc)
    msgs: list[str] = []
    err: Optional[StepError] = None
    if "strategies" in sc.data:
        strats = [sc.strategy(s, f"strategies.{i}") for i, s in enumerate(sc.data["strategies"])]
        adv = sc.data["adversary"]
        adversary = FifoAdversary() if adv["kind"] == "fifo" else RandomAdversary(adv["p_tick"])
        run = simulate(start, strats, adversary, sc.data["max_rounds"], sc.seed, adv["delta"],
                       adv["max_actions_per_round"], sc.data.get("max_labels"))
        if run.rejected:
            msgs.append(f"{len(run.rejected)} proposal(s) rejected")
    else:
        run, err, where = _scripted_run(sc, start)
        if err is not None:
            msgs.append(f"{where}: {err.code.value}: {err.detail}")
    ok = err is None
    for pid in sc.data["properties"]:
        v = PROPERTIES[pid](run)
        msgs.append(f"property {pid}: {'holds' if v.ok else 'FAILS'}"
                    + ("" if v.ok else f" at label {v.position}: {v.detail}"))
        ok = ok and v.ok
    ok = _check_expect(sc, run, msgs) and ok
    return Outcome(run, ok, msgs, err)


def _check_expect(sc: Scenario, run: Run, msgs: list[str]) -> bool:
    exp = sc.data["expect"]
    accts = run.final.chain.accounts
    ok = True
    for ref, want in exp.get("balances", {}).items():
        a = sc.address(ref, f"expect.balances.{ref}")
        want = {ALGO: want} if isinstance(want, int) else {int(k): v for k, v in want.items()}
        got = dict(accts.get(a, {}))
        for tau, v in want.items():
            if got.get(tau) != v:
                msgs.append(f"expect: {ref} holds {got.get(tau)} of asset {tau}, expected {v}")
                ok = False
    for ref in exp.get("closed", []):
        if sc.address(ref, "expect.closed") in accts:
            msgs.append(f"expect: {ref} is still open")
            ok = False
    return ok
