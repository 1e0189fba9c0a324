"""JSON-lines run traces.

The first line describes the starting point (full state encoding, the
initial knowledge, and every script the run refers to, so contract
accounts can be re-authorized on replay). Each following line is one
label: its kind, the digest of its encoding, the round after the step and
the post-state digest, plus the encoded label itself.
"""
from __future__ import annotations

import json
from typing import IO, Iterable

from .codec import decode_state, decode_tx, encode_state
from .crypto import hash_bytes
from .expr import Expr, decode_expr, encode_expr
from .ledger import Script
from .semantics import (TICK, AuthGroup, Label, NetState, StepError, Tick,
                        Witness, net_step)
from .sim import Run
from .wire import DecodeError, Reader, Writer


def encode_label(lab: Label) -> bytes:
    if isinstance(lab, Witness):
        return Writer().u8(0x70).blob(lab.w).getvalue()
    if isinstance(lab, Tick):
        return b"\x71"
    w = Writer().u8(0x72).u32(len(lab.group))
    for ws, t in zip(lab.witnesses, lab.group):
        w.u32(len(ws))
        for x in ws:
            w.blob(x)
        w.blob(t.encoding)
    return w.getvalue()


def decode_label(data: bytes, scripts=None) -> Label:
    r = Reader(data)
    tag = r.u8()
    if tag == 0x70:
        lab: Label = Witness(r.blob())
    elif tag == 0x71:
        lab = TICK
    elif tag == 0x72:
        wits, group = [], []
        for _ in range(r.u32()):
            wits.append(tuple(r.blob() for _ in range(r.u32())))
            group.append(decode_tx(r.blob(), scripts))
        lab = AuthGroup(tuple(wits), tuple(group))
    else:
        raise DecodeError(f"bad label tag {tag:#x}")
    r.expect_done()
    return lab


def label_kind(lab: Label) -> str:
    return {Witness: "witness", Tick: "tick", AuthGroup: "group"}[type(lab)]


def _scripts_of(run: Run) -> dict[bytes, Expr]:
    found: dict[bytes, Expr] = {}

    def note(a) -> None:
        if isinstance(a, Script) and a.expr is not None:
            found[a.digest] = a.expr
    for n in run.states:
        for a in n.chain.accounts:
            note(a)
        for m, c in n.chain.assets.values():
            note(m)
            note(c)
    for _, _, t in run.transactions():
        note(t.snd)
        note(t.rcv)
    for a in run.watch:
        note(a)
    return found


def trace_lines(run: Run) -> list[dict]:
    first = run.states[0]
    lines = [{
        "kind": "genesis",
        "round": first.chain.round,
        "state": first.chain.digest.hex(),
        "encoding": encode_state(first.chain).hex(),
        "knowledge": sorted(w.hex() for w in first.knowledge),
        "scripts": {d.hex(): encode_expr(e).hex() for d, e in sorted(_scripts_of(run).items())},
        "watch": [a.encoding.hex() for a in run.watch],
        "seed": str(run.seed),
    }]
    for i, lab in enumerate(run.labels):
        enc = encode_label(lab)
        post = run.states[i + 1].chain
        lines.append({
            "step": i + 1,
            "kind": label_kind(lab),
            "payload": hash_bytes(enc).hex(),
            "round": post.round,
            "state": post.digest.hex(),
            "label": enc.hex(),
        })
    return lines


def dumps(run: Run) -> str:
    return "".join(json.dumps(x, sort_keys=True, separators=(",", ":")) + "\n" for x in trace_lines(run))


def write(run: Run, fp: IO[str]) -> None:
    fp.write(dumps(run))


def trace_digest(run: Run) -> bytes:
    return hash_bytes(dumps(run).encode())


class TraceError(ValueError):
    pass


def load(lines: Iterable[str]) -> tuple[Run, list[str]]:
    """Rebuild a run from its trace by re-applying every label.

    Returns the run and the post-state digests recorded in the trace, so a
    caller can compare them with the replayed states.
    """
    try:
        return _load(lines)
    except (json.JSONDecodeError, KeyError, ValueError, DecodeError) as exc:
        if isinstance(exc, TraceError):
            raise
        raise TraceError(f"malformed trace: {exc}") from None
    except StepError as exc:
        raise TraceError(f"label does not apply on replay: {exc}") from None


def _load(lines: Iterable[str]) -> tuple[Run, list[str]]:
    from .codec import decode_address
    it = (json.loads(x) for x in lines if x.strip())
    try:
        head = next(it)
    except StopIteration:
        raise TraceError("empty trace") from None
    if head.get("kind") != "genesis":
        raise TraceError("trace must start with a genesis line")
    scripts = {bytes.fromhex(d): decode_expr(bytes.fromhex(e)) for d, e in head.get("scripts", {}).items()}
    chain = decode_state(bytes.fromhex(head["encoding"]), scripts)
    start = NetState(chain, frozenset(bytes.fromhex(w) for w in head.get("knowledge", [])))
    watch = tuple(decode_address(bytes.fromhex(a), scripts) for a in head.get("watch", []))
    run = Run([], [start], head.get("seed"), watch=watch)
    recorded = [head["state"]]
    for entry in it:
        lab = decode_label(bytes.fromhex(entry["label"]), scripts)
        run.labels.append(lab)
        run.states.append(net_step(run.states[-1], lab))
        recorded.append(entry["state"])
    return run, recorded
