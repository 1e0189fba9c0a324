"""Canonical, self-delimiting byte encodings.

Layout (all integers big-endian):

* address: ``0x01`` u32 key count, length-prefixed keys, u64 threshold;
  or ``0x02`` followed by the 32-byte script hash
* transaction: ``0x10 + type index``, snd, rcv, then u64 val, asst, fv, lv, lx
* script: ``0x20`` .. ``0x29`` constructor tags in preorder
* group-index message: ``0x47``, u32 count, length-prefixed transactions, u64 index
* versig message: ``0x56``, length-prefixed sender address, length-prefixed value
* blockchain state: ``0x60`` followed by every component in sorted order
"""
from __future__ import annotations

from typing import Mapping, Optional, Sequence

from .crypto import hash_bytes
from .expr import Expr, decode_expr, encode_expr, read_expr
from .ledger import (Address, BlockchainState, FrozenDict, Multisig, Params,
                     Script, Transaction)
from .txtype import TxType
from .wire import DecodeError, Reader, Writer

ScriptRegistry = Mapping[bytes, Expr]


def encode_address(a: Address) -> bytes:
    return a.encoding


def read_address(r: Reader, scripts: Optional[ScriptRegistry] = None) -> Address:
    tag = r.u8()
    if tag == 0x01:
        keys = tuple(r.blob() for _ in range(r.u32()))
        n = r.u64()
        try:
            return Multisig(keys, n)
        except ValueError as exc:
            raise DecodeError(str(exc)) from None
    if tag == 0x02:
        digest = r.raw(32)
        return Script(digest, (scripts or {}).get(digest))
    raise DecodeError(f"bad address tag {tag:#x}")


def decode_address(data: bytes, scripts: Optional[ScriptRegistry] = None) -> Address:
    r = Reader(data)
    a = read_address(r, scripts)
    r.expect_done()
    return a


def encode_tx(t: Transaction) -> bytes:
    return t.encoding


def read_tx(r: Reader, scripts: Optional[ScriptRegistry] = None) -> Transaction:
    try:
        ty = TxType.from_tag(r.u8())
    except ValueError as exc:
        raise DecodeError(str(exc)) from None
    snd = read_address(r, scripts)
    rcv = read_address(r, scripts)
    val, asst, fv, lv, lx = (r.u64() for _ in range(5))
    t = Transaction(ty, snd, rcv, val, asst, fv, lv, lx)
    if t.encoding != _reencode(ty, snd, rcv, val, asst, fv, lv, lx):
        # a field that the type ignores carried a non-default value
        raise DecodeError("non-canonical transaction encoding")
    return t


def _reencode(ty, snd, rcv, val, asst, fv, lv, lx) -> bytes:
    w = Writer().u8(ty.tag).raw(snd.encoding).raw(rcv.encoding)
    w.u64(val).u64(asst).u64(fv).u64(lv).u64(lx)
    return w.getvalue()


def decode_tx(data: bytes, scripts: Optional[ScriptRegistry] = None) -> Transaction:
    r = Reader(data)
    t = read_tx(r, scripts)
    r.expect_done()
    return t


def group_message(group: Sequence[Transaction], index: int) -> bytes:
    """What a multisig signer signs to authorize ``group[index]``."""
    w = Writer().u8(0x47).u32(len(group))
    for t in group:
        w.blob(t.encoding)
    w.u64(index)
    return w.getvalue()


def decode_group_message(data: bytes, scripts: Optional[ScriptRegistry] = None):
    r = Reader(data)
    if r.u8() != 0x47:
        raise DecodeError("not a group-index message")
    group = tuple(decode_tx(r.blob(), scripts) for _ in range(r.u32()))
    idx = r.u64()
    r.expect_done()
    return group, idx


def value_bytes(v: int | bytes) -> bytes:
    """Byte view of a script value: integers as 8-byte big-endian."""
    if isinstance(v, int):
        return v.to_bytes(8, "big")
    return bytes(v)


def versig_message(sender: Address, value: int | bytes) -> bytes:
    return Writer().u8(0x56).blob(sender.encoding).blob(value_bytes(value)).getvalue()


def decode_versig_message(data: bytes, scripts: Optional[ScriptRegistry] = None):
    r = Reader(data)
    if r.u8() != 0x56:
        raise DecodeError("not a versig message")
    sender = decode_address(r.blob(), scripts)
    value = r.blob()
    r.expect_done()
    return sender, value


def script_address(e: Expr) -> Script:
    return Script.of(e)


# -- states ---------------------------------------------------------------

def encode_state(s: BlockchainState) -> bytes:
    w = Writer().u8(0x60)
    p = s.params
    w.u64(p.delta_max).u64(p.min_balance).u64(p.max_assets)
    w.u64(s.round).u64(s.next_asset)
    accts = sorted(s.accounts.items(), key=lambda kv: kv[0].encoding)
    w.u32(len(accts))
    for a, bal in accts:
        w.raw(a.encoding).u32(len(bal))
        for k in sorted(bal):
            w.u64(k).u64(bal[k])
    recent = sorted(t.encoding for t in s.recent)
    w.u32(len(recent))
    for enc in recent:
        w.raw(enc)
    w.u32(len(s.assets))
    for k in sorted(s.assets):
        manager, creator = s.assets[k]
        w.u64(k).raw(manager.encoding).raw(creator.encoding)
    leases = sorted(s.leases.items(), key=lambda kv: (kv[0][0].encoding, kv[0][1]))
    w.u32(len(leases))
    for (a, lx), until in leases:
        w.raw(a.encoding).u64(lx).u64(until)
    frz = sorted(((a, ids) for a, ids in s.frozen.items() if ids), key=lambda kv: kv[0].encoding)
    w.u32(len(frz))
    for a, ids in frz:
        w.raw(a.encoding).u32(len(ids))
        for k in sorted(ids):
            w.u64(k)
    return w.getvalue()


def decode_state(data: bytes, scripts: Optional[ScriptRegistry] = None) -> BlockchainState:
    r = Reader(data)
    if r.u8() != 0x60:
        raise DecodeError("not a state encoding")
    params = Params(r.u64(), r.u64(), r.u64())
    rnd, nxt = r.u64(), r.u64()
    accounts = {}
    for _ in range(r.u32()):
        a = read_address(r, scripts)
        accounts[a] = FrozenDict({r.u64(): r.u64() for _ in range(r.u32())})
    recent = frozenset(read_tx(r, scripts) for _ in range(r.u32()))
    assets = {}
    for _ in range(r.u32()):
        k = r.u64()
        assets[k] = (read_address(r, scripts), read_address(r, scripts))
    leases = {}
    for _ in range(r.u32()):
        a = read_address(r, scripts)
        lx = r.u64()
        leases[(a, lx)] = r.u64()
    frozen = {}
    for _ in range(r.u32()):
        a = read_address(r, scripts)
        frozen[a] = frozenset(r.u64() for _ in range(r.u32()))
    r.expect_done()
    return BlockchainState(FrozenDict(accounts), rnd, recent, FrozenDict(assets),
                           FrozenDict(leases), FrozenDict(frozen), nxt, params)


def state_digest(s: BlockchainState) -> bytes:
    return hash_bytes(encode_state(s))


# -- generic entry points -------------------------------------------------

def encode(obj) -> bytes:
    """Encode an address, transaction, script, or state."""
    if isinstance(obj, Address):
        return obj.encoding
    if isinstance(obj, Transaction):
        return obj.encoding
    if isinstance(obj, BlockchainState):
        return encode_state(obj)
    try:
        return encode_expr(obj)
    except KeyError:
        raise TypeError(f"cannot encode {type(obj).__name__}") from None


__all__ = [
    "encode", "encode_address", "decode_address", "encode_tx", "decode_tx",
    "encode_expr", "decode_expr", "group_message", "decode_group_message",
    "versig_message", "decode_versig_message", "value_bytes", "script_address",
    "encode_state", "decode_state", "state_digest", "read_expr", "read_address",
    "read_tx", "DecodeError",
]
