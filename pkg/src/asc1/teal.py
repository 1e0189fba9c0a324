"""TEAL backend: compile scripts to TEAL assembly, translate model
transactions to concrete Algorand JSON, and run compiled programs on a
small interpreter that only knows the emitted opcodes.

Layout of the emitted code:

* ``tx(n).f`` for f in type/snd/rcv/val/asst runs a decoder that matches
  the concrete transaction against the rows below, stores every model
  field into scratch slots and loads the requested one. Slots are
  ``8*n + k`` for a constant index n < 31 and 248..252 otherwise, with k the
  position of the field in ``DECODED``. Slot 255 holds a computed index.
  The decoder runs at every access, so short-circuited branches never
  touch a transaction the script does not look at.
* ``and``/``or`` jump with ``bnz``; the unconditional jumps are
  ``int 1; bnz``. All jumps go forward.
* Integers meet byte strings through ``itob`` and the ``b``-prefixed
  byte-math opcodes, mirroring the evaluator.

Concrete addresses are the hex of the model address encoding; the zero
address is the empty byte string (``0`` in JSON).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Sequence, Union

from . import crypto
from .codec import ScriptRegistry, decode_address, versig_message
from .expr import (Arg, BinOp, Const, Expr, Hash, Not, TxField, TxId, TxLen,
                   TxPos, Versig)
from .ledger import ALGO, Address, Transaction
from .script import BOTTOM, EvalContext, ScriptValue, accepts
from .txtype import TxType
from .wire import DecodeError, U64_MAX

MAX_BYTEMATH_LEN = 64
DECODED = ("type", "snd", "rcv", "val", "asst")
INDEX_SLOT = 255
DYNAMIC_BASE = 248
TYPE_ENUM = {"pay": 1, "acfg": 3, "axfer": 4, "afrz": 5}
NAMED_INTS = dict(TYPE_ENUM)

# TEAL field name -> concrete JSON key
JSON_KEY = {
    "Sender": "snd", "Receiver": "rcv", "Amount": "amt", "CloseRemainderTo": "close",
    "AssetSender": "asnd", "AssetReceiver": "arcv", "AssetCloseTo": "aclose",
    "XferAsset": "xaid", "AssetAmount": "aamt",
    "ConfigAsset": "ConfigAsset", "ConfigAssetTotal": "ConfigAssetTotal",
    "ConfigAssetManager": "ConfigAssetManager", "ConfigAssetFreeze": "ConfigAssetFreeze",
    "ConfigAssetReserve": "ConfigAssetReserve", "ConfigAssetClawback": "ConfigAssetClawback",
    "FreezeAsset": "FreezeAsset", "FreezeAccount": "FreezeAccount", "AssetFrozen": "AssetFrozen",
    "FirstValid": "FirstValid", "LastValid": "LastValid", "Lease": "Lease",
}
ADDRESS_FIELDS = frozenset({
    "Sender", "Receiver", "CloseRemainderTo", "AssetSender", "AssetReceiver", "AssetCloseTo",
    "ConfigAssetManager", "ConfigAssetFreeze", "ConfigAssetReserve", "ConfigAssetClawback",
    "FreezeAccount",
})
MANAGERS = ("ConfigAssetManager", "ConfigAssetFreeze", "ConfigAssetReserve", "ConfigAssetClawback")
TEMPORAL = {"fv": "FirstValid", "lv": "LastValid", "lx": "Lease"}


class Unsupported(ValueError):
    """The script uses a construct the compiler cannot express."""


class Untranslatable(ValueError):
    """A model transaction (or a concrete one) matches no decoding row."""


class TealAssemblyError(ValueError):
    pass


# -- concrete transactions ------------------------------------------------

ConcreteTx = dict


def _addr_json(a: Optional[Address]) -> Union[str, int]:
    return 0 if a is None else a.encoding.hex()


def _addr_bytes(v) -> bytes:
    if v == 0 or v is None:
        return b""
    if isinstance(v, str):
        try:
            return bytes.fromhex(v)
        except ValueError:
            raise Untranslatable(f"bad address {v!r}") from None
    raise Untranslatable(f"bad address {v!r}")


def translate_tx(t: Transaction, assets: Mapping[int, tuple[Address, Address]] = {}) -> ConcreteTx:
    """Concrete Algorand form of ``t``. Revoke and freeze transactions are
    sent by the asset manager, looked up in ``assets``."""
    T = TxType
    snd = _addr_json(t.snd)
    tail = {"FirstValid": t.fv, "LastValid": t.lv, "Lease": t.lx}

    def manager() -> Union[str, int]:
        if t.asst not in assets:
            raise Untranslatable(f"{t.type.name.lower()} of unknown asset {t.asst}")
        return _addr_json(assets[t.asst][0])

    if t.type is T.PAY and t.asst == ALGO:
        out = {"type": "pay", "snd": snd, "rcv": _addr_json(t.rcv), "close": 0, "amt": t.val}
    elif t.type is T.CLOSE and t.asst == ALGO:
        out = {"type": "pay", "snd": snd, "rcv": 0, "close": _addr_json(t.rcv), "amt": 0}
    elif t.type is T.CLOSE:
        out = {"type": "axfer", "snd": snd, "asnd": snd, "arcv": 0, "aclose": _addr_json(t.rcv),
               "xaid": t.asst, "aamt": 0}
    elif t.type is T.PAY:
        if t.snd == t.rcv and t.val == 0:
            raise Untranslatable("a zero asset payment to oneself reads as an opt-in")
        out = {"type": "axfer", "snd": snd, "asnd": 0, "arcv": _addr_json(t.rcv), "aclose": 0,
               "xaid": t.asst, "aamt": t.val}
    elif t.type is T.OPTIN:
        out = {"type": "axfer", "snd": snd, "asnd": 0, "arcv": snd, "aclose": 0,
               "xaid": t.asst, "aamt": 0}
    elif t.type is T.RVK:
        out = {"type": "axfer", "snd": manager(), "asnd": snd, "arcv": _addr_json(t.rcv),
               "aclose": 0, "xaid": t.asst, "aamt": t.val}
    elif t.type is T.GEN:
        m = _addr_json(t.rcv)
        out = {"type": "acfg", "snd": snd, "ConfigAsset": 0, **{k: m for k in MANAGERS},
               "ConfigAssetTotal": t.val}
    elif t.type is T.BURN:
        out = {"type": "acfg", "snd": snd, "ConfigAsset": t.asst, **{k: 0 for k in MANAGERS}}
    elif t.type is T.DELEGATE:
        if t.asst == ALGO:
            raise Untranslatable("delegating Algo reads as an asset creation")
        m = _addr_json(t.rcv)
        out = {"type": "acfg", "snd": snd, "ConfigAsset": t.asst, **{k: m for k in MANAGERS}}
    else:  # FRZ / UNFRZ
        out = {"type": "afrz", "snd": manager(), "FreezeAccount": snd, "FreezeAsset": t.asst,
               "AssetFrozen": t.type is T.FRZ}
    out.update(tail)
    return out


def _fields(c: ConcreteTx) -> dict[str, object]:
    """TEAL-visible fields of a concrete transaction (absent means zero)."""
    ty = c.get("type")
    if ty not in TYPE_ENUM:
        raise Untranslatable(f"unknown concrete type {ty!r}")
    out: dict[str, object] = {"TypeEnum": TYPE_ENUM[ty]}
    for fname, key in JSON_KEY.items():
        v = c.get(key, 0)
        if fname in ADDRESS_FIELDS:
            out[fname] = _addr_bytes(v)
        elif isinstance(v, bool):
            out[fname] = int(v)
        elif isinstance(v, int) and 0 <= v <= U64_MAX:
            out[fname] = v
        else:
            raise Untranslatable(f"field {key} must be a u64, got {v!r}")
    return out


def _row(f: Mapping[str, object]) -> Optional[tuple[TxType, bytes, bytes, int, int]]:
    """The decoding rows, as plain Python: (type, snd, rcv, val, asst)."""
    T, ty = TxType, f["TypeEnum"]
    z = b""
    if ty == 1:
        if f["CloseRemainderTo"] != z and f["Amount"] == 0 and f["Receiver"] == z:
            return T.CLOSE, f["Sender"], f["CloseRemainderTo"], 0, ALGO
        if f["CloseRemainderTo"] == z:
            return T.PAY, f["Sender"], f["Receiver"], f["Amount"], ALGO
    elif ty == 4:
        if (f["AssetSender"] != z and f["AssetAmount"] == 0 and f["AssetCloseTo"] != z
                and f["AssetReceiver"] == z and f["Sender"] == f["AssetSender"]):
            return T.CLOSE, f["AssetSender"], f["AssetCloseTo"], 0, f["XferAsset"]
        if f["AssetSender"] == z and f["AssetCloseTo"] == z:
            if f["Sender"] == f["AssetReceiver"] and f["AssetAmount"] == 0:
                return T.OPTIN, f["Sender"], f["Sender"], 0, f["XferAsset"]
            return T.PAY, f["Sender"], f["AssetReceiver"], f["AssetAmount"], f["XferAsset"]
        if f["Sender"] != z and f["AssetSender"] != z and f["AssetCloseTo"] == z:
            return T.RVK, f["AssetSender"], f["AssetReceiver"], f["AssetAmount"], f["XferAsset"]
    elif ty == 3:
        m = [f[k] for k in MANAGERS]
        if all(x == z for x in m):
            return T.BURN, f["Sender"], f["Sender"], 0, f["ConfigAsset"]
        if m[0] != z and m[0] == m[1] == m[2] == m[3]:
            if f["ConfigAsset"] == 0:
                return T.GEN, f["Sender"], m[0], f["ConfigAssetTotal"], ALGO
            return T.DELEGATE, f["Sender"], m[0], 0, f["ConfigAsset"]
    elif ty == 5:
        ty2 = T.FRZ if f["AssetFrozen"] == 1 else T.UNFRZ if f["AssetFrozen"] == 0 else None
        if ty2 is not None:
            return ty2, f["FreezeAccount"], f["FreezeAccount"], 0, f["FreezeAsset"]
    return None


def decode_concrete(c: ConcreteTx, scripts: Optional[ScriptRegistry] = None) -> Transaction:
    """Model transaction a concrete one stands for (inverse of ``translate_tx``)."""
    f = _fields(c)
    row = _row(f)
    if row is None:
        raise Untranslatable("no decoding row matches")
    ty, snd, rcv, val, asst = row
    try:
        return Transaction(ty, decode_address(snd, scripts), decode_address(rcv, scripts),
                           val, asst, f["FirstValid"], f["LastValid"], f["Lease"])
    except (DecodeError, ValueError) as exc:
        raise Untranslatable(f"undecodable address: {exc}") from None


def dumps_concrete(c: ConcreteTx) -> str:
    return json.dumps(c, sort_keys=False)


# -- programs -------------------------------------------------------------

# opcode -> (pops, pushes)
_ARITY = {
    "int": (0, 1), "byte": (0, 1), "arg": (0, 1), "txn": (0, 1), "gtxn": (0, 1),
    "gtxns": (1, 1), "global": (0, 1), "load": (0, 1), "store": (1, 0),
    "+": (2, 1), "-": (2, 1), "*": (2, 1), "/": (2, 1), "%": (2, 1),
    "<": (2, 1), ">": (2, 1), "<=": (2, 1), ">=": (2, 1), "==": (2, 1), "!=": (2, 1),
    "&&": (2, 1), "!": (1, 1), "len": (1, 1), "itob": (1, 1),
    "b+": (2, 1), "b-": (2, 1), "b*": (2, 1), "b/": (2, 1), "b%": (2, 1),
    "b<": (2, 1), "b>": (2, 1), "b<=": (2, 1), "b>=": (2, 1), "b==": (2, 1),
    "bnz": (1, 0), "pop": (1, 0), "dup": (1, 2), "sha256": (1, 1),
    "ed25519verify": (3, 1), "err": (0, 0),
}
_NEEDS_V3 = {"gtxns"}
_NEEDS_V4 = {"b+", "b-", "b*", "b/", "b%", "b<", "b>", "b<=", "b>=", "b=="}


@dataclass(frozen=True)
class TealProgram:
    lines: tuple[str, ...]
    version: int = 2
    max_depth: int = 0

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"

    @cached_property
    def code(self) -> tuple[tuple, dict[str, int]]:
        return _parse(self.lines)

    @classmethod
    def from_text(cls, text: str) -> "TealProgram":
        lines = tuple(ln.rstrip() for ln in text.splitlines() if ln.strip())
        code, _ = _parse(lines)
        version = 2
        for ln in lines:
            if ln.startswith("#pragma version"):
                version = int(ln.split()[2])
        return cls(lines, version, stack_check(lines))


def _strip(line: str) -> str:
    if line.startswith("#pragma"):
        return ""
    i = line.find("//")
    return (line if i < 0 else line[:i]).strip()


def _parse(lines: Sequence[str]) -> tuple[tuple, dict[str, int]]:
    code: list[tuple] = []
    labels: dict[str, int] = {}
    for raw in lines:
        s = _strip(raw)
        if not s:
            continue
        if s.endswith(":"):
            name = s[:-1]
            if name in labels:
                raise TealAssemblyError(f"duplicate label {name}")
            labels[name] = len(code)
            continue
        parts = s.split()
        op, imm = parts[0], parts[1:]
        if op not in _ARITY:
            raise TealAssemblyError(f"opcode {op!r} is outside the supported subset")
        if op == "int":
            if len(imm) != 1:
                raise TealAssemblyError("int takes one immediate")
            v = NAMED_INTS.get(imm[0])
            if v is None:
                try:
                    v = int(imm[0], 0)
                except ValueError:
                    raise TealAssemblyError(f"bad int {imm[0]!r}") from None
            if not 0 <= v <= U64_MAX:
                raise TealAssemblyError("int out of range")
            code.append((op, v))
        elif op == "byte":
            if len(imm) != 1 or not imm[0].startswith("0x"):
                raise TealAssemblyError("byte takes one 0x-prefixed immediate")
            code.append((op, bytes.fromhex(imm[0][2:])))
        elif op in ("arg", "load", "store"):
            n = int(imm[0])
            if not 0 <= n <= 255:
                raise TealAssemblyError(f"{op} immediate out of range")
            code.append((op, n))
        elif op == "gtxn":
            code.append((op, int(imm[0]), imm[1]))
        elif op in ("txn", "gtxns", "global", "bnz"):
            code.append((op, imm[0]))
        else:
            if imm:
                raise TealAssemblyError(f"{op} takes no immediates")
            code.append((op,))
    for ins in code:
        if ins[0] == "bnz" and ins[1] not in labels:
            raise TealAssemblyError(f"missing label {ins[1]}")
    return tuple(code), labels


def stack_check(lines: Sequence[str]) -> int:
    """Static stack discipline: every instruction has its operands, every
    path reaches a label with the same depth, jumps go forward, and the
    program ends with one value. Returns the maximum depth."""
    code, labels = _parse(lines)
    depth_at: dict[int, int] = {0: 0}
    best = 0
    end_depths = set()
    for pc, ins in enumerate(code):
        if pc not in depth_at:
            continue  # unreachable
        d = depth_at[pc]
        pops, pushes = _ARITY[ins[0]]
        if d < pops:
            raise TealAssemblyError(f"stack underflow at instruction {pc} ({ins[0]})")
        d = d - pops + pushes
        best = max(best, d)
        targets = []
        if ins[0] == "bnz":
            tgt = labels[ins[1]]
            if tgt <= pc:
                raise TealAssemblyError("backward jump")
            targets.append(tgt)
        # "int k; bnz L" with k nonzero is how the emitter spells a plain jump
        always = ins[0] == "bnz" and pc > 0 and code[pc - 1][0] == "int" and code[pc - 1][1] != 0
        if ins[0] != "err" and not always:
            targets.append(pc + 1)
        for t in targets:
            if t == len(code):
                end_depths.add(d)
            elif depth_at.setdefault(t, d) != d:
                raise TealAssemblyError(f"inconsistent stack depth at instruction {t}")
    if end_depths - {1}:
        raise TealAssemblyError(f"program may end with stack depth {sorted(end_depths)}")
    return best


# -- compiler -------------------------------------------------------------

U, B, ANY = "uint", "bytes", "any"
_FIELD_TYPE = {"type": B, "snd": B, "rcv": B, "val": U, "asst": U, "fv": U, "lv": U, "lx": U}


class _Emitter:
    def __init__(self) -> None:
        self.out: list[str] = []
        self.n = 0
        self.ops: set[str] = set()

    def emit(self, *lines: str) -> None:
        for ln in lines:
            self.out.append(ln)
            if not ln.endswith(":"):
                self.ops.add(ln.split()[0])

    def label(self) -> str:
        self.n += 1
        return f"L{self.n}"

    def place(self, lab: str) -> None:
        self.out.append(f"{lab}:")

    def jump(self, lab: str) -> None:
        self.emit("int 1", f"bnz {lab}")


def _join(a: str, b: str) -> str:
    return a if a == b else ANY


def _lift(em: _Emitter, ty: str) -> None:
    if ty == U:
        em.emit("itob")


def _compile(em: _Emitter, e: Expr) -> str:
    """Emit code leaving the value of ``e`` on the stack; returns its
    static type."""
    t = type(e)
    if t is Const:
        if isinstance(e.value, int):
            em.emit(f"int {e.value}")
            return U
        em.emit(f"byte 0x{e.value.hex()}")
        return B
    if t is BinOp:
        if e.op in ("and", "or"):
            # the left operand must be an integer; bnz fails on bytes
            _compile(em, e.left)
            yes, end = em.label(), em.label()
            em.emit(f"bnz {yes}")
            if e.op == "and":
                em.emit("int 0")
                em.jump(end)
                em.place(yes)
                rt = _compile(em, e.right)
            else:
                rt = _compile(em, e.right)
                em.jump(end)
                em.place(yes)
                em.emit("int 1")
            em.place(end)
            return _join(U, rt)
        lt = _compile(em, e.left)
        # the operand type decides the opcode; find the right type first
        mark = len(em.out)
        rt = _compile(em, e.right)
        if ANY in (lt, rt):
            raise Unsupported(f"operand of {e.op!r} may be an integer or bytes")
        if e.op == "=" and lt == rt:
            em.emit("==")
            return U
        if lt == U and rt == U:
            em.emit({"=": "=="}.get(e.op, e.op))
            return U
        # byte math: lift integer operands
        if lt == U:
            right_code = em.out[mark:]
            del em.out[mark:]
            em.emit("itob")
            em.out.extend(right_code)
        _lift(em, rt)
        em.emit("b==" if e.op == "=" else "b" + e.op)
        return B if e.op in ("+", "-", "*", "/", "%") else U
    if t is Not:
        _compile(em, e.operand)
        em.emit("!")
        return U
    if t is TxLen:
        em.emit("global GroupSize")
        return U
    if t is TxPos:
        em.emit("txn GroupIndex")
        return U
    if t is TxId:
        _access(em, e.index, "TxID")
        return B
    if t is TxField:
        if e.field in TEMPORAL:
            _access(em, e.index, TEMPORAL[e.field])
        else:
            _decode(em, e.index, e.field)
        return _FIELD_TYPE[e.field]
    if t is Arg:
        if e.n > 255:
            raise Unsupported("argument index above 255")
        em.emit(f"arg {e.n}")
        return B
    if t is Hash:
        ty = _compile(em, e.operand)
        if ty == ANY:
            raise Unsupported("hash operand may be an integer or bytes")
        _lift(em, ty)
        em.emit("sha256")
        return B
    if t is Versig:
        ty = _compile(em, e.msg)
        if ty == ANY:
            raise Unsupported("signed message may be an integer or bytes")
        _lift(em, ty)
        _compile(em, e.sig)
        _compile(em, e.key)
        em.emit("ed25519verify")
        return U
    raise Unsupported(f"not a script expression: {e!r}")


def _const_index(index: Expr) -> Optional[int]:
    if isinstance(index, Const) and isinstance(index.value, int) and index.value < 31:
        return index.value
    return None


def _reader(em: _Emitter, index: Expr) -> tuple[callable, int]:
    """Prepare access to transaction ``index``; returns a function emitting
    ``field`` of it, plus the first scratch slot for decoded values."""
    n = _const_index(index)
    if n is not None:
        return (lambda f: em.emit(f"gtxn {n} {f}")), 8 * n
    if isinstance(index, TxPos):
        return (lambda f: em.emit(f"txn {f}")), DYNAMIC_BASE
    _compile(em, index)
    em.emit(f"store {INDEX_SLOT}")
    return (lambda f: em.emit(f"load {INDEX_SLOT}", f"gtxns {f}")), DYNAMIC_BASE


def _access(em: _Emitter, index: Expr, fname: str) -> None:
    read, _ = _reader(em, index)
    read(fname)


def _decode(em: _Emitter, index: Expr, want: str) -> None:
    read, base = _reader(em, index)
    slot = {f: base + k for k, f in enumerate(DECODED)}
    done = em.label()
    zero = "global ZeroAddress"

    def row(name: str, checks: list[list[str]], values: dict[str, list[str]]) -> None:
        nxt = em.label()
        em.emit(f"// row: {name}")
        for chk in checks:
            for part in chk:
                if part.startswith("@"):
                    read(part[1:])
                else:
                    em.emit(part)
            em.emit("!", f"bnz {nxt}")
        for f in DECODED:
            for part in values[f]:
                if part.startswith("@"):
                    read(part[1:])
                else:
                    em.emit(part)
            em.emit(f"store {slot[f]}")
        em.jump(done)
        em.place(nxt)

    def is_type(k: str) -> list[str]:
        return ["@TypeEnum", f"int {k}", "=="]

    def tag(ty: TxType) -> list[str]:
        return [f"byte 0x{ty.tag_bytes.hex()}"]

    def addr_is(name: str, zero_wanted: bool) -> list[str]:
        return [f"@{name}", zero, "==" if zero_wanted else "!="]

    def num_is(name: str, v: int) -> list[str]:
        return [f"@{name}", f"int {v}", "=="]

    algo = ["int 0"]
    T = TxType
    row("close-algo", [is_type("pay"), addr_is("CloseRemainderTo", False), num_is("Amount", 0),
                       addr_is("Receiver", True)],
        {"type": tag(T.CLOSE), "snd": ["@Sender"], "rcv": ["@CloseRemainderTo"], "val": ["int 0"],
         "asst": algo})
    row("pay-algo", [is_type("pay"), addr_is("CloseRemainderTo", True)],
        {"type": tag(T.PAY), "snd": ["@Sender"], "rcv": ["@Receiver"], "val": ["@Amount"],
         "asst": algo})
    row("close-asset", [is_type("axfer"), addr_is("AssetSender", False), num_is("AssetAmount", 0),
                        addr_is("AssetCloseTo", False), addr_is("AssetReceiver", True),
                        ["@Sender", "@AssetSender", "=="]],
        {"type": tag(T.CLOSE), "snd": ["@AssetSender"], "rcv": ["@AssetCloseTo"], "val": ["int 0"],
         "asst": ["@XferAsset"]})
    row("optin", [is_type("axfer"), ["@Sender", "@AssetReceiver", "=="], addr_is("AssetSender", True),
                  num_is("AssetAmount", 0), addr_is("AssetCloseTo", True)],
        {"type": tag(T.OPTIN), "snd": ["@Sender"], "rcv": ["@Sender"], "val": ["int 0"],
         "asst": ["@XferAsset"]})
    row("pay-asset", [is_type("axfer"), addr_is("AssetSender", True), addr_is("AssetCloseTo", True)],
        {"type": tag(T.PAY), "snd": ["@Sender"], "rcv": ["@AssetReceiver"], "val": ["@AssetAmount"],
         "asst": ["@XferAsset"]})
    row("revoke", [is_type("axfer"), addr_is("Sender", False), addr_is("AssetSender", False),
                   addr_is("AssetCloseTo", True)],
        {"type": tag(T.RVK), "snd": ["@AssetSender"], "rcv": ["@AssetReceiver"], "val": ["@AssetAmount"],
         "asst": ["@XferAsset"]})
    eq_managers = [["@ConfigAssetManager", "@ConfigAssetFreeze", "=="],
                   ["@ConfigAssetFreeze", "@ConfigAssetReserve", "=="],
                   ["@ConfigAssetReserve", "@ConfigAssetClawback", "=="]]
    row("gen", [is_type("acfg"), num_is("ConfigAsset", 0),
                ["@ConfigAssetManager", "len", "int 0", "!="]] + eq_managers,
        {"type": tag(T.GEN), "snd": ["@Sender"], "rcv": ["@ConfigAssetManager"],
         "val": ["@ConfigAssetTotal"], "asst": algo})
    row("burn", [is_type("acfg")] + [[f"@{m}", "len", "int 0", "=="] for m in MANAGERS],
        {"type": tag(T.BURN), "snd": ["@Sender"], "rcv": ["@Sender"], "val": ["int 0"],
         "asst": ["@ConfigAsset"]})
    row("freeze", [is_type("afrz"), num_is("AssetFrozen", 1)],
        {"type": tag(T.FRZ), "snd": ["@FreezeAccount"], "rcv": ["@FreezeAccount"], "val": ["int 0"],
         "asst": ["@FreezeAsset"]})
    row("unfreeze", [is_type("afrz"), num_is("AssetFrozen", 0)],
        {"type": tag(T.UNFRZ), "snd": ["@FreezeAccount"], "rcv": ["@FreezeAccount"], "val": ["int 0"],
         "asst": ["@FreezeAsset"]})
    row("delegate", [is_type("acfg"), ["@ConfigAsset", "int 0", "!="],
                     ["@ConfigAssetManager", "len", "int 0", "!="]] + eq_managers,
        {"type": tag(T.DELEGATE), "snd": ["@Sender"], "rcv": ["@ConfigAssetManager"], "val": ["int 0"],
         "asst": ["@ConfigAsset"]})
    em.emit("err")
    em.place(done)
    em.emit(f"load {slot[want]}")


def compile_script(e: Expr) -> TealProgram:
    em = _Emitter()
    _compile(em, e)
    version = 4 if em.ops & _NEEDS_V4 else 3 if em.ops & _NEEDS_V3 else 2
    lines = (f"#pragma version {version}", "// compiled from a stateless contract script") + tuple(em.out)
    return TealProgram(lines, version, stack_check(lines))


# -- interpreter ----------------------------------------------------------

class _Fail(Exception):
    pass


@dataclass
class PreparedGroup:
    """A concrete group with TEAL fields, ids and decoded senders computed
    once, for running many programs over the same context."""

    txs: tuple[ConcreteTx, ...]
    fields: tuple[dict, ...] = field(init=False)
    decoded: tuple[Optional[Transaction], ...] = field(init=False)

    def __post_init__(self) -> None:
        self.txs = tuple(self.txs)
        fs, dec = [], []
        for c in self.txs:
            f = _fields(c)
            fs.append(f)
            try:
                dec.append(decode_concrete(c))
            except Untranslatable:
                dec.append(None)
        self.fields = tuple(fs)
        self.decoded = tuple(dec)


def _fetch(g: PreparedGroup, i, name: str):
    if not isinstance(i, int) or i >= len(g.txs):
        raise _Fail("transaction index out of range")
    if name == "TxID":
        t = g.decoded[i]
        if t is None:
            raise _Fail("transaction id of an undecodable transaction")
        return t.txid
    try:
        return g.fields[i][name]
    except KeyError:
        raise _Fail(f"unknown field {name}") from None


def _num(v) -> int:
    if not isinstance(v, bytes) or len(v) > MAX_BYTEMATH_LEN:
        raise _Fail("byte-math operand must be bytes of at most 64")
    return int.from_bytes(v, "big")


def _uint(v) -> int:
    if not isinstance(v, int):
        raise _Fail("expected an integer")
    return v


_CMP = {"<": lambda a, b: a < b, ">": lambda a, b: a > b, "<=": lambda a, b: a <= b,
        ">=": lambda a, b: a >= b}


def _run(code, labels, g: PreparedGroup, index: int, args: Sequence[bytes]):
    stack: list = []
    scratch: list = [0] * 256
    pc, n = 0, len(code)
    push, pop = stack.append, stack.pop
    while pc < n:
        ins = code[pc]
        op = ins[0]
        pc += 1
        if not stack and _ARITY[op][0]:
            raise _Fail("stack underflow")
        if op == "int" or op == "byte":
            push(ins[1])
        elif op == "bnz":
            if _uint(pop()) != 0:
                pc = labels[ins[1]]
        elif op == "gtxn":
            push(_fetch(g, ins[1], ins[2]))
        elif op == "txn":
            push(index if ins[1] == "GroupIndex" else _fetch(g, index, ins[1]))
        elif op == "gtxns":
            push(_fetch(g, pop(), ins[1]))
        elif op == "load":
            push(scratch[ins[1]])
        elif op == "store":
            scratch[ins[1]] = pop()
        elif op == "arg":
            if ins[1] >= len(args):
                raise _Fail("missing argument")
            push(args[ins[1]])
        elif op == "global":
            if ins[1] == "GroupSize":
                push(len(g.txs))
            elif ins[1] == "ZeroAddress":
                push(b"")
            else:
                raise _Fail(f"unknown global {ins[1]}")
        elif op in ("==", "!="):
            b, a = pop(), _pop(stack)
            if type(a) is not type(b):
                raise _Fail("comparing an integer with bytes")
            push(int((a == b) == (op == "==")))
        elif op in ("+", "-", "*", "/", "%"):
            b, a = _uint(pop()), _uint(_pop(stack))
            if op == "+":
                r = a + b
            elif op == "-":
                r = a - b
            elif op == "*":
                r = a * b
            else:
                if b == 0:
                    raise _Fail("division by zero")
                r = a // b if op == "/" else a % b
            if not 0 <= r <= U64_MAX:
                raise _Fail("integer overflow")
            push(r)
        elif op in _CMP:
            b, a = _uint(pop()), _uint(_pop(stack))
            push(int(_CMP[op](a, b)))
        elif op == "&&":
            b, a = _uint(pop()), _uint(_pop(stack))
            push(int(a != 0 and b != 0))
        elif op == "!":
            push(int(_uint(pop()) == 0))
        elif op == "len":
            v = pop()
            if not isinstance(v, bytes):
                raise _Fail("len of an integer")
            push(len(v))
        elif op == "itob":
            push(_uint(pop()).to_bytes(8, "big"))
        elif op[0] == "b" and op != "bnz" and op != "byte":
            b, a = _num(pop()), _num(_pop(stack))
            o = op[1:]
            if o == "==":
                push(int(a == b))
            elif o in _CMP:
                push(int(_CMP[o](a, b)))
            else:
                if o == "+":
                    r = a + b
                elif o == "-":
                    r = a - b
                elif o == "*":
                    r = a * b
                else:
                    if b == 0:
                        raise _Fail("division by zero")
                    r = a // b if o == "/" else a % b
                if r < 0:
                    raise _Fail("byte-math underflow")
                push(r.to_bytes((r.bit_length() + 7) // 8, "big"))
        elif op == "pop":
            pop()
        elif op == "dup":
            push(stack[-1])
        elif op == "sha256":
            v = pop()
            if not isinstance(v, bytes):
                raise _Fail("sha256 of an integer")
            push(crypto.hash_bytes(v))
        elif op == "ed25519verify":
            key, sig, data = pop(), _pop(stack), _pop(stack)
            if not all(isinstance(x, bytes) for x in (key, sig, data)):
                raise _Fail("ed25519verify needs byte strings")
            me = g.decoded[index]
            if me is None:
                raise _Fail("current transaction is undecodable")
            if len(sig) != crypto.SIG_LEN or len(key) != crypto.KEY_LEN:
                push(0)
            else:
                push(int(crypto.verify(key, versig_message(me.snd, data), sig)))
        elif op == "err":
            raise _Fail("err")
        else:  # pragma: no cover - _parse rejects unknown opcodes
            raise _Fail(f"unknown opcode {op}")
    if len(stack) != 1:
        raise _Fail(f"program ended with {len(stack)} values")
    return stack[0]


def _pop(stack: list):
    if not stack:
        raise _Fail("stack underflow")
    return stack.pop()


def interpret_teal(prog: TealProgram, group: Union[PreparedGroup, Sequence[ConcreteTx]],
                   index: int, args: Sequence[bytes] = ()) -> ScriptValue:
    """Run ``prog`` for transaction ``index`` of a concrete group. Any
    runtime failure yields BOTTOM."""
    g = group if isinstance(group, PreparedGroup) else PreparedGroup(tuple(group))
    if not 0 <= index < len(g.txs):
        return BOTTOM
    code, labels = prog.code
    try:
        return _run(code, labels, g, index, tuple(bytes(a) for a in args))
    except _Fail:
        return BOTTOM


def teal_accepts(v: ScriptValue) -> bool:
    return isinstance(v, int) and v is not BOTTOM and v != 0


def differential_check(e: Expr, group: Sequence[Transaction], index: int, args: Sequence[bytes] = (),
                       assets: Mapping[int, tuple[Address, Address]] = {},
                       prog: Optional[TealProgram] = None,
                       prepared: Optional[PreparedGroup] = None) -> bool:
    """Whether the evaluator and the compiled program agree on acceptance."""
    model = accepts(EvalContext(tuple(group), index, tuple(args)), e)
    if prepared is None:
        prepared = PreparedGroup(tuple(translate_tx(t, assets) for t in group))
    prog = prog if prog is not None else compile_script(e)
    return model == teal_accepts(interpret_teal(prog, prepared, index, args))
