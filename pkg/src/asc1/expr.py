"""Script abstract syntax.

Core constructors mirror the contract language: constants, binary
operators, negation, group introspection (txlen, txpos, txid, tx field
access), witness arguments, hashing and signature verification. The
helpers at the bottom build the usual sugar (``true``, ``tx.f``,
``if-then-else`` ...) out of core nodes only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .txtype import TxType
from .wire import DecodeError, Reader, Writer

ARITH_OPS = ("+", "-", "*", "/", "%")
CMP_OPS = ("<", "<=", "=", ">=", ">")
LOGIC_OPS = ("and", "or")
BIN_OPS = ARITH_OPS + CMP_OPS + LOGIC_OPS

FIELDS = ("type", "snd", "rcv", "val", "asst", "fv", "lv", "lx")
BYTES_FIELDS = frozenset({"type", "snd", "rcv"})

Value = Union[int, bytes]


@dataclass(frozen=True)
class Const:
    value: Value

    def __post_init__(self) -> None:
        v = self.value
        if isinstance(v, bool) or not isinstance(v, (int, bytes)):
            raise TypeError(f"constant must be int or bytes, got {type(v).__name__}")
        if isinstance(v, int) and not 0 <= v < 2**64:
            raise ValueError(f"constant out of u64 range: {v}")


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self) -> None:
        if self.op not in BIN_OPS:
            raise ValueError(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class TxLen:
    pass


@dataclass(frozen=True)
class TxPos:
    pass


@dataclass(frozen=True)
class TxId:
    index: "Expr"


@dataclass(frozen=True)
class TxField:
    index: "Expr"
    field: str

    def __post_init__(self) -> None:
        if self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}")


@dataclass(frozen=True)
class Arg:
    n: int


@dataclass(frozen=True)
class Hash:
    operand: "Expr"


@dataclass(frozen=True)
class Versig:
    msg: "Expr"
    sig: "Expr"
    key: "Expr"


Expr = Union[Const, BinOp, Not, TxLen, TxPos, TxId, TxField, Arg, Hash, Versig]

_TAGS = {Const: 0x20, BinOp: 0x21, Not: 0x22, TxLen: 0x23, TxPos: 0x24,
         TxId: 0x25, TxField: 0x26, Arg: 0x27, Hash: 0x28, Versig: 0x29}


# -- canonical encoding ---------------------------------------------------

def write_expr(w: Writer, e: Expr) -> None:
    w.u8(_TAGS[type(e)])
    if isinstance(e, Const):
        if isinstance(e.value, int):
            w.u8(0).u64(e.value)
        else:
            w.u8(1).blob(e.value)
    elif isinstance(e, BinOp):
        w.u8(BIN_OPS.index(e.op))
        write_expr(w, e.left)
        write_expr(w, e.right)
    elif isinstance(e, (Not, Hash)):
        write_expr(w, e.operand)
    elif isinstance(e, TxId):
        write_expr(w, e.index)
    elif isinstance(e, TxField):
        write_expr(w, e.index)
        w.u8(FIELDS.index(e.field))
    elif isinstance(e, Arg):
        w.u64(e.n)
    elif isinstance(e, Versig):
        write_expr(w, e.msg)
        write_expr(w, e.sig)
        write_expr(w, e.key)


def encode_expr(e: Expr) -> bytes:
    w = Writer()
    write_expr(w, e)
    return w.getvalue()


def read_expr(r: Reader) -> Expr:
    tag = r.u8()
    if tag == 0x20:
        kind = r.u8()
        if kind == 0:
            return Const(r.u64())
        if kind == 1:
            return Const(r.blob())
        raise DecodeError(f"bad constant kind {kind}")
    if tag == 0x21:
        code = r.u8()
        if code >= len(BIN_OPS):
            raise DecodeError(f"bad operator code {code}")
        left = read_expr(r)
        return BinOp(BIN_OPS[code], left, read_expr(r))
    if tag == 0x22:
        return Not(read_expr(r))
    if tag == 0x23:
        return TxLen()
    if tag == 0x24:
        return TxPos()
    if tag == 0x25:
        return TxId(read_expr(r))
    if tag == 0x26:
        idx = read_expr(r)
        code = r.u8()
        if code >= len(FIELDS):
            raise DecodeError(f"bad field code {code}")
        return TxField(idx, FIELDS[code])
    if tag == 0x27:
        return Arg(r.u64())
    if tag == 0x28:
        return Hash(read_expr(r))
    if tag == 0x29:
        m = read_expr(r)
        s = read_expr(r)
        return Versig(m, s, read_expr(r))
    raise DecodeError(f"bad expression tag {tag:#x}")


def decode_expr(data: bytes) -> Expr:
    r = Reader(data)
    e = read_expr(r)
    r.expect_done()
    return e


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, (Not, Hash)):
        return (e.operand,)
    if isinstance(e, (TxId, TxField)):
        return (e.index,)
    if isinstance(e, Versig):
        return (e.msg, e.sig, e.key)
    return ()


def depth(e: Expr) -> int:
    return 1 + max((depth(c) for c in children(e)), default=0)


def size(e: Expr) -> int:
    return 1 + sum(size(c) for c in children(e))


# -- sugar ----------------------------------------------------------------

def const(v: Value | TxType) -> Const:
    if isinstance(v, TxType):
        return Const(v.tag_bytes)
    return Const(v)


TRUE = BinOp("=", Const(1), Const(1))
FALSE = BinOp("=", Const(1), Const(0))


def tx(field: str, index: int | Expr | None = None) -> TxField:
    """``tx.f`` when index is None, else ``tx(index).f``."""
    if index is None:
        idx: Expr = TxPos()
    elif isinstance(index, int):
        idx = Const(index)
    else:
        idx = index
    return TxField(idx, field)


def txid(index: int | Expr | None = None) -> TxId:
    if index is None:
        return TxId(TxPos())
    return TxId(Const(index) if isinstance(index, int) else index)


def arg(n: int) -> Arg:
    return Arg(n)


def _lift(v: Expr | Value | TxType) -> Expr:
    if isinstance(v, (int, bytes, TxType)) and not isinstance(v, bool):
        return const(v)
    return v  # type: ignore[return-value]


def op(o: str, a, b) -> BinOp:
    return BinOp(o, _lift(a), _lift(b))


def eq(a, b) -> BinOp:
    return op("=", a, b)


def conj(*es: Expr) -> Expr:
    """Left-associated conjunction; the empty conjunction is ``true``."""
    if not es:
        return TRUE
    out = es[0]
    for x in es[1:]:
        out = BinOp("and", out, x)
    return out


def disj(*es: Expr) -> Expr:
    """Left-associated disjunction; the empty disjunction is ``false``."""
    if not es:
        return FALSE
    out = es[0]
    for x in es[1:]:
        out = BinOp("or", out, x)
    return out


def not_(e: Expr) -> Not:
    return Not(e)


def ite(cond: Expr, then: Expr, other: Expr) -> Expr:
    return BinOp("or", BinOp("and", cond, then), BinOp("and", Not(cond), other))


def H(e) -> Hash:
    return Hash(_lift(e))


def versig(m, s, k) -> Versig:
    return Versig(_lift(m), _lift(s), _lift(k))
