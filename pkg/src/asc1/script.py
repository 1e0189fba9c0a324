"""Script evaluation.

Values are Python ``int`` (a u64), ``bytes``, or the ``BOTTOM`` sentinel for
failure. Every operator is strict in its operands except ``and``/``or``,
which short-circuit on their left operand.

Integers and byte strings mix the way TEAL's byte-math opcodes do: when an
arithmetic or ordering operator sees a byte string it reads both operands
as big-endian unsigned numbers (at most 64 bytes) and an arithmetic result
comes back as a minimal big-endian byte string. Equality between two byte
strings is byte-wise; between an integer and a byte string it is numeric.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from . import crypto
from .codec import value_bytes, versig_message
from .expr import (Arg, BinOp, Const, Expr, Hash, Not, TxField, TxId, TxLen,
                   TxPos, Versig)
from .ledger import Transaction
from .wire import U64_MAX

MAX_BYTEMATH_LEN = 64


class _Bottom:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "BOTTOM"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()
ScriptValue = Union[int, bytes, _Bottom]


@dataclass(frozen=True)
class EvalContext:
    group: tuple[Transaction, ...]
    index: int
    args: tuple[bytes, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "group", tuple(self.group))
        object.__setattr__(self, "args", tuple(bytes(a) for a in self.args))
        if not 0 <= self.index < len(self.group):
            raise ValueError("index must point into the group")


def field_value(t: Transaction, f: str) -> ScriptValue:
    if f == "type":
        return t.type.tag_bytes
    if f == "snd":
        return t.snd.encoding
    if f == "rcv":
        return t.rcv.encoding  # type: ignore[union-attr]
    return getattr(t, f)


def to_num(v: int | bytes):
    if isinstance(v, int):
        return v
    if len(v) > MAX_BYTEMATH_LEN:
        return BOTTOM
    return int.from_bytes(v, "big")


def from_num(n: int) -> bytes:
    return n.to_bytes((n.bit_length() + 7) // 8, "big")


def _arith(op: str, a: int, b: int):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        return BOTTOM
    return a // b if op == "/" else a % b


def _cmp(op: str, a, b) -> int:
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == "=":
        return int(a == b)
    if op == ">=":
        return int(a >= b)
    return int(a > b)


def _binop(op: str, v0, v1) -> ScriptValue:
    both_int = isinstance(v0, int) and isinstance(v1, int)
    if op in ("+", "-", "*", "/", "%"):
        if both_int:
            r = _arith(op, v0, v1)
            if r is BOTTOM or not 0 <= r <= U64_MAX:
                return BOTTOM
            return r
        a, b = to_num(v0), to_num(v1)
        if a is BOTTOM or b is BOTTOM:
            return BOTTOM
        r = _arith(op, a, b)
        if r is BOTTOM or r < 0:
            return BOTTOM
        return from_num(r)
    if op == "=" and not both_int and isinstance(v0, bytes) and isinstance(v1, bytes):
        return int(v0 == v1)
    a, b = to_num(v0), to_num(v1)
    if a is BOTTOM or b is BOTTOM:
        return BOTTOM
    return _cmp(op, a, b)


def evaluate(ctx: EvalContext, e: Expr) -> ScriptValue:
    t = type(e)
    if t is Const:
        return e.value
    if t is BinOp:
        op = e.op
        v0 = evaluate(ctx, e.left)
        if op == "and" or op == "or":
            if not isinstance(v0, int):
                return BOTTOM
            if op == "and":
                return 0 if v0 == 0 else evaluate(ctx, e.right)
            return 1 if v0 != 0 else evaluate(ctx, e.right)
        if v0 is BOTTOM:
            return BOTTOM
        v1 = evaluate(ctx, e.right)
        if v1 is BOTTOM:
            return BOTTOM
        return _binop(op, v0, v1)
    if t is Not:
        v = evaluate(ctx, e.operand)
        if not isinstance(v, int):
            return BOTTOM
        return 1 if v == 0 else 0
    if t is TxLen:
        return len(ctx.group)
    if t is TxPos:
        return ctx.index
    if t is TxId or t is TxField:
        i = evaluate(ctx, e.index)
        if not isinstance(i, int) or i >= len(ctx.group):
            return BOTTOM
        if t is TxId:
            return ctx.group[i].txid
        return field_value(ctx.group[i], e.field)
    if t is Arg:
        return ctx.args[e.n] if e.n < len(ctx.args) else BOTTOM
    if t is Hash:
        v = evaluate(ctx, e.operand)
        if v is BOTTOM:
            return BOTTOM
        return crypto.hash_bytes(value_bytes(v))
    if t is Versig:
        m = evaluate(ctx, e.msg)
        if m is BOTTOM:
            return BOTTOM
        s = evaluate(ctx, e.sig)
        if s is BOTTOM:
            return BOTTOM
        k = evaluate(ctx, e.key)
        if not isinstance(s, bytes) or not isinstance(k, bytes):
            return BOTTOM
        if len(s) != crypto.SIG_LEN or len(k) != crypto.KEY_LEN:
            return 0
        msg = versig_message(ctx.group[ctx.index].snd, m)
        return int(crypto.verify(k, msg, s))
    raise TypeError(f"not a script expression: {e!r}")


def accepts(ctx: EvalContext, e: Expr) -> bool:
    v = evaluate(ctx, e)
    return isinstance(v, int) and not isinstance(v, _Bottom) and v != 0


def eval_in(group: Sequence[Transaction], index: int, args: Sequence[bytes], e: Expr) -> ScriptValue:
    return evaluate(EvalContext(tuple(group), index, tuple(args)), e)
