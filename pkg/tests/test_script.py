"""Script evaluation, its algebraic properties, and the textual syntax."""
from __future__ import annotations

import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asc1.codec import versig_message
from asc1.expr import (BIN_OPS, FALSE, TRUE, BinOp, Const, Not, TxId, TxLen,
                       TxPos, arg, conj, depth, disj, eq, H, ite, op, tx,
                       txid, versig)
from asc1.ledger import ALGO, Transaction
from asc1.script import BOTTOM, EvalContext, accepts, eval_in, evaluate
from asc1.sim import User
from asc1.syntax import ParseError, parse, pretty
from asc1.txtype import TxType

from strats import exprs

A, B = User.from_seed("A", "script:A"), User.from_seed("B", "script:B")
T0 = Transaction(TxType.PAY, A.address, B.address, 10, ALGO, 1, 6, 3)
T1 = Transaction(TxType.CLOSE, B.address, A.address, 0, ALGO, 2, 4)
CTX = EvalContext((T0, T1), 1, (b"ab", b"\x00\x07"))
ERR = op("/", 1, 0)

contexts = st.builds(
    lambda n, i, args: EvalContext((T0, T1, T0.replace(val=11))[:n], min(i, n - 1), tuple(args)),
    st.integers(1, 3), st.integers(0, 2), st.lists(st.binary(max_size=9), max_size=3))


def ev(e, ctx=CTX):
    return evaluate(ctx, e)


# -- worked examples --------------------------------------------------------

def test_basic_examples():
    assert ev(op("+", 1, 1)) == 2
    assert ev(op("/", 7, 2)) == 3
    assert ev(op("/", 1, 0)) is BOTTOM
    assert ev(op("and", 0, ERR)) == 0
    assert ev(TxLen()) == 2 and ev(TxPos()) == 1
    assert ev(arg(5)) is BOTTOM


def test_fields_and_ids():
    assert ev(tx("snd")) == B.address.encoding
    assert ev(tx("type", 0)) == TxType.PAY.tag_bytes
    assert ev(tx("val", 0)) == 10 and ev(tx("lx", 0)) == 3 and ev(tx("fv")) == 2
    assert ev(tx("rcv")) == A.address.encoding
    assert ev(tx("val", 2)) is BOTTOM
    assert ev(txid(0)) == T0.txid == hashlib.sha256(T0.encoding).digest()
    assert ev(TxId(ERR)) is BOTTOM


def test_acceptance_threshold():
    assert accepts(CTX, TRUE) and not accepts(CTX, FALSE)
    assert accepts(CTX, Const(7))                  # any nonzero integer
    assert not accepts(CTX, Const(b"\x01"))        # bytes never accept
    assert not accepts(CTX, ERR)


def test_hash_operand_bytes():
    assert ev(H(arg(0))) == hashlib.sha256(b"ab").digest()
    assert ev(H(Const(1))) == hashlib.sha256((1).to_bytes(8, "big")).digest()
    assert ev(H(ERR)) is BOTTOM


def test_versig_binds_current_sender():
    m = b"outcome"
    good = A.sign(versig_message(B.address, m))     # current tx (index 1) is sent by B
    other = A.sign(versig_message(A.address, m))
    ctx = EvalContext((T0, T1), 1, (m, good, other))
    assert evaluate(ctx, versig(arg(0), arg(1), Const(A.pk))) == 1
    assert evaluate(ctx, versig(arg(0), arg(2), Const(A.pk))) == 0
    assert evaluate(ctx, versig(arg(0), arg(1), Const(B.pk))) == 0
    assert evaluate(ctx, versig(arg(0), Const(5), Const(A.pk))) is BOTTOM   # sig not bytes
    assert evaluate(ctx, versig(arg(0), arg(1), Const(b"short"))) == 0      # malformed key
    assert evaluate(ctx, versig(arg(0), arg(0), Const(A.pk))) == 0          # malformed sig
    assert evaluate(ctx, versig(ERR, arg(1), Const(A.pk))) is BOTTOM


def test_versig_over_integer_message():
    sig = A.sign(versig_message(B.address, 1))
    ctx = EvalContext((T1,), 0, (sig,))
    assert evaluate(ctx, versig(Const(1), arg(0), Const(A.pk))) == 1
    assert evaluate(ctx, versig(Const(b"\x01"), arg(0), Const(A.pk))) == 0


def test_byte_math():
    assert ev(op("+", arg(1), 1)) == b"\x08"
    assert ev(op("*", Const(b"\xff"), Const(b"\xff"))) == b"\xfe\x01"
    assert ev(op("-", Const(b"\x01\x00"), Const(b"\x01\x00"))) == b""
    assert ev(op("%", op("+", Const(b"\x01"), Const(b"\x02")), 2)) == b"\x01"
    assert ev(op("<", Const(b"\x01"), 2)) == 1
    # results are not capped at 64 bits, inputs are capped at 64 bytes
    big = Const(b"\xff" * 64)
    assert ev(op("+", big, 1)) == b"\x01" + b"\x00" * 64
    assert ev(op("+", op("+", big, 1), 0)) is BOTTOM
    assert ev(op("=", Const(b"\x00\x01"), Const(b"\x01"))) == 0
    assert ev(op("=", Const(b"\x00\x01"), 1)) == 1


# -- properties -------------------------------------------------------------

@settings(max_examples=300)
@given(exprs(), contexts)
def test_evaluation_is_total_and_deterministic(e, ctx):
    v = evaluate(ctx, e)
    assert v is BOTTOM or isinstance(v, (int, bytes))
    if isinstance(v, int):
        assert 0 <= v < 2**64
    assert evaluate(ctx, e) == v


def test_deep_expression_terminates():
    e = Const(1)
    for k in range(64):
        e = op("and", e, op("<=", Const(k), Const(k + 1)))
    assert depth(e) == 66 and ev(e) == 1


STRICT_OPS = [o for o in BIN_OPS if o not in ("and", "or")]


@settings(max_examples=200)
@given(exprs(max_leaves=6), st.sampled_from(STRICT_OPS), st.booleans(), contexts)
def test_strict_operators_propagate_failure(e, o, left, ctx):
    b = BinOp(o, ERR, e) if left else BinOp(o, e, ERR)
    assert evaluate(ctx, b) is BOTTOM
    assert evaluate(ctx, Not(ERR)) is BOTTOM
    assert evaluate(ctx, H(ERR)) is BOTTOM


@settings(max_examples=200)
@given(exprs(), contexts)
def test_short_circuit_identities(e, ctx):
    assert evaluate(ctx, op("and", 0, e)) == 0
    assert evaluate(ctx, op("or", 1, e)) == 1
    assert evaluate(ctx, op("and", 0, BinOp("/", e, Const(0)))) == 0


@pytest.mark.parametrize("g", [0, 1])
@pytest.mark.parametrize("a", [0, 1])
@pytest.mark.parametrize("b", [0, 1])
def test_if_then_else_desugaring(g, a, b):
    assert ev(ite(Const(g), eq(a, 1), eq(b, 1))) == (a if g else b)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=6))
def test_sugar_conj_disj(vs):
    es = [Const(v) for v in vs]
    assert accepts(CTX, conj(*es)) == all(vs)
    assert accepts(CTX, disj(*es)) == any(vs)


def test_eval_in_checks_index():
    assert eval_in([T0], 0, [], TxPos()) == 0
    with pytest.raises(ValueError):
        EvalContext((T0,), 1)


# -- syntax -----------------------------------------------------------------

def test_parse_examples():
    env = {"A": A.address.encoding, "h": b"\x00" * 32}
    e = parse("tx.type = close and tx.asst = Algo and (tx.rcv = A and H(arg(0)) = h or tx.fv >= 50)", env)
    assert e == conj(eq(tx("type"), TxType.CLOSE), eq(tx("asst"), ALGO), disj(
        conj(eq(tx("rcv"), Const(A.address.encoding)), eq(H(arg(0)), Const(b"\x00" * 32))),
        op(">=", tx("fv"), 50)))
    assert parse("1 + 2 * 3") == op("+", 1, op("*", 2, 3))
    assert parse("10 - 3 - 2") == op("-", op("-", 10, 3), 2)
    assert parse("not 1 = 2") == Not(eq(1, 2))
    assert parse("tx(1).val") == tx("val", 1)
    assert parse("txid(txpos)") == TxId(TxPos())
    assert parse("if 1 then 2 else 3  # comment") == ite(Const(1), Const(2), Const(3))
    assert parse("0x00ff") == Const(b"\x00\xff")


@pytest.mark.parametrize("src,col", [("1 +", 4), ("tx.nope", 4), ("arg(x)", 5), ("0x0", 1),
                                     ("foo", 1), ("(1", 3), ("18446744073709551616", 1)])
def test_parse_errors_carry_position(src, col):
    with pytest.raises(ParseError) as ei:
        parse(src)
    assert ei.value.line == 1 and ei.value.col == col


@settings(max_examples=300)
@given(exprs())
def test_pretty_round_trips(e):
    assert parse(pretty(e)) == e


def test_pretty_uses_names():
    env = {"A": A.address.encoding}
    e = parse("tx.rcv = A", env)
    assert pretty(e, env) == "tx.rcv = A"
    assert parse(pretty(e, env), env) == e
