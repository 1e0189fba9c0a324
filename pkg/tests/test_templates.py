"""Contract templates as scripts: shape, parameters and the state-machine encoder."""
from __future__ import annotations

import hashlib

import pytest
from hypothesis import given
from hypothesis import strategies as st

from asc1.corpus import template_cases
from asc1.expr import FALSE, Const, arg, conj, eq, op, tx, versig
from asc1.ledger import ALGO, Script, Transaction
from asc1.script import EvalContext, accepts
from asc1.sim import User
from asc1.syntax import pretty
from asc1.templates import (ALGO_UNIT, BUILDERS, ORACLE_ONE, ORACLE_ZERO,
                            CyclicWithoutSigners, InvalidParams, State,
                            Transition, build_template, fsm_encode, htlc,
                            limit_order, lottery, lottery_winner, oracle,
                            periodic_payment, two_phase, two_phase_machine,
                            zero_collateral_lottery)
from asc1.codec import versig_message
from asc1.txtype import TxType

A, B, O = (User.from_seed(n, f"tmpl-test:{n}") for n in "ABO")
h = hashlib.sha256(b"s").digest()
h2 = hashlib.sha256(b"t").digest()


def close(snd, rcv, fv=0):
    return Transaction(TxType.CLOSE, snd, rcv, 0, ALGO, fv, fv + 10)


def test_htlc_script_text():
    b = htlc(A.address, B.address, h, 30)
    assert pretty(b.scripts["htlc"], b.names) == (
        "tx.type = close and tx.asst = 0 and "
        "(tx.rcv = A and H(arg(0)) = h or tx.rcv = B and tx.fv >= 30)")
    me = b.address()
    assert accepts(EvalContext((close(me, A.address),), 0, (b"s",)), b.scripts["htlc"])
    assert not accepts(EvalContext((close(me, A.address),), 0, (b"x",)), b.scripts["htlc"])
    assert not accepts(EvalContext((close(me, B.address, 29),), 0, ()), b.scripts["htlc"])
    assert accepts(EvalContext((close(me, B.address, 30),), 0, ()), b.scripts["htlc"])
    assert b.claims(close(me, A.address)) == ["A"] and b.claims(close(me, B.address)) == ["B"]


def test_oracle_outcomes():
    b = oracle(A.address, B.address, O.pk, 10)
    e, me = b.scripts["oracle"], b.address()
    for outcome, winner, loser in ((ORACLE_ZERO, A, B), (ORACLE_ONE, B, A)):
        t = close(me, winner.address)
        sig = O.sign(versig_message(me, outcome))
        assert accepts(EvalContext((t,), 0, (outcome, sig)), e)
        assert not accepts(EvalContext((close(me, loser.address),), 0, (outcome, sig)), e)
    # a signature over the wrong outcome, and a signer who is not the oracle
    assert not accepts(EvalContext((close(me, B.address),), 0, (ORACLE_ONE, O.sign(versig_message(me, ORACLE_ZERO)))), e)
    assert not accepts(EvalContext((close(me, B.address),), 0, (ORACLE_ONE, A.sign(versig_message(me, ORACLE_ONE)))), e)
    assert accepts(EvalContext((close(me, A.address, 11),), 0, ()), e)
    assert not accepts(EvalContext((close(me, A.address, 10),), 0, ()), e)


def test_lottery_parameters():
    with pytest.raises(InvalidParams):
        lottery(A.address, B.address, h, h, 5)
    with pytest.raises(InvalidParams):
        lottery(A.address, B.address, h, b"short", 5)
    b = lottery(A.address, B.address, h, h2, 5)
    assert [t.val for t in b.setup_group] == [2 * ALGO_UNIT, 2 * ALGO_UNIT, ALGO_UNIT, ALGO_UNIT]
    assert set(b.claim_sets) == {"secr:A", "tout:A", "secr:B", "tout:B", "lott:A", "lott:B"}


@given(st.binary(min_size=1, max_size=32), st.binary(min_size=1, max_size=32))
def test_lottery_winner_matches_script(sA, sB):
    hA, hB = hashlib.sha256(sA).digest(), hashlib.sha256(sB).digest()
    if hA == hB:
        return
    b = lottery(A.address, B.address, hA, hB, 5)
    L = b.address("lottery")
    w = lottery_winner(sA, sB)
    assert w == ("A" if (int.from_bytes(sA, "big") + int.from_bytes(sB, "big")) % 2 == 0 else "B")
    winner, loser = (A, B) if w == "A" else (B, A)
    assert accepts(EvalContext((close(L, winner.address),), 0, (sA, sB)), b.scripts["lottery"])
    assert not accepts(EvalContext((close(L, loser.address),), 0, (sA, sB)), b.scripts["lottery"])


def test_periodic_payment_script():
    b = periodic_payment(A.address, 5, 10, 12, 7)
    me, e = b.address(), b.scripts["pp"]
    t = Transaction(TxType.PAY, me, A.address, 5, ALGO, 20, 32, 7)
    assert accepts(EvalContext((t,), 0), e)
    for bad in (t.replace(fv=21, lv=33), t.replace(lx=6), t.replace(val=6), t.replace(lv=31)):
        assert not accepts(EvalContext((bad,), 0), e)
    with pytest.raises(InvalidParams):
        periodic_payment(A.address, 5, 0, 12, 7)


def test_other_parameter_checks():
    with pytest.raises(InvalidParams):
        limit_order(A.address, ALGO, 1, 1, 5)
    with pytest.raises(InvalidParams):
        zero_collateral_lottery(A.address, B.address, h, h, 1, 1)
    with pytest.raises(InvalidParams):
        two_phase(A.pk, B.pk, A.pk, B.pk, O.address, 10, delta_max=20)
    with pytest.raises(InvalidParams):
        oracle(A.address, B.address, b"k", 3)
    with pytest.raises(InvalidParams):
        build_template("nope", {})
    with pytest.raises(InvalidParams):
        build_template("htlc", {"A": A.address})
    assert build_template("htlc", {"A": A.address, "B": B.address, "h": h, "tmax": 3}).kind == "htlc"


# -- state machines -------------------------------------------------------

def test_fsm_two_states():
    out = A.address
    states = [State("S", (Transition("T", (op(">", tx("fv"), 3),)),)),
              State("T", (Transition(out),))]
    scripts = fsm_encode(states)
    T = scripts["T"]
    assert T == conj(eq(tx("type"), TxType.CLOSE), eq(tx("asst"), ALGO), eq(tx("rcv"), Const(out.encoding)))
    assert scripts["S"] == conj(eq(tx("type"), TxType.CLOSE), eq(tx("asst"), ALGO),
                                op(">", tx("fv"), 3), eq(tx("rcv"), Const(Script.of(T).encoding)))


def test_fsm_dead_state_is_false():
    assert fsm_encode([State("S")]) == {"S": FALSE}


def test_fsm_errors():
    with pytest.raises(CyclicWithoutSigners):
        fsm_encode([State("S", (Transition("T"),)), State("T", (Transition("S"),))])
    with pytest.raises(InvalidParams):
        fsm_encode([State("S", (Transition("U"),))])
    with pytest.raises(InvalidParams):
        fsm_encode([State("S"), State("S")])


def test_fsm_cycle_uses_signed_address():
    scripts = fsm_encode([State("S", (Transition("T"),)), State("T", (Transition("S"),))],
                         signers=[A.pk])
    assert scripts["T"] == conj(eq(tx("type"), TxType.CLOSE), eq(tx("asst"), ALGO),
                                versig(arg(0), arg(1), A.pk), eq(tx("rcv"), arg(0)))


def test_fsm_encoding_reproduces_two_phase():
    c = O.address
    A1, B1 = User.from_seed("A1"), User.from_seed("B1")
    states, signers = two_phase_machine(A.pk, B.pk, A1.pk, B1.pk, c, 20, 16)
    enc = fsm_encode(states, signers)
    direct = two_phase(A.pk, B.pk, A1.pk, B1.pk, c, 20, 16)
    assert enc == dict(direct.scripts)


# -- every template, every sample context ---------------------------------

def test_sample_contexts_accept():
    cases = template_cases()
    assert {c.kind for c in cases} == set(BUILDERS)
    for case in cases:
        for name, ctx in case.valid:
            e = case.bundle.scripts[name]
            assert accepts(EvalContext(ctx.group, ctx.index, ctx.args), e), (case.kind, name)
