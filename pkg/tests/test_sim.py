"""The run harness: strategies, adversaries, deadlines and run properties."""
from __future__ import annotations

import dataclasses
import hashlib

import pytest

from asc1.ledger import ALGO, Transaction
from asc1.semantics import TICK, AuthGroup, NetState, Witness
from asc1.sim import (DeadlineViolation, RandomAdversary, Run, RunView, StuckRun,
                      UnknownProperty, check_close_monotone, check_no_double_spend,
                      check_property, check_replay, check_value_preservation,
                      signed, simulate)
from asc1.strategies import (HtlcReveal, HtlcTimeout, OracleClaimant,
                             OracleSigner, Scripted)
from asc1.templates import ALGO_UNIT, htlc, oracle
from asc1.txtype import TxType

from conftest import World

SECRET = b"open sesame"


def htlc_world(tmax=5):
    w = World("A", "B")
    b = htlc(w.addr("A"), w.addr("B"), hashlib.sha256(SECRET).digest(), tmax)
    assert w.pay("A", b.address(), 3 * ALGO_UNIT) is None
    return w, b


def test_htlc_reveal_collects():
    w, b = htlc_world()
    run = simulate(w.state, [HtlcReveal(b, SECRET, at=2), HtlcTimeout(b)], max_rounds=8)
    assert b.address() not in run.final.chain.accounts
    assert run.final.chain.accounts[w.addr("A")][ALGO] == 10 * ALGO_UNIT
    (_, _, t, ws, rnd), = RunView(run).occurrences(b.claim_sets["A"])
    assert ws == (SECRET,) and rnd == 2
    assert not RunView(run).occurs(b.claim_sets["B"])


def test_htlc_timeout_when_silent():
    w, b = htlc_world()
    run = simulate(w.state, [HtlcTimeout(b)], max_rounds=8)
    (_, _, t, _, rnd), = RunView(run).occurrences(b.claim_sets["B"])
    assert rnd == 5
    assert run.final.chain.accounts[w.addr("B")][ALGO] == 13 * ALGO_UNIT


def test_identical_inputs_give_identical_runs():
    w, b = htlc_world()
    mk = lambda: [HtlcReveal(b, SECRET), HtlcTimeout(b)]  # noqa: E731
    r1 = simulate(w.state, mk(), RandomAdversary(), max_rounds=8, seed=42)
    r2 = simulate(w.state, mk(), RandomAdversary(), max_rounds=8, seed=42)
    assert r1.labels == r2.labels
    assert [s.chain.digest for s in r1.states] == [s.chain.digest for s in r2.states]


def test_rejections_are_recorded_not_performed():
    w = World("A", "B")
    t = Transaction(TxType.PAY, w.addr("A"), w.addr("B"), 7, ALGO, 0, 5)
    sub = signed([t], [[w["A"]]])
    run = simulate(w.state, [Scripted("s", "A", [(0, sub), (0, sub)])], max_rounds=2)
    assert [r.code for r in run.rejected] == ["DoubleSpend"]
    assert sum(isinstance(lab, AuthGroup) for lab in run.labels) == 1
    assert check_no_double_spend(run)


def test_deadline_violation_and_cap():
    w = World("A", "B")
    t = Transaction(TxType.PAY, w.addr("A"), w.addr("B"), 7, ALGO, 0, 5)

    class Never:
        def choose(self, view, heads, tick_allowed, rng):
            return None

    with pytest.raises(DeadlineViolation):
        simulate(w.state, [Scripted("s", "A", [(0, signed([t], [[w["A"]]]))])], Never(), max_rounds=2)
    many = [(0, Witness(bytes([i]))) for i in range(5)]
    with pytest.raises(StuckRun):
        simulate(w.state, [Scripted("s", "A", many)], max_rounds=2, max_actions_per_round=2)
    # with a delay bound the adversary may postpone delivery
    run = simulate(w.state, [Scripted("s", "A", [(0, signed([t], [[w["A"]]]))])], Never(),
                   max_rounds=2, delta=5)
    assert all(lab == TICK for lab in run.labels)
    with pytest.raises(ValueError):
        simulate(w.state, [], max_rounds=0)


def test_value_preservation_over_gen_and_burn():
    w = World("A")
    a = w.addr("A")
    gen = Transaction(TxType.GEN, a, a, 500, ALGO, 0, 5)
    burn = Transaction(TxType.BURN, a, None, 0, 1, 1, 5)
    run = simulate(w.state, [Scripted("s", "A", [(0, signed([gen], [[w["A"]]])),
                                                  (1, signed([burn], [[w["A"]]]))])], max_rounds=3)
    totals = [s.chain.accounts[a].get(1) for s in run.states]
    assert 500 in totals and totals[-1] is None
    assert check_value_preservation(run)
    # tampering with a state is caught by both checks
    bad = run.states[-1].chain
    acc = dict(bad.accounts)
    acc[a] = acc[a].set(ALGO, acc[a][ALGO] + 1)
    forged = Run(run.labels, run.states[:-1] + [NetState(bad.replace(accounts=type(bad.accounts)(acc)),
                                                         run.states[-1].knowledge)])
    assert not check_value_preservation(forged)
    assert not check_replay(forged)
    assert check_replay(run)


def test_close_monotone_detects_withdrawal():
    w, b = htlc_world()
    run = simulate(w.state, [HtlcReveal(b, SECRET)], max_rounds=3)
    assert check_close_monotone(run)
    # an account that shrinks without closing violates the property
    me = b.address()
    states = list(run.states)
    for k, s in enumerate(states):
        if me in s.chain.accounts:
            acc = dict(s.chain.accounts)
            acc[me] = acc[me].set(ALGO, acc[me][ALGO] - k)
            states[k] = NetState(s.chain.replace(accounts=type(s.chain.accounts)(acc)), s.knowledge)
    assert not check_close_monotone(dataclasses.replace(run, states=states, watch=(me,)))


def test_unknown_property():
    w = World("A")
    run = simulate(w.state, [], max_rounds=1)
    assert check_property(run, "replay-determinism")
    with pytest.raises(UnknownProperty):
        check_property(run, "nope")


def test_oracle_signer_signs_once_and_claimant_uses_it():
    w = World("A", "B", "o")
    b = oracle(w.addr("A"), w.addr("B"), w["o"].pk, 6)
    assert w.pay("A", b.address(), 2 * ALGO_UNIT) is None
    run = simulate(w.state, [OracleSigner(b, w["o"], "sign1", at=2),
                             OracleClaimant(b, "A"), OracleClaimant(b, "B")], max_rounds=10)
    sigs = [lab for lab in run.labels if isinstance(lab, Witness) and len(lab.w) == 64]
    assert len(sigs) == 1
    assert b.address() not in run.final.chain.accounts
    assert run.final.chain.accounts[w.addr("B")][ALGO] == 12 * ALGO_UNIT
