"""Hypothesis strategies shared by the property tests."""
from __future__ import annotations

from hypothesis import strategies as st

from asc1.expr import (BIN_OPS, FIELDS, Arg, BinOp, Const, Hash, Not, TxField,
                       TxId, TxLen, TxPos, Versig)
from asc1.ledger import Multisig, Script, Transaction
from asc1.txtype import TxType

u64 = st.integers(0, 2**64 - 1)
small = st.integers(0, 20)
keys = st.binary(min_size=32, max_size=32)


@st.composite
def multisigs(draw):
    ks = draw(st.lists(keys, min_size=1, max_size=3))
    return Multisig(tuple(ks), draw(st.integers(1, len(ks))))


addresses = st.one_of(multisigs(), st.builds(Script, st.binary(min_size=32, max_size=32)))


@st.composite
def transactions(draw, values=u64):
    return Transaction(draw(st.sampled_from(list(TxType))), draw(addresses), draw(addresses),
                       draw(values), draw(values), draw(values), draw(values), draw(values))


consts = st.one_of(u64.map(Const), st.binary(max_size=8).map(Const))


def exprs(max_leaves: int = 12):
    leaves = st.one_of(consts, st.just(TxLen()), st.just(TxPos()),
                       st.integers(0, 3).map(Arg))

    def extend(sub):
        return st.one_of(
            st.builds(BinOp, st.sampled_from(BIN_OPS), sub, sub),
            st.builds(Not, sub),
            st.builds(Hash, sub),
            st.builds(TxId, sub),
            st.builds(TxField, sub, st.sampled_from(FIELDS)),
            st.builds(Versig, sub, sub, sub),
        )
    return st.recursive(leaves, extend, max_leaves=max_leaves)
