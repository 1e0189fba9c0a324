"""Canonical encodings, hashing and signatures."""
from __future__ import annotations

import hashlib
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asc1 import crypto
from asc1.codec import (decode_address, decode_group_message, decode_state,
                        decode_tx, decode_versig_message, encode, encode_state,
                        group_message, script_address, versig_message)
from asc1.expr import decode_expr, encode_expr
from asc1.ledger import ALGO, Multisig, Script, Transaction, single
from asc1.sim import User
from asc1.templates import BUILDERS
from asc1.txtype import TxType
from asc1.wire import DecodeError, Reader, Writer

from strats import addresses, exprs, transactions

X = single(b"\x11" * 32)
Y = Multisig((b"\x22" * 32, b"\x33" * 32), 2)
PAY = Transaction(TxType.PAY, X, Y, 300000, ALGO, 0, 5)

# reference layout written with struct, independently of asc1.wire
PAY_HEX = (
    "10" "01" "00000001" "00000020" + "11" * 32 + "0000000000000001"
    "01" "00000002" "00000020" + "22" * 32 + "00000020" + "33" * 32 + "0000000000000002"
    "00000000000493e0" "0000000000000000" "0000000000000000" "0000000000000005" "0000000000000000"
)


def _ref_multisig(keys, n):
    return b"\x01" + struct.pack(">I", len(keys)) + b"".join(
        struct.pack(">I", len(k)) + k for k in keys) + struct.pack(">Q", n)


def test_transaction_layout_matches_reference():
    assert PAY.encoding.hex() == PAY_HEX
    ref = bytes([0x10]) + _ref_multisig([b"\x11" * 32], 1) + _ref_multisig([b"\x22" * 32, b"\x33" * 32], 2) \
        + struct.pack(">5Q", 300000, 0, 0, 5, 0)
    assert PAY.encoding == ref


def test_frozen_digests():
    assert PAY.txid.hex() == "a6662dc69de5317b303243b42f40c42e4755aafef9b6986ce06904f0c4bab648"
    assert hashlib.sha256(group_message((PAY,), 0)).hexdigest() == \
        "9c1b87de53887eda4bc2eac2a9974e7e2f24bae6cd26cb6e0159d04ed27315af"
    assert versig_message(X, 1).hex() == (
        "56" "00000031" "01" "00000001" "00000020" + "11" * 32 + "0000000000000001"
        "00000008" "0000000000000001")


def test_hash_empty_vector():
    assert crypto.hash_bytes(b"").hex() == \
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def test_hash_corpus_has_no_collisions():
    corpus = [b"", b"\x00", b"\x00\x00"] + [bytes([i]) * k for i in range(8) for k in range(1, 9)]
    assert len({crypto.hash_bytes(b) for b in corpus}) == len(set(corpus))
    assert crypto.hash_bytes(b"abc") == crypto.hash_bytes(b"abc")


def test_encoding_is_deterministic_and_lease_sensitive():
    assert PAY.encoding == Transaction(TxType.PAY, X, Y, 300000, ALGO, 0, 5).encoding
    assert PAY.encoding != PAY.replace(lx=1).encoding


def test_normalization_of_unused_fields():
    a = Transaction(TxType.OPTIN, X, Y, 9, 3, 0, 5)
    assert a.rcv == X and a.val == 0
    assert Transaction(TxType.GEN, X, Y, 10, 4).asst == ALGO
    assert Transaction(TxType.CLOSE, X, Y, 10).val == 0


def test_non_canonical_transaction_rejected():
    enc = bytearray(Transaction(TxType.CLOSE, X, Y, 0, ALGO, 0, 5).encoding)
    # the val slot sits after the two addresses
    at = 1 + len(X.encoding) + len(Y.encoding)
    enc[at + 7] = 1
    with pytest.raises(DecodeError):
        decode_tx(bytes(enc))


@settings(max_examples=200)
@given(transactions())
def test_transaction_round_trip(t):
    assert decode_tx(t.encoding) == t


@settings(max_examples=200)
@given(transactions(), st.sampled_from(["val", "asst", "fv", "lv", "lx"]), st.integers(1, 2**32))
def test_field_perturbation_changes_encoding(t, name, delta):
    v = (getattr(t, name) + delta) % 2**64
    u = t.replace(**{name: v})
    if getattr(u, name) != getattr(t, name):
        assert u.encoding != t.encoding


@settings(max_examples=100)
@given(st.lists(transactions(), min_size=2, max_size=4), st.data())
def test_group_message_distinguishes_positions(group, data):
    i = data.draw(st.integers(0, len(group) - 1))
    j = data.draw(st.integers(0, len(group) - 1).filter(lambda k: k != i))
    assert group_message(group, i) != group_message(group, j)
    back, idx = decode_group_message(group_message(group, i))
    assert back == tuple(group) and idx == i


@given(addresses)
def test_address_round_trip(a):
    assert decode_address(a.encoding) == a


@settings(max_examples=200)
@given(exprs())
def test_script_round_trip(e):
    assert decode_expr(encode_expr(e)) == e
    assert script_address(e) == script_address(decode_expr(encode_expr(e)))


def test_template_scripts_have_distinct_addresses():
    from asc1.corpus import template_cases
    scripts = {encode_expr(e): e for c in template_cases() for e in c.bundle.scripts.values()}
    assert len(scripts) >= len(BUILDERS)
    assert len({script_address(e) for e in scripts.values()}) == len(scripts)


def test_script_address_is_registry_resolved():
    from asc1.expr import TRUE
    a = Script.of(TRUE)
    b = decode_address(a.encoding, {a.digest: TRUE})
    assert b == a and b.expr == TRUE
    assert decode_address(a.encoding).expr is None


def test_versig_message_round_trip():
    m = versig_message(Y, b"hello")
    assert decode_versig_message(m) == (Y, b"hello")
    assert versig_message(Y, 1) != versig_message(Y, b"\x01")


def test_state_round_trip():
    from asc1.semantics import apply_tx
    u = User.from_seed("s")
    from asc1.sim import genesis_state
    s = genesis_state(u).chain
    s = apply_tx(s, Transaction(TxType.PAY, u.address, X, 10**6, ALGO, 0, 5, 3))
    s = apply_tx(s, Transaction(TxType.GEN, u.address, u.address, 50, ALGO, 0, 5))
    back = decode_state(encode_state(s))
    assert encode_state(back) == encode_state(s) and back.digest == s.digest
    assert encode(s) == encode_state(s)


def test_encode_rejects_foreign_objects():
    with pytest.raises(TypeError):
        encode(3.5)


def test_reader_truncation_and_trailing_bytes():
    data = Writer().u64(5).blob(b"ab").getvalue()
    r = Reader(data[:-1])
    r.u64()
    with pytest.raises(DecodeError):
        r.blob()
    with pytest.raises(DecodeError):
        decode_address(X.encoding + b"\x00")
    with pytest.raises(ValueError):
        Writer().u64(2**64)


# -- signatures -----------------------------------------------------------

def test_sign_verify_round_trip_and_tampering():
    a, b = User.from_seed("alice"), User.from_seed("bob")
    msg = group_message((PAY,), 0)
    sig = a.sign(msg)
    assert crypto.verify(a.pk, msg, sig)
    flipped = bytes([msg[0] ^ 1]) + msg[1:]
    assert not crypto.verify(a.pk, flipped, sig)
    assert not crypto.verify(b.pk, msg, sig)


def test_malformed_inputs_raise():
    with pytest.raises(crypto.MalformedKey):
        crypto.verify(b"\x00" * 31, b"m", b"\x00" * 64)
    with pytest.raises(crypto.MalformedSignature):
        crypto.verify(b"\x00" * 32, b"m", b"\x00" * 63)


def test_keypairs_are_seeded():
    assert crypto.keypair("x") == crypto.keypair("x")
    assert crypto.keypair("x").public_key != crypto.keypair("y").public_key


def test_ed25519_rfc8032_vector():
    # RFC 8032 Ed25519 test 1 (empty message)
    from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
    sk = bytes.fromhex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60")
    pk = bytes.fromhex("d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a")
    sig = bytes.fromhex("e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
                        "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b")
    assert Ed25519PrivateKey.from_private_bytes(sk).sign(b"") == sig
    assert crypto.Ed25519Provider().verify(pk, b"", sig)
    assert not crypto.Ed25519Provider().verify(pk, b"x", sig)


def test_alternative_provider_is_pluggable():
    with crypto.using(crypto.HmacProvider()):
        kp = crypto.keypair("p")
        sig = crypto.sign(kp.private_key, b"m")
        assert crypto.verify(kp.public_key, b"m", sig)
        assert not crypto.verify(kp.public_key, b"n", sig)
    assert isinstance(crypto.provider(), crypto.Ed25519Provider)
