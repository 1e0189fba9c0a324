"""Hash function and signature providers.

The default provider is Ed25519, the same scheme TEAL's ed25519verify
checks. ``HmacProvider`` is a deterministic stand-in for fixtures: it is
fast and reproducible but only verifies keys it generated itself.
"""
from __future__ import annotations

import contextlib
import hashlib
import hmac
from dataclasses import dataclass
from typing import Iterator, Protocol

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

KEY_LEN = 32
SIG_LEN = 64
VERIFY_CACHE = 1 << 17   # verification is pure, so results are memoized


class MalformedKey(ValueError):
    pass


class MalformedSignature(ValueError):
    pass


def hash_bytes(b: bytes) -> bytes:
    return hashlib.sha256(b).digest()


@dataclass(frozen=True)
class KeyPair:
    public_key: bytes
    private_key: bytes


class SignatureProvider(Protocol):
    name: str

    def keypair_from_seed(self, seed: bytes) -> KeyPair: ...

    def sign(self, private_key: bytes, msg: bytes) -> bytes: ...

    def verify(self, public_key: bytes, msg: bytes, sig: bytes) -> bool: ...


def _check_key(k: bytes) -> None:
    if not isinstance(k, (bytes, bytearray)) or len(k) != KEY_LEN:
        raise MalformedKey(f"expected {KEY_LEN}-byte key")


def _check_sig(s: bytes) -> None:
    if not isinstance(s, (bytes, bytearray)) or len(s) != SIG_LEN:
        raise MalformedSignature(f"expected {SIG_LEN}-byte signature")


class Ed25519Provider:
    name = "ed25519"

    def __init__(self) -> None:
        self._priv: dict[bytes, Ed25519PrivateKey] = {}
        self._pub: dict[bytes, Ed25519PublicKey] = {}
        self._checked: dict[tuple[bytes, bytes, bytes], bool] = {}

    def keypair_from_seed(self, seed: bytes) -> KeyPair:
        sk = hash_bytes(b"asc1-key" + seed)
        return KeyPair(self._public(sk), sk)

    def _public(self, sk: bytes) -> bytes:
        key = self._private(sk)
        return key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)

    def _private(self, sk: bytes) -> Ed25519PrivateKey:
        key = self._priv.get(sk)
        if key is None:
            _check_key(sk)
            key = Ed25519PrivateKey.from_private_bytes(bytes(sk))
            self._priv[bytes(sk)] = key
        return key

    def sign(self, private_key: bytes, msg: bytes) -> bytes:
        return self._private(private_key).sign(bytes(msg))

    def verify(self, public_key: bytes, msg: bytes, sig: bytes) -> bool:
        _check_key(public_key)
        _check_sig(sig)
        k = (bytes(public_key), bytes(msg), bytes(sig))
        hit = self._checked.get(k)
        if hit is None:
            if len(self._checked) >= VERIFY_CACHE:
                self._checked.clear()
            hit = self._checked[k] = self._verify(*k)
        return hit

    def _verify(self, public_key: bytes, msg: bytes, sig: bytes) -> bool:
        pk = self._pub.get(public_key)
        if pk is None:
            try:
                pk = Ed25519PublicKey.from_public_bytes(bytes(public_key))
            except ValueError:
                return False
            self._pub[bytes(public_key)] = pk
        try:
            pk.verify(bytes(sig), bytes(msg))
        except InvalidSignature:
            return False
        return True


class HmacProvider:
    """Deterministic keyed-MAC scheme; public key = H(tag || secret)."""

    name = "hmac"

    def __init__(self) -> None:
        self._secrets: dict[bytes, bytes] = {}

    def keypair_from_seed(self, seed: bytes) -> KeyPair:
        sk = hash_bytes(b"asc1-key" + seed)
        pk = hash_bytes(b"asc1-hmac-pk" + sk)
        self._secrets[pk] = sk
        return KeyPair(pk, sk)

    def sign(self, private_key: bytes, msg: bytes) -> bytes:
        _check_key(private_key)
        pk = hash_bytes(b"asc1-hmac-pk" + private_key)
        self._secrets.setdefault(pk, bytes(private_key))
        return hmac.new(private_key, msg, hashlib.sha512).digest()

    def verify(self, public_key: bytes, msg: bytes, sig: bytes) -> bool:
        _check_key(public_key)
        _check_sig(sig)
        sk = self._secrets.get(bytes(public_key))
        if sk is None:
            return False
        expected = hmac.new(sk, msg, hashlib.sha512).digest()
        return hmac.compare_digest(expected, bytes(sig))


_active: SignatureProvider = Ed25519Provider()


def provider() -> SignatureProvider:
    return _active


def set_provider(p: SignatureProvider) -> SignatureProvider:
    global _active
    old, _active = _active, p
    return old


@contextlib.contextmanager
def using(p: SignatureProvider) -> Iterator[SignatureProvider]:
    old = set_provider(p)
    try:
        yield p
    finally:
        set_provider(old)


def keypair(seed: bytes | str) -> KeyPair:
    if isinstance(seed, str):
        seed = seed.encode()
    return _active.keypair_from_seed(seed)


def sign(private_key: bytes, msg: bytes) -> bytes:
    return _active.sign(private_key, msg)


def verify(public_key: bytes, msg: bytes, sig: bytes) -> bool:
    return _active.verify(public_key, msg, sig)
