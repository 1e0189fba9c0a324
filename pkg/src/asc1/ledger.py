"""Addresses, balances, transactions and blockchain states.

Everything here is an immutable value. Maps are ``FrozenDict`` instances and
updates build new objects, so a state can be shared freely between runs.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional

from .crypto import KEY_LEN, hash_bytes
from .expr import Expr, encode_expr
from .txtype import TxType
from .wire import U64_MAX, Writer

ALGO = 0


class LedgerError(Exception):
    pass


class MissingAsset(LedgerError):
    pass


class Overflow(LedgerError):
    pass


class Underflow(LedgerError):
    pass


class InvalidConfig(LedgerError):
    pass


class FrozenDict(dict):
    """A hashable dict that refuses in-place mutation."""

    __slots__ = ("_hash",)

    def _blocked(self, *a, **k):
        raise TypeError("FrozenDict is immutable")

    __setitem__ = __delitem__ = clear = pop = popitem = setdefault = update = _blocked  # type: ignore[assignment]

    def __hash__(self) -> int:  # type: ignore[override]
        try:
            return self._hash
        except AttributeError:
            h = hash(frozenset(self.items()))
            object.__setattr__(self, "_hash", h)
            return h

    def __reduce__(self):
        return (FrozenDict, (dict(self),))

    def set(self, key, value) -> "FrozenDict":
        d = dict(self)
        d[key] = value
        return FrozenDict(d)

    def without(self, key) -> "FrozenDict":
        d = dict(self)
        d.pop(key, None)
        return FrozenDict(d)


EMPTY = FrozenDict()


# -- addresses ------------------------------------------------------------

class Address:
    """Base class; equality and hashing go through the canonical encoding."""

    @cached_property
    def encoding(self) -> bytes:
        w = Writer()
        self._write(w)
        return w.getvalue()

    def _write(self, w: Writer) -> None:  # pragma: no cover - abstract
        raise NotImplementedError

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Address) and self.encoding == other.encoding

    def __hash__(self) -> int:
        return hash(self.encoding)

    def __lt__(self, other: "Address") -> bool:
        return self.encoding < other.encoding

    def short(self) -> str:
        return hash_bytes(self.encoding)[:4].hex()


@dataclass(frozen=True, eq=False)
class Multisig(Address):
    keys: tuple[bytes, ...]
    threshold: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "keys", tuple(bytes(k) for k in self.keys))
        if not 1 <= self.threshold <= len(self.keys):
            raise ValueError("threshold must be between 1 and the number of keys")

    def _write(self, w: Writer) -> None:
        w.u8(0x01).u32(len(self.keys))
        for k in self.keys:
            w.blob(k)
        w.u64(self.threshold)

    def __repr__(self) -> str:
        return f"Multisig<{self.threshold}/{len(self.keys)} {self.short()}>"


def single(public_key: bytes) -> Multisig:
    return Multisig((public_key,), 1)


@dataclass(frozen=True, eq=False)
class Script(Address):
    """Contract address. Only the script hash is part of the identity;
    ``expr`` is carried along when known so the account can be authorized."""

    digest: bytes
    expr: Optional[Expr] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if len(self.digest) != 32:
            raise ValueError("script digest must be 32 bytes")

    @classmethod
    def of(cls, e: Expr) -> "Script":
        return cls(hash_bytes(encode_expr(e)), e)

    def _write(self, w: Writer) -> None:
        w.u8(0x02).raw(self.digest)

    def __repr__(self) -> str:
        return f"Script<{self.short()}>"


# -- balances -------------------------------------------------------------

Balance = FrozenDict


def balance(entries: Mapping[int, int] | None = None) -> Balance:
    return FrozenDict(entries or {})


@dataclass(frozen=True)
class Params:
    delta_max: int = 1000
    min_balance: int = 100_000
    max_assets: int = 1001


DEFAULT_PARAMS = Params()


def valid_balance(bal: Mapping[int, int], params: Params = DEFAULT_PARAMS) -> bool:
    n = len(bal)
    return ALGO in bal and bal[ALGO] >= params.min_balance * n and n <= params.max_assets


def adjust_balance(bal: Balance, delta: int, asset: int) -> Balance:
    if asset not in bal:
        raise MissingAsset(f"asset {asset} not in balance")
    v = bal[asset] + delta
    if v < 0:
        raise Underflow(f"asset {asset}: {bal[asset]} {delta:+d}")
    if v > U64_MAX:
        raise Overflow(f"asset {asset}: {bal[asset]} {delta:+d}")
    return bal.set(asset, v)


# -- transactions ---------------------------------------------------------

_NO_VAL = {TxType.CLOSE, TxType.OPTIN, TxType.BURN, TxType.FRZ, TxType.UNFRZ, TxType.DELEGATE}
_NO_RCV = {TxType.OPTIN, TxType.BURN, TxType.FRZ, TxType.UNFRZ}


@dataclass(frozen=True)
class Transaction:
    """A transaction record. Fields a type does not use are normalized to
    canonical defaults (val 0, asst Algo, rcv = snd) so that two records
    with the same meaning are the same value."""

    type: TxType
    snd: Address
    rcv: Optional[Address] = None
    val: int = 0
    asst: int = ALGO
    fv: int = 0
    lv: int = 0
    lx: int = 0

    def __post_init__(self) -> None:
        t = TxType(self.type)
        object.__setattr__(self, "type", t)
        if self.rcv is None or t in _NO_RCV:
            object.__setattr__(self, "rcv", self.snd)
        if t in _NO_VAL:
            object.__setattr__(self, "val", 0)
        if t is TxType.GEN:
            object.__setattr__(self, "asst", ALGO)
        for name in ("val", "asst", "fv", "lv", "lx"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v <= U64_MAX:
                raise ValueError(f"{name} must be a u64, got {v!r}")

    @cached_property
    def encoding(self) -> bytes:
        w = Writer().u8(self.type.tag)
        self.snd._write(w)
        self.rcv._write(w)  # type: ignore[union-attr]
        w.u64(self.val).u64(self.asst).u64(self.fv).u64(self.lv).u64(self.lx)
        return w.getvalue()

    @cached_property
    def txid(self) -> bytes:
        return hash_bytes(self.encoding)

    def __hash__(self) -> int:
        return hash(self.encoding)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Transaction) and self.encoding == other.encoding

    def replace(self, **kw) -> "Transaction":
        return dataclasses.replace(self, **kw)

    def __repr__(self) -> str:
        return (f"Tx({self.type.value} {self.snd!r}->{self.rcv!r} val={self.val} "
                f"asst={self.asst} fv={self.fv} lv={self.lv} lx={self.lx})")


# -- blockchain state -----------------------------------------------------

@dataclass(frozen=True)
class BlockchainState:
    accounts: FrozenDict = field(default_factory=FrozenDict)           # Address -> Balance
    round: int = 0
    recent: frozenset = frozenset()         # performed txs still inside their window
    assets: FrozenDict = field(default_factory=FrozenDict)             # asset id -> (manager, creator)
    leases: FrozenDict = field(default_factory=FrozenDict)             # (Address, lease id) -> round
    frozen: FrozenDict = field(default_factory=FrozenDict)             # Address -> frozenset of asset ids
    next_asset: int = 1
    params: Params = DEFAULT_PARAMS

    def replace(self, **kw) -> "BlockchainState":
        return dataclasses.replace(self, **kw)

    def balance_of(self, a: Address) -> Optional[Balance]:
        return self.accounts.get(a)

    def frozen_for(self, a: Address) -> frozenset:
        return self.frozen.get(a, frozenset())

    @cached_property
    def digest(self) -> bytes:
        from .codec import encode_state
        return hash_bytes(encode_state(self))


@dataclass(frozen=True)
class Genesis:
    user: Address | bytes
    supply: int = 10**16
    params: Params = DEFAULT_PARAMS


def initial_state(genesis: Genesis) -> BlockchainState:
    if isinstance(genesis.supply, bool) or not isinstance(genesis.supply, int) \
            or not 0 <= genesis.supply <= U64_MAX:
        raise InvalidConfig(f"initial supply out of range: {genesis.supply!r}")
    user = genesis.user
    if isinstance(user, (bytes, bytearray)):
        if len(user) != KEY_LEN:
            raise InvalidConfig("initial user key must be 32 bytes")
        user = single(bytes(user))
    elif not isinstance(user, Address):
        raise InvalidConfig("initial user must be a public key or an address")
    p = genesis.params
    if p.delta_max < 0 or p.min_balance < 0 or p.max_assets < 1:
        raise InvalidConfig(f"bad parameters {p}")
    return BlockchainState(
        accounts=FrozenDict({user: FrozenDict({ALGO: genesis.supply})}),
        params=p,
    )


def temporal_validity(leases: Mapping, round: int, tx: Transaction,
                      delta_max: int = DEFAULT_PARAMS.delta_max) -> bool:
    if not tx.fv <= round <= tx.lv:
        return False
    if tx.lv - tx.fv > delta_max:
        return False
    if tx.lx == 0:
        return True
    held = leases.get((tx.snd, tx.lx))
    return held is None or round > held


def asset_total(asset: int, state: BlockchainState) -> int:
    return sum(b.get(asset, 0) for b in state.accounts.values())


def assets_in_use(state: BlockchainState) -> set[int]:
    out: set[int] = set()
    for b in state.accounts.values():
        out.update(k for k in b if k != ALGO)
    return out


def check_invariants(state: BlockchainState) -> list[str]:
    """Return a description of every state invariant that fails."""
    problems = []
    for a, b in state.accounts.items():
        if not valid_balance(b, state.params):
            problems.append(f"invalid balance for {a!r}: {dict(b)}")
        if any(not 0 <= v <= U64_MAX for v in b.values()):
            problems.append(f"amount out of range for {a!r}")
    for t in state.recent:
        if t.lv < state.round:
            problems.append(f"stale recent transaction {t!r}")
    held = assets_in_use(state)
    if held != set(state.assets):
        problems.append(f"asset map {sorted(state.assets)} vs held {sorted(held)}")
    return problems


def accounts_from(pairs: Iterable[tuple[Address, Mapping[int, int]]]) -> FrozenDict:
    return FrozenDict({a: FrozenDict(b) for a, b in pairs})
