"""The ledger transition system.

``apply_tx`` implements one rule per transaction type (payments, closes,
asset creation and the manager-driven operations), ``advance_round`` is the
clock, ``apply_group`` runs an atomic group, and ``net_step`` is the
user-network layer where witnesses are broadcast and authorized groups are
submitted.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

from . import crypto
from .codec import group_message
from .ledger import (ALGO, Address, BlockchainState, FrozenDict, Multisig,
                     Overflow, Script, Transaction, Underflow, adjust_balance,
                     temporal_validity, valid_balance)
from .script import EvalContext, accepts
from .txtype import MANAGER_AUTHORIZED, TxType
from .wire import U64_MAX


class Code(str, Enum):
    DOUBLE_SPEND = "DoubleSpend"
    TIME_INVALID = "TimeInvalid"
    BALANCE_INVALID = "BalanceInvalid"
    MISSING_ACCOUNT = "MissingAccount"
    ACCOUNT_EXISTS = "AccountExists"
    NOT_OPTED_IN = "NotOptedIn"
    FROZEN = "Frozen"
    NOT_CREATOR = "NotCreator"
    NOT_SOLE_OWNER = "NotSoleOwner"
    NOT_MANAGER = "NotManager"
    ASSET_UNKNOWN = "AssetUnknown"
    NO_RULE_APPLIES = "NoRuleApplies"
    EMPTY_GROUP = "EmptyGroup"
    OVERFLOW = "Overflow"
    UNKNOWN_WITNESS = "UnknownWitness"
    UNAUTHORIZED = "Unauthorized"


class StepError(Exception):
    def __init__(self, code: Code, detail: str = "") -> None:
        super().__init__(f"{code.value}: {detail}" if detail else code.value)
        self.code = code
        self.detail = detail


def _fail(code: Code, detail: str = "") -> StepError:
    return StepError(code, detail)


# -- single transactions --------------------------------------------------

def lease_update(leases: FrozenDict, tx: Transaction, round: int) -> FrozenDict:
    # ``round`` is part of the signature for symmetry with the rules but the
    # lease is held until the transaction's last valid round.
    if tx.lx == 0:
        return leases
    return leases.set((tx.snd, tx.lx), tx.lv)


def _account(s: BlockchainState, a: Address, who: str):
    bal = s.accounts.get(a)
    if bal is None:
        raise _fail(Code.MISSING_ACCOUNT, f"{who} {a!r} has no account")
    return bal


def _add(bal, v: int, asset: int):
    try:
        return adjust_balance(bal, v, asset)
    except Overflow as exc:
        raise _fail(Code.OVERFLOW, str(exc)) from None


def _sub(bal, v: int, asset: int):
    try:
        return adjust_balance(bal, -v, asset)
    except Underflow as exc:
        raise _fail(Code.BALANCE_INVALID, str(exc)) from None


def _not_frozen(s: BlockchainState, asset: int, *who: Address) -> None:
    for a in who:
        if asset in s.frozen_for(a):
            raise _fail(Code.FROZEN, f"asset {asset} frozen for {a!r}")


def _valid(s: BlockchainState, bal, what: str) -> None:
    if not valid_balance(bal, s.params):
        raise _fail(Code.BALANCE_INVALID, f"{what} would be {dict(bal)}")


def _pay(s: BlockchainState, tx: Transaction, accts: dict) -> None:
    x, y, v, tau = tx.snd, tx.rcv, tx.val, tx.asst
    sx = _account(s, x, "sender")
    sy = s.accounts.get(y)
    if sy is None:
        if tau != ALGO:
            raise _fail(Code.MISSING_ACCOUNT, f"receiver {y!r} has no account")
        # Pay-Open
        new_x = _sub(sx, v, ALGO)
        new_y = FrozenDict({ALGO: v})
        _valid(s, new_x, "sender balance")
        _valid(s, new_y, "new account balance")
        accts[x] = new_x
        accts[y] = new_y
        return
    if v == 0:
        # Pay-Zero
        if x == y:
            raise _fail(Code.NO_RULE_APPLIES, "zero-value self payment")
        return
    if tau not in sx:
        raise _fail(Code.NOT_OPTED_IN, f"sender does not hold asset {tau}")
    if tau not in sy:
        raise _fail(Code.NOT_OPTED_IN, f"receiver not opted in to asset {tau}")
    _not_frozen(s, tau, x, y)
    new_x = _sub(sx, v, tau)
    _valid(s, new_x, "sender balance")
    if x == y:
        return
    accts[x] = new_x
    accts[y] = _add(sy, v, tau)


def _close(s: BlockchainState, tx: Transaction, accts: dict) -> None:
    x, y, tau = tx.snd, tx.rcv, tx.asst
    sx = _account(s, x, "sender")
    if x == y:
        raise _fail(Code.NO_RULE_APPLIES, "close to self")
    sy = s.accounts.get(y)
    if tau == ALGO:
        if set(sx) != {ALGO}:
            raise _fail(Code.BALANCE_INVALID, "closing account still holds assets")
        del accts[x]
        if sy is None:
            accts[y] = FrozenDict({ALGO: sx[ALGO]})      # Close-Open
        else:
            accts[y] = _add(sy, sx[ALGO], ALGO)          # Close-Pay
        return
    # Close-Asst
    if tau not in sx:
        raise _fail(Code.NOT_OPTED_IN, f"sender does not hold asset {tau}")
    if sy is None:
        raise _fail(Code.MISSING_ACCOUNT, f"receiver {y!r} has no account")
    if tau not in sy:
        raise _fail(Code.NOT_OPTED_IN, f"receiver not opted in to asset {tau}")
    _not_frozen(s, tau, x, y)
    new_y = _add(sy, sx[tau], tau)
    _valid(s, new_y, "receiver balance")
    accts[x] = sx.without(tau)
    accts[y] = new_y


def apply_tx(s: BlockchainState, tx: Transaction) -> BlockchainState:
    """Apply one transaction or raise ``StepError``."""
    if tx in s.recent:
        raise _fail(Code.DOUBLE_SPEND, repr(tx))
    if not temporal_validity(s.leases, s.round, tx, s.params.delta_max):
        raise _fail(Code.TIME_INVALID, f"round {s.round}, {tx!r}")
    accts = dict(s.accounts)
    assets = s.assets
    frozen = s.frozen
    next_asset = s.next_asset
    ty, x, tau = tx.type, tx.snd, tx.asst

    if ty is TxType.PAY:
        _pay(s, tx, accts)
    elif ty is TxType.CLOSE:
        _close(s, tx, accts)
    elif ty is TxType.GEN:
        sx = _account(s, x, "sender")
        new_id = next_asset
        if new_id > U64_MAX:
            raise _fail(Code.OVERFLOW, "asset identifiers exhausted")
        new_x = sx.set(new_id, tx.val)
        _valid(s, new_x, "creator balance")
        accts[x] = new_x
        assets = assets.set(new_id, (tx.rcv, x))
        next_asset += 1
    elif ty is TxType.OPTIN:
        sx = _account(s, x, "sender")
        if tau != ALGO and tau not in assets:
            raise _fail(Code.ASSET_UNKNOWN, f"asset {tau}")
        if tau not in sx:
            new_x = sx.set(tau, 0)
            _valid(s, new_x, "balance after opt-in")
            accts[x] = new_x
    elif ty is TxType.BURN:
        if tau not in assets:
            raise _fail(Code.ASSET_UNKNOWN, f"asset {tau}")
        creator = assets[tau][1]
        if x != creator:
            raise _fail(Code.NOT_CREATOR, f"{x!r} did not create asset {tau}")
        sc = _account(s, creator, "creator")
        if tau not in sc:
            raise _fail(Code.NOT_SOLE_OWNER, f"creator no longer holds asset {tau}")
        for a, b in s.accounts.items():
            if a != creator and tau in b:
                raise _fail(Code.NOT_SOLE_OWNER, f"{a!r} holds asset {tau}")
        accts[creator] = sc.without(tau)
        assets = assets.without(tau)
    elif ty is TxType.RVK:
        y, v = tx.rcv, tx.val
        sx = _account(s, x, "revoked account")
        sy = _account(s, y, "receiver")
        if x == y:
            raise _fail(Code.NO_RULE_APPLIES, "revoke to self")
        if tau not in sx or tau not in sy:
            raise _fail(Code.NOT_OPTED_IN, f"asset {tau} missing on one side")
        _not_frozen(s, tau, x, y)
        new_x = _sub(sx, v, tau)
        _valid(s, new_x, "revoked balance")
        accts[x] = new_x
        accts[y] = _add(sy, v, tau)
    elif ty in (TxType.FRZ, TxType.UNFRZ):
        sx = _account(s, x, "frozen account")
        if tau not in sx:
            raise _fail(Code.NOT_OPTED_IN, f"{x!r} does not hold asset {tau}")
        cur = s.frozen_for(x)
        new = cur | {tau} if ty is TxType.FRZ else cur - {tau}
        frozen = frozen.set(x, frozenset(new)) if new else frozen.without(x)
    elif ty is TxType.DELEGATE:
        if tau not in assets:
            raise _fail(Code.ASSET_UNKNOWN, f"asset {tau}")
        manager, creator = assets[tau]
        if manager != x:
            raise _fail(Code.NOT_MANAGER, f"{x!r} does not manage asset {tau}")
        assets = assets.set(tau, (tx.rcv, creator))
    else:  # pragma: no cover
        raise _fail(Code.NO_RULE_APPLIES, f"unknown type {ty}")

    return s.replace(
        accounts=FrozenDict(accts),
        recent=s.recent | {tx},
        assets=assets,
        leases=lease_update(s.leases, tx, s.round),
        frozen=frozen,
        next_asset=next_asset,
    )


def advance_round(s: BlockchainState) -> BlockchainState:
    r = s.round
    return s.replace(round=r + 1, recent=frozenset(t for t in s.recent if t.lv > r))


def apply_group(s: BlockchainState, group: Sequence[Transaction]) -> BlockchainState:
    """All-or-nothing left fold; on error ``s`` is untouched (it is immutable)."""
    if not group:
        raise _fail(Code.EMPTY_GROUP)
    out = s
    for t in group:
        out = apply_tx(out, t)
    return out


# -- authorization --------------------------------------------------------

def authorizer(assets, tx: Transaction) -> Address:
    if tx.type in MANAGER_AUTHORIZED:
        entry = assets.get(tx.asst)
        if entry is None:
            raise _fail(Code.ASSET_UNKNOWN, f"asset {tx.asst} has no manager")
        return entry[0]
    return tx.snd


def _multisig_ok(a: Multisig, witnesses: Sequence[bytes], msg: bytes) -> bool:
    signed = 0
    wits = set(witnesses)
    for key in dict.fromkeys(a.keys):
        for w in wits:
            if len(w) == crypto.SIG_LEN and crypto.verify(key, msg, w):
                signed += 1
                break
        if signed >= a.threshold:
            return True
    return False


def authorize_group(assets, witness_seqs: Sequence[Sequence[bytes]],
                    group: Sequence[Transaction]) -> bool:
    if len(witness_seqs) != len(group):
        return False
    group = tuple(group)
    for i, t in enumerate(group):
        try:
            auth = authorizer(assets, t)
        except StepError:
            return False
        if isinstance(auth, Multisig):
            if not _multisig_ok(auth, witness_seqs[i], group_message(group, i)):
                return False
        elif isinstance(auth, Script):
            if auth.expr is None:
                return False
            if not accepts(EvalContext(group, i, tuple(witness_seqs[i])), auth.expr):
                return False
        else:  # pragma: no cover
            return False
    return True


# -- network layer --------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    w: bytes


@dataclass(frozen=True)
class Tick:
    pass


@dataclass(frozen=True)
class AuthGroup:
    witnesses: tuple[tuple[bytes, ...], ...]
    group: tuple[Transaction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "witnesses", tuple(tuple(bytes(w) for w in ws) for ws in self.witnesses))
        object.__setattr__(self, "group", tuple(self.group))
        if len(self.witnesses) != len(self.group):
            raise ValueError("one witness sequence per transaction")


Label = Union[Witness, Tick, AuthGroup]
TICK = Tick()


@dataclass(frozen=True)
class NetState:
    chain: BlockchainState
    knowledge: frozenset = frozenset()


def net_step(n: NetState, label: Label) -> NetState:
    if isinstance(label, Witness):
        if label.w in n.knowledge:
            return n
        return NetState(n.chain, n.knowledge | {label.w})
    if isinstance(label, Tick):
        return NetState(advance_round(n.chain), n.knowledge)
    if isinstance(label, AuthGroup):
        for ws in label.witnesses:
            for w in ws:
                if w not in n.knowledge:
                    raise _fail(Code.UNKNOWN_WITNESS, w.hex()[:16])
        if not authorize_group(n.chain.assets, label.witnesses, label.group):
            raise _fail(Code.UNAUTHORIZED, "group authorization failed")
        return NetState(apply_group(n.chain, label.group), n.knowledge)
    raise TypeError(f"not a label: {label!r}")
