"""Adversarial run generation and run-level property checks.

A run is generated round by round. Every strategy may propose actions; the
adversary decides which proposal is delivered next or whether the round
ends. A proposal made at round r must be delivered before the round passes
r + delta (the adversary's delay bound), and at most ``max_actions_per_round``
labels may be delivered in one round.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Protocol, Sequence, Union

from . import crypto
from .codec import group_message
from .expr import BinOp, Const, Expr, TxField, TxPos
from .ledger import (ALGO, Address, BlockchainState, Genesis, Multisig, Params,
                     Script, Transaction, asset_total, initial_state, single)
from .semantics import (TICK, AuthGroup, Label, NetState, StepError, Witness,
                        net_step)
from .txtype import TxType


class HarnessError(RuntimeError):
    pass


class StuckRun(HarnessError):
    pass


class DeadlineViolation(HarnessError):
    pass


class UnknownProperty(KeyError):
    pass


# -- users ----------------------------------------------------------------

@dataclass(frozen=True)
class User:
    name: str
    keys: crypto.KeyPair

    @classmethod
    def from_seed(cls, name: str, seed: bytes | str | None = None) -> "User":
        return cls(name, crypto.keypair(seed if seed is not None else f"user:{name}"))

    @property
    def pk(self) -> bytes:
        return self.keys.public_key

    @property
    def address(self) -> Multisig:
        return single(self.keys.public_key)

    def sign(self, msg: bytes) -> bytes:
        return crypto.sign(self.keys.private_key, msg)

    def sign_tx(self, group: Sequence[Transaction], i: int) -> bytes:
        return self.sign(group_message(tuple(group), i))


# -- actions --------------------------------------------------------------

@dataclass(frozen=True)
class Submit:
    """Broadcast the needed witnesses, then submit the group."""

    group: tuple[Transaction, ...]
    witnesses: tuple[tuple[bytes, ...], ...]
    note: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "group", tuple(self.group))
        object.__setattr__(self, "witnesses", tuple(tuple(w) for w in self.witnesses))


Action = Union[Submit, Witness, AuthGroup]


def expand(action: Action, knowledge: frozenset) -> list[Label]:
    if isinstance(action, Submit):
        out: list[Label] = []
        seen = set(knowledge)
        for ws in action.witnesses:
            for w in ws:
                if w not in seen:
                    seen.add(w)
                    out.append(Witness(w))
        out.append(AuthGroup(action.witnesses, action.group))
        return out
    return [action]


def signed(group: Sequence[Transaction], signers: Sequence[Sequence[User]],
           extra: Optional[Sequence[Sequence[bytes]]] = None) -> Submit:
    """Submit where transaction i carries signatures from ``signers[i]``
    (after any explicit witnesses in ``extra[i]``)."""
    group = tuple(group)
    wits = []
    for i in range(len(group)):
        ws = list(extra[i]) if extra else []
        ws += [u.sign_tx(group, i) for u in signers[i]]
        wits.append(tuple(ws))
    return Submit(group, tuple(wits))


# -- runs -----------------------------------------------------------------

@dataclass(frozen=True)
class Rejection:
    position: int          # number of labels in the run when it was attempted
    owner: str
    label: Label
    code: str
    detail: str


@dataclass
class Run:
    labels: list[Label]
    states: list[NetState]
    seed: object = None
    conforms_to: tuple[str, ...] = ()
    rejected: list[Rejection] = field(default_factory=list)
    watch: tuple[Address, ...] = ()

    @property
    def final(self) -> NetState:
        return self.states[-1]

    def groups(self) -> Iterable[tuple[int, AuthGroup]]:
        for i, lab in enumerate(self.labels):
            if isinstance(lab, AuthGroup):
                yield i, lab

    def transactions(self) -> Iterable[tuple[int, int, Transaction]]:
        for i, lab in self.groups():
            for j, t in enumerate(lab.group):
                yield i, j, t


class RunView:
    """What strategies see: the public history of the run so far."""

    def __init__(self, run: Run) -> None:
        self._run = run

    @property
    def state(self) -> NetState:
        return self._run.states[-1]

    @property
    def chain(self) -> BlockchainState:
        return self._run.states[-1].chain

    @property
    def round(self) -> int:
        return self._run.states[-1].chain.round

    @property
    def knowledge(self) -> frozenset:
        return self._run.states[-1].knowledge

    @property
    def labels(self) -> Sequence[Label]:
        return self._run.labels

    def occurrences(self, pred: Callable[[Transaction], bool]):
        """(label index, position in group, tx, witnesses, round) for every
        performed transaction matching ``pred``."""
        for i, j, t in self._run.transactions():
            if pred(t):
                lab = self._run.labels[i]
                yield i, j, t, lab.witnesses[j], self._run.states[i].chain.round

    def occurs(self, pred: Callable[[Transaction], bool]) -> bool:
        return next(self.occurrences(pred), None) is not None


class Strategy(Protocol):
    name: str
    owner: str

    def step(self, view: RunView, rng: random.Random) -> Sequence[Action]: ...


@dataclass
class Pending:
    owner: str
    label: Label
    deadline: int
    seq: int


class Adversary(Protocol):
    def choose(self, view: RunView, heads: Mapping[str, Pending], tick_allowed: bool,
               rng: random.Random) -> Optional[str]:
        """Owner whose oldest pending label is delivered next, or None to
        end the round."""


class FifoAdversary:
    """Delivers proposals in the order they were made; never delays."""

    def choose(self, view, heads, tick_allowed, rng):
        if not heads:
            return None
        return min(heads.values(), key=lambda p: p.seq).owner


class RandomAdversary:
    """Picks a random user's pending label, or ends the round with
    probability ``p_tick`` whenever the delay bound allows it."""

    def __init__(self, p_tick: float = 0.3) -> None:
        self.p_tick = p_tick

    def choose(self, view, heads, tick_allowed, rng):
        if not heads:
            return None
        if tick_allowed and rng.random() < self.p_tick:
            return None
        return rng.choice(sorted(heads))


def simulate(genesis: NetState, strategies: Sequence[Strategy], adversary: Optional[Adversary] = None,
             max_rounds: int = 10, seed: object = 0, delta: int = 0,
             max_actions_per_round: int = 1024, max_labels: Optional[int] = None,
             watch: Sequence[Address] = ()) -> Run:
    """Generate one run. Stops after ``max_rounds`` ticks (or once
    ``max_labels`` labels have been performed)."""
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    adversary = adversary or FifoAdversary()
    adv_rng = random.Random(f"{seed}:adversary")
    rngs = [random.Random(f"{seed}:strategy:{i}") for i in range(len(strategies))]
    run = Run([], [genesis], seed, tuple(s.name for s in strategies), watch=tuple(watch))
    view = RunView(run)
    queues: dict[str, deque[Pending]] = {}
    seq = 0
    ticks = 0
    in_round = 0

    def full() -> bool:
        return max_labels is not None and len(run.labels) >= max_labels

    while ticks < max_rounds and not full():
        state = run.states[-1]
        for s, rng in zip(strategies, rngs):
            for action in s.step(view, rng) or ():
                for lab in expand(action, state.knowledge):
                    queues.setdefault(s.owner, deque()).append(
                        Pending(s.owner, lab, state.chain.round + delta, seq))
                    seq += 1
        heads = {o: q[0] for o, q in queues.items() if q}
        rnd = state.chain.round
        tick_allowed = all(p.deadline > rnd for q in queues.values() for p in q)
        if in_round >= max_actions_per_round:
            if not tick_allowed:
                raise StuckRun(f"action cap reached in round {rnd} with overdue proposals")
            choice = None
        else:
            choice = adversary.choose(view, heads, tick_allowed, adv_rng)
        if choice is None:
            if not tick_allowed:
                raise DeadlineViolation(f"round {rnd} ended with overdue proposals")
            run.labels.append(TICK)
            run.states.append(net_step(state, TICK))
            ticks += 1
            in_round = 0
            continue
        if choice not in heads:
            raise HarnessError(f"adversary chose {choice!r} with nothing pending")
        p = queues[choice].popleft()
        try:
            nxt = net_step(state, p.label)
        except StepError as exc:
            run.rejected.append(Rejection(len(run.labels), p.owner, p.label, exc.code.value, exc.detail))
            in_round += 1
            continue
        run.labels.append(p.label)
        run.states.append(nxt)
        in_round += 1
    return run


def genesis_state(user: User | Address | bytes, supply: int = 10**16,
                  params: Params = Params()) -> NetState:
    if isinstance(user, User):
        user = user.address
    return NetState(initial_state(Genesis(user, supply, params)))


def apply_labels(n: NetState, labels: Iterable[Label]) -> tuple[NetState, list[Label]]:
    """Apply labels in order (raising on the first failure)."""
    done = []
    for lab in labels:
        n = net_step(n, lab)
        done.append(lab)
    return n, done


def fund(genesis: User, users: Sequence[User | Address], amount: int, n: NetState,
         fv: Optional[int] = None) -> tuple[NetState, list[Label]]:
    """Pay ``amount`` from the genesis user to each of ``users``."""
    rnd = n.chain.round if fv is None else fv
    labels: list[Label] = []
    for u in users:
        rcv = u.address if isinstance(u, User) else u
        t = Transaction(TxType.PAY, genesis.address, rcv, amount, ALGO, rnd, rnd + min(10, n.chain.params.delta_max))
        sub = signed([t], [[genesis]])
        n, done = apply_labels(n, expand(sub, n.knowledge))
        labels += done
    return n, labels


# -- properties -----------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    ok: bool
    position: Optional[int] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_no_double_spend(run: Run) -> Verdict:
    seen: dict[bytes, int] = {}
    for i, j, t in run.transactions():
        if t.encoding in seen:
            return Verdict(False, i, f"{t!r} already performed at label {seen[t.encoding]}")
        seen[t.encoding] = i
    return Verdict(True)


def check_value_preservation(run: Run) -> Verdict:
    first = run.states[0].chain
    algo = asset_total(ALGO, first)
    minted = {k: asset_total(k, first) for k in first.assets}
    burnt: set[int] = set()
    for i, lab in enumerate(run.labels):
        before, after = run.states[i].chain, run.states[i + 1].chain
        if isinstance(lab, AuthGroup):
            nid = before.next_asset
            for t in lab.group:
                if t.type is TxType.GEN:
                    minted[nid] = t.val
                    nid += 1
                elif t.type is TxType.BURN:
                    burnt.add(t.asst)
        if asset_total(ALGO, after) != algo:
            return Verdict(False, i, f"Algo total {asset_total(ALGO, after)} != {algo}")
        for k, v in minted.items():
            want = 0 if k in burnt else v
            got = asset_total(k, after)
            if got != want:
                return Verdict(False, i, f"asset {k}: total {got}, expected {want}")
    return Verdict(True)


def check_replay(run: Run) -> Verdict:
    n = run.states[0]
    for i, lab in enumerate(run.labels):
        try:
            n = net_step(n, lab)
        except StepError as exc:
            return Verdict(False, i, f"label no longer applies: {exc}")
        want = run.states[i + 1]
        if n.chain.digest != want.chain.digest or n.knowledge != want.knowledge:
            return Verdict(False, i, "replayed state differs")
    return Verdict(True)


def is_close_guarded(e: Expr) -> bool:
    """Whether ``e`` is a conjunction with ``tx.type = close`` among its
    top-level conjuncts."""
    stack = [e]
    close = Const(TxType.CLOSE.tag_bytes)
    while stack:
        x = stack.pop()
        if isinstance(x, BinOp) and x.op == "and":
            stack += [x.left, x.right]
        elif isinstance(x, BinOp) and x.op == "=":
            l, r = x.left, x.right
            for a, b in ((l, r), (r, l)):
                if isinstance(a, TxField) and a.field == "type" and isinstance(a.index, TxPos) and b == close:
                    return True
    return False


def close_guarded_accounts(run: Run) -> list[Address]:
    if run.watch:
        return list(run.watch)
    found = {}
    for n in run.states:
        for a in n.chain.accounts:
            if isinstance(a, Script) and a.expr is not None and is_close_guarded(a.expr):
                found[a] = None
    return list(found)


def check_close_monotone(run: Run) -> Verdict:
    for a in close_guarded_accounts(run):
        prev: Optional[int] = None
        for i, n in enumerate(run.states):
            bal = n.chain.accounts.get(a)
            if bal is None:
                prev = None   # closed (or not yet created)
                continue
            if set(bal) != {ALGO}:
                return Verdict(False, max(i - 1, 0), f"{a!r} holds {sorted(bal)}")
            if prev is not None and bal[ALGO] < prev:
                return Verdict(False, i - 1, f"{a!r} decreased {prev} -> {bal[ALGO]}")
            prev = bal[ALGO]
    return Verdict(True)


PROPERTIES: dict[str, Callable[[Run], Verdict]] = {
    "no-double-spend": check_no_double_spend,
    "value-preservation": check_value_preservation,
    "replay-determinism": check_replay,
    "close-monotone": check_close_monotone,
}


def check_property(run: Run, property_id: str) -> Verdict:
    try:
        fn = PROPERTIES[property_id]
    except KeyError:
        raise UnknownProperty(property_id) from None
    return fn(run)
