"""Reference strategies for the contract templates, plus a random fuzzing
strategy. Each class keeps its private state (its "tape") in attributes."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import crypto
from .codec import versig_message
from .ledger import ALGO, Address, Script, Transaction
from .semantics import Witness, authorizer, StepError
from .sim import Action, RunView, Submit, User
from .templates import (ORACLE_ONE, ORACLE_ZERO, ContractBundle, InvalidParams,
                        lottery_winner)
from .txtype import TxType

LV_WINDOW = 10


def _lv(view: RunView, fv: int) -> int:
    return fv + min(LV_WINDOW, view.chain.params.delta_max)


def close_tx(view: RunView, snd: Address, rcv: Address, fv: Optional[int] = None) -> Transaction:
    fv = view.round if fv is None else fv
    return Transaction(TxType.CLOSE, snd, rcv, 0, ALGO, fv, _lv(view, fv))


def contract_close(view: RunView, snd: Address, rcv: Address, args: Sequence[bytes] = (),
                   fv: Optional[int] = None) -> Submit:
    return Submit((close_tx(view, snd, rcv, fv),), (tuple(args),))


@dataclass
class Scripted:
    """Emits fixed actions once the given rounds are reached."""

    name: str
    owner: str
    schedule: list[tuple[int, Action]]
    _next: int = 0

    def step(self, view, rng):
        out = []
        while self._next < len(self.schedule) and self.schedule[self._next][0] <= view.round:
            out.append(self.schedule[self._next][1])
            self._next += 1
        return out


# -- HTLC -----------------------------------------------------------------

@dataclass
class HtlcReveal:
    """Reveal the secret and collect the deposit before the deadline."""

    bundle: ContractBundle
    secret: bytes
    at: Optional[int] = None
    name: str = "htlc-A"
    owner: str = "A"
    script: str = "htlc"
    receiver: Optional[Address] = None
    done: bool = False

    def step(self, view, rng):
        tmax = self.bundle.params["tmax"]
        if self.done or view.round >= tmax or (self.at is not None and view.round < self.at):
            return []
        self.done = True
        rcv = self.receiver or self.bundle.params["A"]
        return [contract_close(view, self.bundle.address(self.script), rcv, [self.secret])]


@dataclass
class HtlcTimeout:
    """At the deadline, collect the deposit unless the secret was revealed."""

    bundle: ContractBundle
    name: str = "htlc-B"
    owner: str = "B"
    script: str = "htlc"
    reveal_claim: str = "A"
    receiver: Optional[Address] = None
    done: bool = False

    def step(self, view, rng):
        tmax = self.bundle.params["tmax"]
        if self.done or view.round < tmax:
            return []
        self.done = True
        if view.occurs(self.bundle.claim_sets[self.reveal_claim]):
            return []
        rcv = self.receiver or self.bundle.params["B"]
        return [contract_close(view, self.bundle.address(self.script), rcv)]


# -- oracle ---------------------------------------------------------------

def _find_signature(view: RunView, key: bytes, msg: bytes) -> Optional[bytes]:
    for w in view.knowledge:
        if len(w) == crypto.SIG_LEN and crypto.verify(key, msg, w):
            return w
    return None


@dataclass
class OracleClaimant:
    """Waits for the oracle's signature on ``outcome`` and claims with it.
    Party A (outcome 0) also claims after the deadline without one."""

    bundle: ContractBundle
    party: str = "A"
    name: str = ""
    owner: str = ""
    done: bool = False

    def __post_init__(self) -> None:
        if self.party not in ("A", "B"):
            raise InvalidParams("party must be A or B")
        self.name = self.name or f"oracle-{self.party}"
        self.owner = self.owner or self.party

    def step(self, view, rng):
        if self.done:
            return []
        p = self.bundle.params
        me = self.bundle.address()
        outcome = ORACLE_ZERO if self.party == "A" else ORACLE_ONE
        sig = _find_signature(view, p["o"], versig_message(me, outcome))
        rcv = p[self.party]
        if sig is not None and (self.party == "B" or view.round <= p["tmax"]):
            self.done = True
            return [contract_close(view, me, rcv, [outcome, sig])]
        if self.party == "A" and view.round >= p["tmax"] + 1:
            self.done = True
            return [contract_close(view, me, rcv)]
        return []


@dataclass
class OracleSigner:
    """Signs outcome 0 or 1 at round ``at``, or stays silent."""

    bundle: ContractBundle
    signer: User
    mode: str = "silent"          # "sign0" | "sign1" | "silent"
    at: int = 0
    name: str = "oracle-o"
    owner: str = "o"
    done: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("sign0", "sign1", "silent"):
            raise InvalidParams(f"unknown oracle mode {self.mode!r}")

    def step(self, view, rng):
        if self.done or self.mode == "silent" or view.round < self.at:
            return []
        self.done = True
        outcome = ORACLE_ZERO if self.mode == "sign0" else ORACLE_ONE
        return [Witness(self.signer.sign(versig_message(self.bundle.address(), outcome)))]


# -- lottery and mutual HTLC ----------------------------------------------

@dataclass
class LotteryPlayer:
    """Reveal own secret (step 1), claim the pot when the opponent's secret
    shows a win (step 2), or take the opponent's collateral at the deadline
    (step 3). With ``reveal=False`` the player withholds its secret."""

    bundle: ContractBundle
    party: str
    secret: bytes
    reveal: bool = True
    reveal_at: Optional[int] = None
    name: str = ""
    owner: str = ""
    revealed: bool = False
    claimed_pot: bool = False
    claimed_timeout: bool = False

    def __post_init__(self) -> None:
        if self.party not in ("A", "B"):
            raise InvalidParams("party must be A or B")
        self.name = self.name or f"lottery-{self.party}"
        self.owner = self.owner or self.party

    @property
    def other(self) -> str:
        return "B" if self.party == "A" else "A"

    def step(self, view, rng):
        b, p, q = self.bundle, self.party, self.other
        tmax = b.params["tmax"]
        me = b.params[p]
        out: list[Action] = []
        if self.reveal and not self.revealed and view.round < tmax and \
                (self.reveal_at is None or view.round >= self.reveal_at):
            self.revealed = True
            out.append(contract_close(view, b.address(f"htlc_{p}"), me, [self.secret]))
        theirs = next(view.occurrences(b.claim_sets[f"secr:{q}"]), None)
        if theirs is not None and not self.claimed_pot and theirs[4] < tmax:
            s_q = theirs[3][0] if theirs[3] else b""
            sA, sB = (self.secret, s_q) if p == "A" else (s_q, self.secret)
            if lottery_winner(sA, sB) == p:
                self.claimed_pot = True
                out.append(contract_close(view, b.address("lottery"), me, [sA, sB]))
        if theirs is None and not self.claimed_timeout and view.round >= tmax:
            self.claimed_timeout = True
            out.append(contract_close(view, b.address(f"htlc_{q}"), me))
        return out


@dataclass
class MutualHtlcParty:
    bundle: ContractBundle
    party: str
    secret: bytes
    name: str = ""
    owner: str = ""
    revealed: bool = False
    checked: bool = False

    def __post_init__(self) -> None:
        self.name = self.name or f"mutual-htlc-{self.party}"
        self.owner = self.owner or self.party

    def step(self, view, rng):
        b, p = self.bundle, self.party
        q = "B" if p == "A" else "A"
        tmax = b.params["tmax"]
        out: list[Action] = []
        if not self.revealed and view.round < tmax:
            self.revealed = True
            out.append(contract_close(view, b.address(f"htlc_{p}"), b.params[p], [self.secret]))
        if not self.checked and view.round >= tmax:
            self.checked = True
            if not view.occurs(b.claim_sets[f"reveal:{q}"]):
                out.append(contract_close(view, b.address(f"htlc_{q}"), b.params[p]))
        return out


# -- periodic payment -----------------------------------------------------

@dataclass
class GreedyWithdrawer:
    """Each round, tries every periodic-payment withdrawal that is inside
    its validity window and has not been performed yet."""

    bundle: ContractBundle
    name: str = "pp-greedy"
    owner: str = "A"
    tried: set = field(default_factory=set)

    def step(self, view, rng):
        prm = self.bundle.params
        p, d, v, n, A = prm["p"], prm["d"], prm["v"], prm["n"], prm["A"]
        me = self.bundle.address()
        out = []
        r = view.round
        for k in range(max(0, (r - d) // p), r // p + 1):
            fv = k * p
            if not fv <= r <= fv + d:
                continue
            t = Transaction(TxType.PAY, me, A, v, ALGO, fv, fv + d, n)
            if (t, r) in self.tried or view.occurs(lambda x, t=t: x == t):
                continue
            self.tried.add((t, r))
            out.append(Submit((t,), ((),)))
        return out


# -- fuzzing --------------------------------------------------------------

@dataclass
class ScriptAccount:
    """A contract account the fuzzer may poke, with witnesses to try."""

    address: Script
    args: list[tuple[bytes, ...]]


@dataclass
class FuzzUser:
    """Random transactions of every type, including exact resubmissions
    of earlier proposals."""

    user: User
    peers: list[Address]
    scripts: list[ScriptAccount] = field(default_factory=list)
    p_act: float = 0.5
    p_dup: float = 0.15
    burst: int = 2                 # proposals per round at most
    name: str = ""
    owner: str = ""
    history: list[Submit] = field(default_factory=list)
    _round: int = -1
    _used: int = 0

    def __post_init__(self) -> None:
        self.name = self.name or f"fuzz-{self.user.name}"
        self.owner = self.owner or self.user.name

    def step(self, view, rng):
        if view.round != self._round:
            self._round, self._used = view.round, 0
        if self._used >= self.burst or rng.random() > self.p_act:
            return []
        self._used += 1
        if self.history and rng.random() < self.p_dup:
            return [rng.choice(self.history)]
        n = rng.choice((1, 1, 1, 2, 3))
        group = tuple(self._random_tx(view, rng) for _ in range(n))
        wits = []
        for i, t in enumerate(group):
            try:
                auth = authorizer(view.chain.assets, t)
            except StepError:
                auth = self.user.address
            if isinstance(auth, Script):
                acct = next((s for s in self.scripts if s.address == auth), None)
                wits.append(rng.choice(acct.args) if acct and acct.args else ())
            else:
                wits.append((self.user.sign_tx(group, i),))
        sub = Submit(group, tuple(wits))
        self.history.append(sub)
        return [sub]

    def _random_tx(self, view, rng: random.Random) -> Transaction:
        s = view.chain
        me = self.user.address
        r = s.round
        fv = max(0, r - rng.choice((0, 0, 0, 0, 1, 2)))
        dm = s.params.delta_max
        lv = fv + rng.choice((2, 3, 5, 8, dm, dm, dm + 1))
        lx = rng.choice((0,) * 9 + (1, 2))
        mine = s.accounts.get(me, {})
        held = [k for k in mine if k != ALGO]
        managed = [k for k, (m, _) in s.assets.items() if m == me]
        created = [k for k, (_, c) in s.assets.items() if c == me]
        peer = rng.choice(self.peers)
        amount = rng.choice((0, 1, 7, 100_000, 250_000, 1_000_000, 10**9))
        kind = rng.choices(
            ("pay", "pay-asset", "close", "close-asset", "gen", "optin", "burn",
             "manage", "fund-script", "script"),
            weights=(16, 10, 1, 3, 8, 8, 6, 10, 6, 10))[0]
        T = TxType
        if kind == "pay-asset" and held:
            return Transaction(T.PAY, me, peer, rng.choice((0, 1, 5, 50)), rng.choice(held), fv, lv, lx)
        if kind == "close":
            return Transaction(T.CLOSE, me, peer, 0, ALGO, fv, lv, lx)
        if kind == "close-asset" and held:
            return Transaction(T.CLOSE, me, peer, 0, rng.choice(held), fv, lv, lx)
        if kind == "gen":
            return Transaction(T.GEN, me, rng.choice([me, me, peer]), rng.choice((1, 100, 500, 10**6)), ALGO, fv, lv, lx)
        if kind == "optin" and s.assets:
            return Transaction(T.OPTIN, me, None, 0, rng.choice(sorted(s.assets)), fv, lv, lx)
        if kind == "burn" and created:
            return Transaction(T.BURN, me, None, 0, rng.choice(created), fv, lv, lx)
        if kind == "manage" and managed:
            tau = rng.choice(managed)
            ty = rng.choice((T.RVK, T.FRZ, T.UNFRZ, T.DELEGATE))
            target = rng.choice(self.peers + [me])
            if ty is T.RVK:
                return Transaction(ty, target, rng.choice(self.peers + [me]), rng.choice((1, 5, 50)), tau, fv, lv, lx)
            if ty is T.DELEGATE:
                return Transaction(ty, me, target, 0, tau, fv, lv, lx)
            return Transaction(ty, target, None, 0, tau, fv, lv, lx)
        if kind == "fund-script" and self.scripts:
            acct = rng.choice(self.scripts).address
            return Transaction(T.PAY, me, acct, rng.choice((100_000, 500_000, 1_000_000)), ALGO, fv, lv, lx)
        if kind == "script" and self.scripts:
            acct = rng.choice(self.scripts).address
            ty = rng.choice((T.PAY, T.CLOSE, T.CLOSE, T.OPTIN, T.GEN))
            tau = rng.choice(sorted(s.assets)) if (s.assets and ty is T.OPTIN) else ALGO
            return Transaction(ty, acct, peer, amount if ty is T.PAY else 1000, tau, fv, lv, lx)
        return Transaction(T.PAY, me, peer, amount, ALGO, fv, lv, lx)
