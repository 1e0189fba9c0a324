"""Randomized runs used by the property suites and the ``fuzz`` command."""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Iterable, Optional

from .ledger import Params
from .semantics import AuthGroup, NetState, StepError, authorize_group, net_step
from .sim import (PROPERTIES, RandomAdversary, Run, User, Verdict, fund,
                  genesis_state, simulate)
from .strategies import FuzzUser, ScriptAccount
from .templates import ALGO_UNIT, htlc, periodic_payment

FUZZ_DELTA_MAX = 16
USER_FUNDS = 10**12


@dataclass(frozen=True)
class FuzzConfig:
    n_users: int = 4
    max_labels: int = 200
    max_rounds: int = 40
    delta_max: int = FUZZ_DELTA_MAX


def _users(n: int) -> list[User]:
    return [User.from_seed(f"u{i}", f"fuzz:u{i}") for i in range(n)]


def fuzz_run(seed: int, cfg: FuzzConfig = FuzzConfig()) -> Run:
    """One random run. The initial state funds every user and two contract
    accounts: a close-guarded HTLC and a periodic payment."""
    rng = random.Random(f"fuzz:{seed}")
    g = User.from_seed("genesis", "fuzz:genesis")
    users = _users(cfg.n_users)
    fresh = [User.from_seed(f"fresh{i}", f"fuzz:fresh{i}").address for i in range(2)]
    n = genesis_state(g, params=Params(delta_max=cfg.delta_max))
    n, _ = fund(g, users, USER_FUNDS, n)

    secret = rng.randbytes(16)
    h = htlc(users[0].address, users[1].address, hashlib.sha256(secret).digest(),
             rng.randint(5, cfg.max_rounds))
    pp = periodic_payment(users[2 % cfg.n_users].address, 1000, 5, 3, 7)
    n, _ = fund(g, [h.address(), pp.address()], ALGO_UNIT, n)
    scripts = [ScriptAccount(h.address(), [(secret,), (b"wrong",), ()]),
               ScriptAccount(pp.address(), [(), (b"x",)])]

    peers = [u.address for u in users] + fresh + [s.address for s in scripts]
    strategies = [FuzzUser(u, peers, scripts, p_act=rng.choice((0.3, 0.6, 0.9)),
                           p_dup=rng.choice((0.05, 0.15, 0.3))) for u in users]
    adversary = RandomAdversary(rng.choice((0.1, 0.3, 0.5)))
    return simulate(n, strategies, adversary, max_rounds=cfg.max_rounds, seed=f"fuzz:{seed}",
                    delta=rng.choice((0, 1, 2)), max_labels=cfg.max_labels)


def fuzz_runs(seeds: Iterable[int], cfg: FuzzConfig = FuzzConfig()) -> list[Run]:
    return [fuzz_run(s, cfg) for s in seeds]


def check_all(run: Run, properties: Iterable[str] = tuple(PROPERTIES)) -> dict[str, Verdict]:
    return {p: PROPERTIES[p](run) for p in properties}


# -- alternative witnesses ------------------------------------------------

def alternative_witnesses(n: NetState, lab: AuthGroup) -> Optional[AuthGroup]:
    """A different, still valid witness assignment for ``lab`` in ``n``:
    each sequence gets one more already-known witness appended (kept only if
    the group remains authorized). None if nothing could be changed."""
    if not n.knowledge:
        return None
    extra = min(n.knowledge)
    seqs = list(lab.witnesses)
    changed = False
    for i in range(len(seqs)):
        trial = seqs[:i] + [seqs[i] + (extra,)] + seqs[i + 1:]
        if authorize_group(n.chain.assets, trial, lab.group):
            seqs = trial
            changed = True
    if not changed:
        return None
    return AuthGroup(tuple(seqs), lab.group)


def witness_substitution(run: Run, i: int) -> Optional[tuple[bytes, bytes]]:
    """Chain digests after label ``i`` with its original and with an
    alternative witness assignment; None when no alternative exists."""
    lab = run.labels[i]
    if not isinstance(lab, AuthGroup):
        return None
    before = run.states[i]
    alt = alternative_witnesses(before, lab)
    if alt is None:
        return None
    try:
        a = net_step(before, lab)
        b = net_step(before, alt)
    except StepError:
        return None
    if a.knowledge != b.knowledge:
        return a.chain.digest, b"knowledge differs"
    return a.chain.digest, b.chain.digest
