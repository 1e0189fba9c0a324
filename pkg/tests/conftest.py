"""Shared fixtures and small helpers for building worlds by hand."""
from __future__ import annotations

import pytest

from asc1.ledger import ALGO, Transaction
from asc1.semantics import TICK, StepError, net_step
from asc1.sim import User, expand, fund, genesis_state, signed
from asc1.templates import ALGO_UNIT
from asc1.txtype import TxType


class World:
    """A genesis user ``G`` plus named users, each funded with ``funds``."""

    def __init__(self, *names: str, funds: int = 10 * ALGO_UNIT, **params) -> None:
        self.G = User.from_seed("G", "test:G")
        self.users = {n: User.from_seed(n, f"test:{n}") for n in names}
        n = genesis_state(self.G, **params)
        self.state, _ = fund(self.G, list(self.users.values()), funds, n) if names else (n, [])

    def __getitem__(self, name: str) -> User:
        return self.G if name == "G" else self.users[name]

    def addr(self, name: str):
        return self[name].address

    @property
    def chain(self):
        return self.state.chain

    @property
    def round(self) -> int:
        return self.state.chain.round

    def balance(self, a, asset: int = ALGO) -> int:
        a = self.addr(a) if isinstance(a, str) else a
        bal = self.chain.accounts.get(a)
        return 0 if bal is None else bal.get(asset, 0)

    def submit(self, action) -> None:
        """Apply an action; raises StepError and leaves the world untouched."""
        n = self.state
        for lab in expand(action, n.knowledge):
            n = net_step(n, lab)
        self.state = n

    def attempt(self, action):
        """Apply an action and return the error code, or None on success."""
        try:
            self.submit(action)
        except StepError as exc:
            return exc.code.value
        return None

    def pay(self, snd: str, rcv, val: int, asst: int = ALGO, lx: int = 0):
        rcv = self.addr(rcv) if isinstance(rcv, str) else rcv
        r = self.round
        t = Transaction(TxType.PAY, self.addr(snd), rcv, val, asst, r, r + 10, lx)
        return self.attempt(signed([t], [[self[snd]]]))

    def tick(self, k: int = 1) -> None:
        for _ in range(k):
            self.state = net_step(self.state, TICK)

    def tick_to(self, r: int) -> None:
        while self.round < r:
            self.tick()


@pytest.fixture
def world():
    return World


# -- acceptance report ----------------------------------------------------

_RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def record(request):
    """``record(n, title, ok, detail)`` prints and keeps one criterion line."""
    store = request.config.stash.setdefault(_RESULTS, {})

    def rec(n: int, title: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {n} ({title}): {detail}"
        store[n] = line
        print(line)
    return rec


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_RESULTS, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for n in sorted(store):
            terminalreporter.write_line(store[n])
