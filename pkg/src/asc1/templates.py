"""Contract templates.

Each builder returns a ``ContractBundle``: the scripts, an optional setup
group that funds them, and predicates describing the transactions that let
each party collect the funds. Amounts are micro-Algos; ``ALGO_UNIT`` is one
Algo.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

from .expr import (FALSE, Const, Expr, H, TxPos, TxLen, arg,
                   conj, disj, eq, ite, op, tx, txid, versig)
from .ledger import ALGO, Address, Multisig, Script, Transaction, single
from .txtype import TxType

ALGO_UNIT = 1_000_000

Party = Union[Address, bytes]
ClaimSet = Callable[[Transaction], bool]


class InvalidParams(ValueError):
    pass


class CyclicWithoutSigners(ValueError):
    pass


@dataclass(frozen=True)
class ContractBundle:
    kind: str
    scripts: Mapping[str, Expr]
    setup_group: Optional[tuple[Transaction, ...]] = None
    claim_sets: Mapping[str, ClaimSet] = field(default_factory=dict)
    params: Mapping[str, object] = field(default_factory=dict)
    names: Mapping[str, bytes] = field(default_factory=dict)

    def address(self, name: str | None = None) -> Script:
        if name is None:
            name = next(iter(self.scripts))
        return Script.of(self.scripts[name])

    def claims(self, t: Transaction) -> list[str]:
        return [k for k, pred in self.claim_sets.items() if pred(t)]


def as_address(p: Party) -> Address:
    if isinstance(p, Address):
        return p
    if isinstance(p, (bytes, bytearray)) and len(p) == 32:
        return single(bytes(p))
    raise InvalidParams(f"not a party: {p!r}")


def as_key(p: Party) -> bytes:
    if isinstance(p, Multisig) and len(p.keys) == 1:
        return p.keys[0]
    if isinstance(p, (bytes, bytearray)) and len(p) == 32:
        return bytes(p)
    raise InvalidParams(f"expected a public key or single-key address, got {p!r}")


def _addr_const(a: Address) -> Const:
    return Const(a.encoding)


def _nat(name: str, v) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < 2**64:
        raise InvalidParams(f"{name} must be a u64, got {v!r}")
    return v


def _hash(name: str, v) -> bytes:
    if not isinstance(v, (bytes, bytearray)) or len(v) != 32:
        raise InvalidParams(f"{name} must be a 32-byte hash")
    return bytes(v)


def closes(snd: Address, rcv: Address) -> ClaimSet:
    """Transactions closing ``snd``'s Algos into ``rcv``."""
    def pred(t: Transaction) -> bool:
        return t.type is TxType.CLOSE and t.snd == snd and t.rcv == rcv and t.asst == ALGO
    return pred


def pays(snd: Address, rcv: Address, asst: int = ALGO) -> ClaimSet:
    def pred(t: Transaction) -> bool:
        return t.type is TxType.PAY and t.snd == snd and t.rcv == rcv and t.asst == asst
    return pred


CLOSE_ALGO = (eq(tx("type"), TxType.CLOSE), eq(tx("asst"), ALGO))


# -- basic contracts ---------------------------------------------------

def htlc_script(A: Address, B: Address, h: bytes, tmax: int) -> Expr:
    return conj(*CLOSE_ALGO, disj(
        conj(eq(tx("rcv"), _addr_const(A)), eq(H(arg(0)), h)),
        conj(eq(tx("rcv"), _addr_const(B)), op(">=", tx("fv"), tmax)),
    ))


def htlc(A: Party, B: Party, h: bytes, tmax: int) -> ContractBundle:
    A, B = as_address(A), as_address(B)
    h, tmax = _hash("h", h), _nat("tmax", tmax)
    e = htlc_script(A, B, h, tmax)
    me = Script.of(e)
    return ContractBundle(
        "htlc", {"htlc": e}, None,
        {"A": closes(me, A), "B": closes(me, B)},
        {"A": A, "B": B, "h": h, "tmax": tmax},
        {"A": A.encoding, "B": B.encoding, "h": h},
    )


def oracle(A: Party, B: Party, o: Party, tmax: int) -> ContractBundle:
    A, B = as_address(A), as_address(B)
    ko, tmax = as_key(o), _nat("tmax", tmax)
    e = conj(*CLOSE_ALGO, disj(
        conj(op(">", tx("fv"), tmax), eq(tx("rcv"), _addr_const(A))),
        conj(eq(arg(0), 0), versig(arg(0), arg(1), ko), eq(tx("rcv"), _addr_const(A))),
        conj(eq(arg(0), 1), versig(arg(0), arg(1), ko), eq(tx("rcv"), _addr_const(B))),
    ))
    me = Script.of(e)
    return ContractBundle(
        "oracle", {"oracle": e}, None,
        {"A": closes(me, A), "B": closes(me, B)},
        {"A": A, "B": B, "o": ko, "tmax": tmax},
        {"A": A.encoding, "B": B.encoding, "o": ko},
    )


# Oracle outcomes are the one-byte strings 0x00 and 0x01.
ORACLE_ZERO = b"\x00"
ORACLE_ONE = b"\x01"


def lottery_script(A: Address, B: Address, hA: bytes, hB: bytes) -> Expr:
    return conj(*CLOSE_ALGO, eq(H(arg(0)), hA), eq(H(arg(1)), hB),
                ite(eq(op("%", op("+", arg(0), arg(1)), 2), 0),
                    eq(tx("rcv"), _addr_const(A)),
                    eq(tx("rcv"), _addr_const(B))))


def lottery(A: Party, B: Party, hA: bytes, hB: bytes, tmax: int,
            bet: int = ALGO_UNIT, collateral: int = 2 * ALGO_UNIT,
            fv: int = 0, lv: Optional[int] = None) -> ContractBundle:
    A, B = as_address(A), as_address(B)
    hA, hB = _hash("hA", hA), _hash("hB", hB)
    if hA == hB:
        raise InvalidParams("the two secret hashes must differ")
    tmax = _nat("tmax", tmax)
    lv = fv + 10 if lv is None else lv
    lot = lottery_script(A, B, hA, hB)
    hta = htlc_script(A, B, hA, tmax)
    htb = htlc_script(B, A, hB, tmax)
    L, HA, HB = Script.of(lot), Script.of(hta), Script.of(htb)
    setup = (
        Transaction(TxType.PAY, A, HA, collateral, ALGO, fv, lv),
        Transaction(TxType.PAY, B, HB, collateral, ALGO, fv, lv),
        Transaction(TxType.PAY, A, L, bet, ALGO, fv, lv),
        Transaction(TxType.PAY, B, L, bet, ALGO, fv, lv),
    )
    claims = {
        "secr:A": closes(HA, A), "tout:A": closes(HA, B),
        "secr:B": closes(HB, B), "tout:B": closes(HB, A),
        "lott:A": closes(L, A), "lott:B": closes(L, B),
    }
    return ContractBundle(
        "lottery", {"lottery": lot, "htlc_A": hta, "htlc_B": htb}, setup, claims,
        {"A": A, "B": B, "hA": hA, "hB": hB, "tmax": tmax, "bet": bet, "collateral": collateral},
        {"A": A.encoding, "B": B.encoding, "hA": hA, "hB": hB},
    )


def lottery_winner(sA: bytes, sB: bytes) -> str:
    """Who the lottery script pays for secrets ``sA`` and ``sB``."""
    total = int.from_bytes(sA, "big") + int.from_bytes(sB, "big")
    return "A" if total % 2 == 0 else "B"


def periodic_payment(A: Party, v: int, p: int, d: int, n: int) -> ContractBundle:
    A = as_address(A)
    v, p, d, n = (_nat(k, x) for k, x in (("v", v), ("p", p), ("d", d), ("n", n)))
    if p == 0:
        raise InvalidParams("period must be positive")
    e = conj(eq(tx("type"), TxType.PAY), eq(tx("val"), v), eq(tx("asst"), ALGO),
             eq(tx("rcv"), _addr_const(A)), eq(op("%", tx("fv"), p), 0),
             eq(tx("lv"), op("+", tx("fv"), d)), eq(tx("lx"), n))
    me = Script.of(e)
    return ContractBundle(
        "periodic-payment", {"pp": e}, None, {"withdraw": pays(me, A)},
        {"A": A, "v": v, "p": p, "d": d, "n": n}, {"A": A.encoding},
    )


# -- state machines -------------------------------------------------------

@dataclass(frozen=True)
class Transition:
    """An edge of the machine. ``target`` is a state name or an external
    address. ``guard`` lists extra conjuncts; the receiver check is placed
    after the first ``pin_at`` of them (default: after all)."""

    target: Union[str, Address]
    guard: tuple[Expr, ...] = ()
    pin_at: Optional[int] = None


@dataclass(frozen=True)
class State:
    name: str
    transitions: tuple[Transition, ...] = ()


def fsm_encode(states: Sequence[State], signers: Optional[Sequence[bytes]] = None) -> dict[str, Expr]:
    """One script per state. An edge to a state further down the machine
    pins ``tx.rcv`` to that state's address; an edge that closes a cycle
    takes the next address from ``arg(0)`` and requires every signer to have
    signed it (signature k in ``arg(k+1)``)."""
    by_name = {s.name: s for s in states}
    if len(by_name) != len(states):
        raise InvalidParams("duplicate state names")
    scripts: dict[str, Expr] = {}
    on_stack: set[str] = set()

    def clause(tr: Transition, target_rcv: Expr, prefix: Sequence[Expr]) -> list[Expr]:
        g = list(tr.guard)
        at = len(g) if tr.pin_at is None else tr.pin_at
        return list(prefix) + g[:at] + [eq(tx("rcv"), target_rcv)] + g[at:]

    def visit(name: str) -> None:
        on_stack.add(name)
        clauses: list[list[Expr]] = []
        for tr in by_name[name].transitions:
            tgt = tr.target
            if isinstance(tgt, Address):
                clauses.append(clause(tr, _addr_const(tgt), ()))
                continue
            if tgt not in by_name:
                raise InvalidParams(f"unknown state {tgt!r}")
            if tgt in on_stack:
                if not signers:
                    raise CyclicWithoutSigners(f"cycle through {tgt!r} needs signers")
                sigs = [versig(arg(0), arg(k + 1), key) for k, key in enumerate(signers)]
                clauses.append(sigs + [eq(tx("rcv"), arg(0))] + list(tr.guard))
                continue
            if tgt not in scripts:
                visit(tgt)
            clauses.append(clause(tr, _addr_const(Script.of(scripts[tgt])), ()))
        on_stack.discard(name)
        if not clauses:
            scripts[name] = FALSE
        elif len(clauses) == 1:
            scripts[name] = conj(*CLOSE_ALGO, *clauses[0])
        else:
            scripts[name] = conj(*CLOSE_ALGO, disj(*(conj(*c) for c in clauses)))

    for s in states:
        if s.name not in scripts:
            visit(s.name)
    return scripts


def two_phase_machine(A: bytes, B: bytes, A1: bytes, B1: bytes, c: Address,
                      p: int, delta_max: int) -> tuple[list[State], list[bytes]]:
    window = lambda k: eq(op("%", tx("fv"), op("*", 4, p)), k)  # noqa: E731
    lv_rule = eq(tx("lv"), op("+", tx("fv"), delta_max))
    p1 = State("P1", (Transition("P2", (versig(txid(), arg(0), A), window(0), lv_rule), pin_at=1),))
    p2 = State("P2", (
        Transition(c, (versig(txid(), arg(0), B),)),
        Transition("P1", (window(op("*", 2, p)), lv_rule)),
    ))
    return [p1, p2], [A1, B1]


def two_phase(A: Party, B: Party, A1: Party, B1: Party, c: Party, p: int,
              delta_max: int = 1000) -> ContractBundle:
    kA, kB, kA1, kB1 = (as_key(x) for x in (A, B, A1, B1))
    c = as_address(c)
    p, delta_max = _nat("p", p), _nat("delta_max", delta_max)
    if p < delta_max:
        raise InvalidParams("the frame length p must be at least delta_max")
    window = lambda k: eq(op("%", tx("fv"), op("*", 4, p)), k)  # noqa: E731
    lv_rule = eq(tx("lv"), op("+", tx("fv"), delta_max))
    P2 = conj(*CLOSE_ALGO, disj(
        conj(versig(txid(), arg(0), kB), eq(tx("rcv"), _addr_const(c))),
        conj(versig(arg(0), arg(1), kA1), versig(arg(0), arg(2), kB1),
             eq(tx("rcv"), arg(0)), window(op("*", 2, p)), lv_rule),
    ))
    a2 = Script.of(P2)
    P1 = conj(*CLOSE_ALGO, versig(txid(), arg(0), kA), eq(tx("rcv"), _addr_const(a2)),
              window(0), lv_rule)
    a1 = Script.of(P1)
    return ContractBundle(
        "two-phase", {"P1": P1, "P2": P2}, None,
        {"authorize": closes(a1, a2), "withdraw": closes(a2, c), "reset": closes(a2, a1)},
        {"A": kA, "B": kB, "A1": kA1, "B1": kB1, "c": c, "p": p, "delta_max": delta_max},
        {"A": kA, "B": kB, "A1": kA1, "B1": kB1, "c": c.encoding},
    )


# -- additional contracts -------------------------------------------------

def mutual_htlc(A: Party, B: Party, hA: bytes, hB: bytes, tmax: int,
                deposit: int = ALGO_UNIT, fv: int = 0, lv: Optional[int] = None) -> ContractBundle:
    A, B = as_address(A), as_address(B)
    hA, hB, tmax = _hash("hA", hA), _hash("hB", hB), _nat("tmax", tmax)
    lv = fv + 10 if lv is None else lv
    hta, htb = htlc_script(A, B, hA, tmax), htlc_script(B, A, hB, tmax)
    HA, HB = Script.of(hta), Script.of(htb)
    setup = (Transaction(TxType.PAY, A, HA, deposit, ALGO, fv, lv),
             Transaction(TxType.PAY, B, HB, deposit, ALGO, fv, lv))
    claims = {
        "reveal:A": closes(HA, A), "reveal:B": closes(HB, B),
        # the second family: the counterparty collects after the deadline
        "timeout:A": closes(HA, B), "timeout:B": closes(HB, A),
    }
    return ContractBundle(
        "mutual-htlc", {"htlc_A": hta, "htlc_B": htb}, setup, claims,
        {"A": A, "B": B, "hA": hA, "hB": hB, "tmax": tmax, "deposit": deposit},
        {"A": A.encoding, "B": B.encoding, "hA": hA, "hB": hB},
    )


def zero_collateral_lottery(A: Party, B: Party, hA: bytes, hB: bytes, t0: int, t1: int,
                            bet: int = ALGO_UNIT, fv: int = 0,
                            lv: Optional[int] = None) -> ContractBundle:
    A, B = as_address(A), as_address(B)
    hA, hB = _hash("hA", hA), _hash("hB", hB)
    if hA == hB:
        raise InvalidParams("the two secret hashes must differ")
    t0, t1 = _nat("t0", t0), _nat("t1", t1)
    lv = fv + 10 if lv is None else lv
    zdl2 = conj(*CLOSE_ALGO, eq(H(arg(0)), hA), disj(
        conj(eq(H(arg(1)), hB),
             ite(eq(op("%", op("+", arg(0), arg(1)), 2), 0),
                 eq(tx("rcv"), _addr_const(A)), eq(tx("rcv"), _addr_const(B)))),
        conj(eq(tx("rcv"), _addr_const(A)), op(">=", tx("fv"), op("+", t0, t1))),
    ))
    Z2 = Script.of(zdl2)
    zdl = conj(*CLOSE_ALGO, disj(
        conj(eq(tx("rcv"), _addr_const(Z2)), eq(H(arg(0)), hA)),
        conj(eq(tx("rcv"), _addr_const(B)), op(">=", tx("fv"), t0)),
    ))
    Z = Script.of(zdl)
    setup = (Transaction(TxType.PAY, A, Z, bet, ALGO, fv, lv),
             Transaction(TxType.PAY, B, Z, bet, ALGO, fv, lv))
    claims = {"reveal:A": closes(Z, Z2), "timeout:B": closes(Z, B),
              "win:A": closes(Z2, A), "win:B": closes(Z2, B)}
    return ContractBundle(
        "zero-collateral-lottery", {"zdl": zdl, "zdl2": zdl2}, setup, claims,
        {"A": A, "B": B, "hA": hA, "hB": hB, "t0": t0, "t1": t1, "bet": bet},
        {"A": A.encoding, "B": B.encoding, "hA": hA, "hB": hB},
    )


def escrow(A: Party, B: Party, C: Party, v: int) -> ContractBundle:
    kA, kB, kC = as_key(A), as_key(B), as_key(C)
    A, B = as_address(A), as_address(B)
    v = _nat("v", v)
    resolve = conj(eq(tx("type"), TxType.PAY), eq(tx("asst"), ALGO), versig(arg(0), arg(1), kC),
                   disj(conj(eq(tx("rcv"), _addr_const(A)), eq(tx("val"), arg(0))),
                        conj(eq(tx("rcv"), _addr_const(B)), eq(tx("val"), op("-", v, arg(0))))))
    R = Script.of(resolve)
    esc = conj(*CLOSE_ALGO, disj(
        conj(versig(txid(), arg(1), kA), disj(eq(tx("rcv"), _addr_const(B)), eq(tx("rcv"), _addr_const(R)))),
        conj(versig(txid(), arg(1), kB), disj(eq(tx("rcv"), _addr_const(A)), eq(tx("rcv"), _addr_const(R)))),
    ))
    E = Script.of(esc)
    claims = {"pay:B": closes(E, B), "refund:A": closes(E, A), "dispute": closes(E, R),
              "resolve:A": pays(R, A), "resolve:B": pays(R, B)}
    return ContractBundle(
        "escrow", {"escrow": esc, "resolve": resolve}, None, claims,
        {"A": A, "B": B, "C": kC, "v": v},
        {"A": A.encoding, "B": B.encoding, "kA": kA, "kB": kB, "kC": kC},
    )


def limit_order(A: Party, asset: int, rho_min: int, v_min: int, tmax: int) -> ContractBundle:
    A = as_address(A)
    asset, rho_min, v_min, tmax = (_nat(k, x) for k, x in
                                   (("asset", asset), ("rho_min", rho_min), ("v_min", v_min), ("tmax", tmax)))
    if asset == ALGO:
        raise InvalidParams("the traded asset must not be Algo")
    e = disj(
        conj(eq(TxLen(), 2), eq(TxPos(), 0),
             eq(tx("type", 0), TxType.PAY), eq(tx("asst", 0), ALGO), eq(tx("rcv", 0), tx("snd", 1)),
             eq(tx("type", 1), TxType.PAY), eq(tx("asst", 1), asset), eq(tx("rcv", 1), _addr_const(A)),
             op(">=", op("/", tx("val", 1), tx("val", 0)), rho_min), op(">=", tx("val", 0), v_min)),
        conj(eq(TxLen(), 1), op(">", tx("fv"), tmax),
             eq(tx("type"), TxType.CLOSE), eq(tx("asst"), ALGO), eq(tx("rcv", 0), _addr_const(A))),
    )
    me = Script.of(e)

    def fill(t: Transaction) -> bool:
        return t.type is TxType.PAY and t.snd == me and t.asst == ALGO

    return ContractBundle(
        "limit-order", {"order": e}, None, {"fill": fill, "close": closes(me, A)},
        {"A": A, "asset": asset, "rho_min": rho_min, "v_min": v_min, "tmax": tmax},
        {"A": A.encoding},
    )


def split(A: Party, B0: Party, B1: Party, rho: int, v_min: int, tmax: int) -> ContractBundle:
    A, B0, B1 = as_address(A), as_address(B0), as_address(B1)
    rho, v_min, tmax = _nat("rho", rho), _nat("v_min", v_min), _nat("tmax", tmax)
    e = disj(
        conj(eq(TxLen(), 2), eq(tx("snd", 0), tx("snd", 1)),
             eq(tx("type", 0), TxType.PAY), eq(tx("asst", 0), ALGO), eq(tx("rcv", 0), _addr_const(B0)),
             eq(tx("type", 1), TxType.PAY), eq(tx("asst", 1), ALGO), eq(tx("rcv", 1), _addr_const(B1)),
             eq(tx("val", 1), op("*", rho, tx("val", 0))), op(">=", tx("val", 0), v_min)),
        conj(eq(TxLen(), 1), op(">", tx("fv"), tmax),
             eq(tx("type"), TxType.CLOSE), eq(tx("asst"), ALGO), eq(tx("rcv", 0), _addr_const(A))),
    )
    me = Script.of(e)
    return ContractBundle(
        "split", {"split": e}, None,
        {"split:B0": pays(me, B0), "split:B1": pays(me, B1), "close": closes(me, A)},
        {"A": A, "B0": B0, "B1": B1, "rho": rho, "v_min": v_min, "tmax": tmax},
        {"A": A.encoding, "B0": B0.encoding, "B1": B1.encoding},
    )


BUILDERS: dict[str, Callable[..., ContractBundle]] = {
    "oracle": oracle,
    "htlc": htlc,
    "lottery": lottery,
    "periodic-payment": periodic_payment,
    "two-phase": two_phase,
    "mutual-htlc": mutual_htlc,
    "zero-collateral-lottery": zero_collateral_lottery,
    "escrow": escrow,
    "limit-order": limit_order,
    "split": split,
}


def build_template(kind: str, params: Mapping[str, object]) -> ContractBundle:
    try:
        builder = BUILDERS[kind]
    except KeyError:
        raise InvalidParams(f"unknown template {kind!r}; known: {sorted(BUILDERS)}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise InvalidParams(f"{kind}: {exc}") from None
