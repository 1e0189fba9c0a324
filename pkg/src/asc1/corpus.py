"""Random inputs for differential testing: typed script ASTs inside the
compilable fragment, random evaluation contexts, and near-valid contexts
for every contract template."""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .codec import versig_message
from .expr import (Arg, BinOp, Const, Expr, Hash, Not, TxField, TxId,
                   TxLen, TxPos, Versig, depth)
from .ledger import ALGO, Address, Script, Transaction
from .sim import User
from .teal import Unsupported, Untranslatable, compile_script, translate_tx
from .templates import (ALGO_UNIT, ContractBundle, escrow, htlc, limit_order,
                        lottery, lottery_winner, mutual_htlc, oracle,
                        periodic_payment, split, two_phase,
                        zero_collateral_lottery, ORACLE_ONE, ORACLE_ZERO)
from .txtype import TxType

MAX_DEPTH = 8
U, B = "uint", "bytes"

Assets = dict[int, tuple[Address, Address]]


@dataclass(frozen=True)
class Context:
    group: tuple[Transaction, ...]
    index: int
    args: tuple[bytes, ...] = ()
    assets: tuple = ()

    @property
    def asset_map(self) -> Assets:
        return dict(self.assets)

    def translatable(self) -> bool:
        try:
            for t in self.group:
                translate_tx(t, self.asset_map)
        except Untranslatable:
            return False
        return True


@dataclass
class Pool:
    """Shared values, so random scripts and contexts sometimes line up."""

    users: list[User]
    scripts: list[Script]
    ints: list[int]
    blobs: list[bytes]
    assets: Assets = field(default_factory=dict)

    @property
    def addresses(self) -> list[Address]:
        return [u.address for u in self.users] + list(self.scripts)


def default_pool(seed: object = 0) -> Pool:
    rng = random.Random(f"{seed}:pool")
    users = [User.from_seed(n, f"corpus:{n}") for n in ("A", "B", "C")]
    scripts = [Script(hashlib.sha256(b"corpus-script%d" % i).digest()) for i in range(2)]
    ints = [0, 1, 2, 3, 5, 7, 10, 100, 255, 1000, ALGO_UNIT, 2**32, 2**64 - 1]
    blobs = [b"", b"\x00", b"\x01", b"\x02", b"secret", (7).to_bytes(8, "big"),
             rng.randbytes(32), rng.randbytes(64), rng.randbytes(65)]
    blobs += [t.tag_bytes for t in (TxType.PAY, TxType.CLOSE, TxType.OPTIN)]
    blobs += [u.address.encoding for u in users[:2]]
    blobs.append(hashlib.sha256(b"secret").digest())
    assets = {1: (users[0].address, users[0].address), 2: (users[1].address, users[0].address)}
    return Pool(users, scripts, ints, blobs, assets)


# -- random scripts -------------------------------------------------------

_ARITH = ("+", "-", "*", "/", "%")
_CMP = ("<", "<=", "=", ">=", ">")
_UFIELDS = ("val", "asst", "fv", "lv", "lx")
_BFIELDS = ("type", "snd", "rcv")


class ScriptGen:
    """Typed random ASTs. ``gen(U, d)`` yields an integer-valued script of
    depth at most ``d`` (whenever it evaluates), ``gen(B, d)`` a
    byte-valued one."""

    def __init__(self, rng: random.Random, pool: Pool, p_leaf: float = 0.3) -> None:
        self.rng, self.pool, self.p_leaf = rng, pool, p_leaf

    def index(self, d: int) -> Expr:
        r = self.rng.random()
        if r < 0.45 or d <= 1:
            return Const(self.rng.choice((0, 0, 1, 1, 2, 3)))
        if r < 0.8:
            return TxPos()
        return self.gen(U, min(d - 1, 2))

    def leaf(self, ty: str) -> Expr:
        rng, p = self.rng, self.pool
        if ty == U:
            return rng.choice((
                lambda: Const(rng.choice(p.ints)), lambda: Const(rng.choice(p.ints)),
                TxLen, TxPos,
                lambda: TxField(Const(rng.choice((0, 1))), rng.choice(_UFIELDS)),
                lambda: TxField(TxPos(), rng.choice(_UFIELDS)),
            ))()
        return rng.choice((
            lambda: Const(rng.choice(p.blobs)), lambda: Const(rng.choice(p.addresses).encoding),
            lambda: Arg(rng.choice((0, 0, 1, 2, 3))),
            lambda: TxField(TxPos(), rng.choice(_BFIELDS)),
            lambda: TxField(Const(rng.choice((0, 1))), rng.choice(_BFIELDS)),
            lambda: TxId(Const(rng.choice((0, 1)))),
        ))()

    def gen(self, ty: str, d: int) -> Expr:
        rng = self.rng
        if d <= 1 or rng.random() < self.p_leaf:
            return self.leaf(ty)
        k = d - 1
        either = lambda: self.gen(rng.choice((U, U, B)), k)  # noqa: E731
        if ty == U:
            choice = rng.randrange(9)
            if choice == 0:
                return BinOp(rng.choice(_ARITH), self.gen(U, k), self.gen(U, k))
            if choice in (1, 2):
                return BinOp(rng.choice(_CMP), either(), either())
            if choice in (3, 4):
                return BinOp(rng.choice(("and", "or")), self.gen(U, k), self.gen(U, k))
            if choice == 5:
                return Not(self.gen(U, k))
            if choice == 6:
                return Versig(either(), self.gen(B, k), self.gen(B, k))
            if choice == 7:
                return TxField(self.index(k), rng.choice(_UFIELDS))
            return BinOp("=", self.gen(B, k), self.gen(B, k))
        choice = rng.randrange(5)
        if choice == 0:
            a, b = self.gen(B, k), either()
            return BinOp(rng.choice(_ARITH), *((a, b) if rng.random() < 0.5 else (b, a)))
        if choice == 1:
            return Hash(either())
        if choice == 2:
            return TxField(self.index(k), rng.choice(_BFIELDS))
        if choice == 3:
            return TxId(self.index(k))
        return self.leaf(B)

    def script(self, max_depth: int = MAX_DEPTH) -> Expr:
        """A compilable random script; occasionally its value may be bytes,
        or an ``and`` whose result type depends on the run."""
        while True:
            r = self.rng.random()
            d = self.rng.randint(2, max_depth)
            if r < 0.1:
                e = BinOp("and", self.gen(U, d - 1), self.gen(B, d - 1))
            elif r < 0.15:
                e = self.gen(B, d)
            else:
                e = self.gen(U, d)
            if depth(e) > max_depth:
                continue
            try:
                compile_script(e)
            except Unsupported:
                continue
            return e


def random_scripts(n: int, seed: object = 0, pool: Optional[Pool] = None) -> list[Expr]:
    pool = pool or default_pool(seed)
    g = ScriptGen(random.Random(f"{seed}:scripts"), pool)
    return [g.script() for _ in range(n)]


# -- random contexts ------------------------------------------------------

def random_tx(rng: random.Random, pool: Pool, snd: Optional[Address] = None) -> Transaction:
    addrs = pool.addresses
    ty = rng.choice(list(TxType))
    snd = snd if snd is not None else rng.choice(addrs)
    rcv = rng.choice(addrs)
    managed = ty in (TxType.DELEGATE, TxType.RVK, TxType.FRZ, TxType.UNFRZ)
    asst = rng.choice((1, 2)) if managed else rng.choice((ALGO, ALGO, 1, 2))
    val = rng.choice(pool.ints[:-1] + [rng.randrange(2**64)])
    fv = rng.choice((0, 1, 5, 9, 10, 11, 100))
    lv = fv + rng.choice((0, 1, 10))
    lx = rng.choice((0, 0, 1, 7))
    t = Transaction(ty, snd, rcv, val, asst, fv, lv, lx)
    if ty is TxType.PAY and t.asst != ALGO and t.snd == t.rcv and t.val == 0:
        t = t.replace(val=1)
    return t


def random_args(rng: random.Random, pool: Pool) -> tuple[bytes, ...]:
    def one() -> bytes:
        r = rng.random()
        if r < 0.7:
            return rng.choice(pool.blobs)
        return rng.randbytes(rng.choice((0, 1, 8, 32, 64)))
    return tuple(one() for _ in range(rng.choice((0, 1, 2, 2, 3, 4))))


def random_context(rng: random.Random, pool: Pool) -> Context:
    n = rng.choice((1, 1, 2, 2, 3))
    group = tuple(random_tx(rng, pool) for _ in range(n))
    return Context(group, rng.randrange(n), random_args(rng, pool), tuple(sorted(pool.assets.items())))


def random_contexts(n: int, seed: object = 0, pool: Optional[Pool] = None) -> list[Context]:
    pool = pool or default_pool(seed)
    rng = random.Random(f"{seed}:contexts")
    return [random_context(rng, pool) for _ in range(n)]


# -- template contexts ----------------------------------------------------

@dataclass
class TemplateCase:
    """One template instance: its scripts and accepting contexts for them."""

    kind: str
    bundle: ContractBundle
    valid: list[tuple[str, Context]]


def _ctx(group, index=0, args=(), assets: Assets | None = None) -> Context:
    return Context(tuple(group), index, tuple(args), tuple(sorted((assets or {}).items())))


def template_cases(seed: object = 0) -> list[TemplateCase]:
    """All ten templates with fixed parties and accepting contexts."""
    rng = random.Random(f"{seed}:templates")
    A, Bu, C, O = (User.from_seed(n, f"tmpl:{n}") for n in ("A", "B", "C", "O"))
    a, b, c = A.address, Bu.address, C.address
    T = TxType
    cases = []

    def close(snd, rcv, fv=0, lv=None):
        return Transaction(T.CLOSE, snd, rcv, 0, ALGO, fv, fv + 10 if lv is None else lv)

    # oracle
    tmax = 50
    bo = oracle(a, b, O.pk, tmax)
    me = bo.address()
    s0 = O.sign(versig_message(me, ORACLE_ZERO))
    s1 = O.sign(versig_message(me, ORACLE_ONE))
    cases.append(TemplateCase("oracle", bo, [
        ("oracle", _ctx([close(me, a, 10)], 0, [ORACLE_ZERO, s0])),
        ("oracle", _ctx([close(me, b, 10)], 0, [ORACLE_ONE, s1])),
        ("oracle", _ctx([close(me, a, tmax + 1)])),
    ]))

    # htlc
    sec = rng.randbytes(16)
    bh = htlc(a, b, hashlib.sha256(sec).digest(), tmax)
    me = bh.address()
    cases.append(TemplateCase("htlc", bh, [
        ("htlc", _ctx([close(me, a, 3)], 0, [sec])),
        ("htlc", _ctx([close(me, b, tmax)])),
    ]))

    # lottery
    sA, sB = rng.randbytes(16), rng.randbytes(16)
    bl = lottery(a, b, hashlib.sha256(sA).digest(), hashlib.sha256(sB).digest(), tmax)
    win = a if lottery_winner(sA, sB) == "A" else b
    cases.append(TemplateCase("lottery", bl, [
        ("lottery", _ctx([close(bl.address("lottery"), win, 5)], 0, [sA, sB])),
        ("htlc_A", _ctx([close(bl.address("htlc_A"), a, 5)], 0, [sA])),
        ("htlc_B", _ctx([close(bl.address("htlc_B"), a, tmax)])),
    ]))

    # periodic payment
    p, d, v, n = 10, 3, ALGO_UNIT, 42
    bp = periodic_payment(a, v, p, d, n)
    me = bp.address()
    cases.append(TemplateCase("periodic-payment", bp, [
        ("pp", _ctx([Transaction(T.PAY, me, a, v, ALGO, k * p, k * p + d, n)])) for k in (0, 1, 4)
    ]))

    # two-phase authorization
    A1, B1 = User.from_seed("A1", "tmpl:A1"), User.from_seed("B1", "tmpl:B1")
    dm = 16
    b2 = two_phase(A.pk, Bu.pk, A1.pk, B1.pk, c, 2 * dm, dm)
    a1, a2 = b2.address("P1"), b2.address("P2")
    t1 = Transaction(T.CLOSE, a1, a2, 0, ALGO, 0, dm)
    t2 = Transaction(T.CLOSE, a2, c, 0, ALGO, 7, 9)
    fv3 = 2 * (2 * dm)
    t3 = Transaction(T.CLOSE, a2, a1, 0, ALGO, fv3, fv3 + dm)
    cases.append(TemplateCase("two-phase", b2, [
        ("P1", _ctx([t1], 0, [A.sign(versig_message(a1, t1.txid))])),
        ("P2", _ctx([t2], 0, [Bu.sign(versig_message(a2, t2.txid))])),
        ("P2", _ctx([t3], 0, [a1.encoding, A1.sign(versig_message(a2, a1.encoding)),
                              B1.sign(versig_message(a2, a1.encoding))])),
    ]))

    # mutual htlc
    bm = mutual_htlc(a, b, hashlib.sha256(sA).digest(), hashlib.sha256(sB).digest(), tmax)
    cases.append(TemplateCase("mutual-htlc", bm, [
        ("htlc_A", _ctx([close(bm.address("htlc_A"), a, 2)], 0, [sA])),
        ("htlc_B", _ctx([close(bm.address("htlc_B"), b, 2)], 0, [sB])),
        ("htlc_A", _ctx([close(bm.address("htlc_A"), b, tmax + 3)])),
    ]))

    # zero-collateral lottery
    t0, t1_ = 20, 20
    bz = zero_collateral_lottery(a, b, hashlib.sha256(sA).digest(), hashlib.sha256(sB).digest(), t0, t1_)
    z, z2 = bz.address("zdl"), bz.address("zdl2")
    cases.append(TemplateCase("zero-collateral-lottery", bz, [
        ("zdl", _ctx([close(z, z2, 3)], 0, [sA])),
        ("zdl", _ctx([close(z, b, t0)])),
        ("zdl2", _ctx([close(z2, win, 5)], 0, [sA, sB])),
        ("zdl2", _ctx([close(z2, a, t0 + t1_)], 0, [sA, b""])),
    ]))

    # escrow
    ve = 10 * ALGO_UNIT
    be = escrow(A.pk, Bu.pk, C.pk, ve)
    e_, r_ = be.address("escrow"), be.address("resolve")
    te = close(e_, b, 4)
    tr = close(e_, r_, 4)
    part = (3 * ALGO_UNIT).to_bytes(8, "big")
    pa = Transaction(T.PAY, r_, a, 3 * ALGO_UNIT, ALGO, 5, 9)
    pb = Transaction(T.PAY, r_, b, 7 * ALGO_UNIT, ALGO, 5, 9)
    sig_part = C.sign(versig_message(r_, part))
    cases.append(TemplateCase("escrow", be, [
        ("escrow", _ctx([te], 0, [b"", A.sign(versig_message(e_, te.txid))])),
        ("escrow", _ctx([tr], 0, [b"", Bu.sign(versig_message(e_, tr.txid))])),
        ("resolve", _ctx([pa], 0, [part, sig_part])),
        ("resolve", _ctx([pb], 0, [part, sig_part])),
    ]))

    # limit order (asset 1 created by C)
    assets = {1: (c, c)}
    bo2 = limit_order(a, 1, 2, 1000, tmax)
    me = bo2.address()
    g = [Transaction(T.PAY, me, b, 5000, ALGO, 3, 9), Transaction(T.PAY, b, a, 12000, 1, 3, 9)]
    cases.append(TemplateCase("limit-order", bo2, [
        ("order", _ctx(g, 0, (), assets)),
        ("order", _ctx([close(me, a, tmax + 1)])),
    ]))

    # split
    bs = split(a, b, c, 3, 1000, tmax)
    me = bs.address()
    g = [Transaction(T.PAY, me, b, 2000, ALGO, 3, 9), Transaction(T.PAY, me, c, 6000, ALGO, 3, 9)]
    cases.append(TemplateCase("split", bs, [
        ("split", _ctx(g, 0)), ("split", _ctx(g, 1)),
        ("split", _ctx([close(me, a, tmax + 1)])),
    ]))
    return cases


def _mutate_tx(rng: random.Random, t: Transaction, pool: Pool, others: Sequence[Address]) -> Transaction:
    what = rng.randrange(7)
    if what == 0:
        return t.replace(type=rng.choice(list(TxType)))
    if what == 1:
        return t.replace(rcv=rng.choice(list(others) + pool.addresses))
    if what == 2:
        return t.replace(val=max(0, t.val + rng.choice((-1, 1, 1000, -1000))) % 2**64)
    if what == 3:
        return t.replace(asst=rng.choice((ALGO, 1, 2)))
    if what == 4:
        return t.replace(fv=max(0, t.fv + rng.choice((-10, -1, 1, 10, 45))))
    if what == 5:
        return t.replace(lv=max(0, t.lv + rng.choice((-1, 1, 5))))
    return t.replace(lx=rng.choice((0, 1, 42, 43)))


def mutate(rng: random.Random, ctx: Context, pool: Pool, others: Sequence[Address]) -> Context:
    group, index, args = list(ctx.group), ctx.index, list(ctx.args)
    for _ in range(rng.choice((1, 1, 2, 3))):
        what = rng.randrange(6)
        if what in (0, 1):
            i = rng.randrange(len(group))
            group[i] = _mutate_tx(rng, group[i], pool, others)
        elif what == 2 and args:
            i = rng.randrange(len(args))
            a = bytearray(args[i])
            if a and rng.random() < 0.6:
                a[rng.randrange(len(a))] ^= 1 << rng.randrange(8)
                args[i] = bytes(a)
            else:
                args[i] = rng.choice(pool.blobs)
        elif what == 3:
            if args and rng.random() < 0.5:
                args.pop(rng.randrange(len(args)))
            else:
                args.insert(rng.randrange(len(args) + 1), rng.choice(pool.blobs))
        elif what == 4:
            if len(group) > 1 and rng.random() < 0.5:
                group.pop(rng.randrange(len(group)))
            else:
                group.insert(rng.randrange(len(group) + 1), random_tx(rng, pool))
            index = min(index, len(group) - 1)
        else:
            index = rng.randrange(len(group))
    return Context(tuple(group), index, tuple(args), ctx.assets)


def template_contexts(case: TemplateCase, n: int, rng: random.Random,
                      pool: Optional[Pool] = None) -> list[tuple[str, Context]]:
    """``n`` contexts: the accepting ones, then mutations of them, keeping
    only translatable groups."""
    pool = pool or default_pool()
    others = list(case.bundle.params.get(k) for k in ("A", "B", "c", "B0", "B1")
                  if isinstance(case.bundle.params.get(k), Address))
    others += [case.bundle.address(k) for k in case.bundle.scripts]
    out = list(case.valid[:n])
    while len(out) < n:
        name, base = rng.choice(case.valid)
        ctx = mutate(rng, base, pool, others)
        if ctx.translatable():
            out.append((name, ctx))
    return out


