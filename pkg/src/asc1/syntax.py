"""Textual syntax for scripts.

Grammar, loosest binding first::

    expr   := "if" expr "then" expr "else" expr | or
    or     := and ("or" and)*
    and    := not ("and" not)*
    not    := "not" not | cmp
    cmp    := sum [("<" | "<=" | "=" | ">=" | ">") sum]
    sum    := prod (("+" | "-") prod)*
    prod   := atom (("*" | "/" | "%") atom)*
    atom   := INT | 0xHEX | "true" | "false" | "Algo" | TYPE | NAME
            | "txlen" | "txpos" | "txid" ["(" expr ")"]
            | "tx" ["(" expr ")"] "." FIELD | "arg" "(" INT ")"
            | "H" "(" expr ")" | "versig" "(" expr "," expr "," expr ")"
            | "(" expr ")"

TYPE is one of the transaction type names (``pay``, ``close`` ...), which
stand for the byte tag of that type. NAME is looked up in the environment
passed to ``parse``. ``#`` starts a comment that runs to the end of the line.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional

from .expr import (FALSE, FIELDS, TRUE, Arg, BinOp, Const, Expr, Hash, Not,
                   TxField, TxId, TxLen, TxPos, Versig, ite)
from .txtype import TxType

_TYPE_NAMES = {t.value: t for t in TxType}
_KEYWORDS = {"if", "then", "else", "or", "and", "not", "true", "false", "Algo",
             "txlen", "txpos", "txid", "tx", "arg", "H", "versig"} | set(_TYPE_NAMES)

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<hex>0x[0-9a-fA-F]*)
  | (?P<int>[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|[<>=+\-*/%(),.])
""", re.VERBOSE)


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int) -> None:
        super().__init__(f"{msg} at line {line}, column {col}")
        self.line, self.col = line, col


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(src: str) -> list[_Tok]:
    toks, pos, line, line_start = [], 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, text, line, pos - line_start + 1))
        for i, ch in enumerate(text):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, src: str, env: Mapping) -> None:
        self.toks = _lex(src)
        self.i = 0
        self.env = env

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        return ParseError(msg, tok.line, tok.col)

    def accept(self, text: str) -> bool:
        t = self.peek()
        if t.text == text and t.kind in ("op", "name"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            raise self.error(f"expected {text!r}, found {self.peek().text or 'end of input'!r}")

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek().kind != "eof":
            raise self.error(f"unexpected {self.peek().text!r}")
        return e

    def expr(self) -> Expr:
        if self.accept("if"):
            c = self.expr()
            self.expect("then")
            a = self.expr()
            self.expect("else")
            return ite(c, a, self.expr())
        return self.or_()

    def or_(self) -> Expr:
        e = self.and_()
        while self.accept("or"):
            e = BinOp("or", e, self.and_())
        return e

    def and_(self) -> Expr:
        e = self.not_()
        while self.accept("and"):
            e = BinOp("and", e, self.not_())
        return e

    def not_(self) -> Expr:
        if self.accept("not"):
            return Not(self.not_())
        return self.cmp()

    def cmp(self) -> Expr:
        e = self.sum()
        t = self.peek()
        if t.kind == "op" and t.text in ("<", "<=", "=", ">=", ">"):
            self.next()
            e = BinOp(t.text, e, self.sum())
        return e

    def sum(self) -> Expr:
        e = self.prod()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            e = BinOp(self.next().text, e, self.prod())
        return e

    def prod(self) -> Expr:
        e = self.atom()
        while self.peek().kind == "op" and self.peek().text in ("*", "/", "%"):
            e = BinOp(self.next().text, e, self.atom())
        return e

    def _index(self) -> Expr:
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        return TxPos()

    def atom(self) -> Expr:
        t = self.next()
        if t.kind == "int":
            v = int(t.text)
            if v >= 2**64:
                raise self.error("integer literal exceeds 64 bits", t)
            return Const(v)
        if t.kind == "hex":
            digits = t.text[2:]
            if len(digits) % 2:
                raise self.error("odd number of hex digits", t)
            return Const(bytes.fromhex(digits))
        if t.kind == "op" and t.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if t.kind != "name":
            raise self.error(f"unexpected {t.text or 'end of input'!r}", t)
        w = t.text
        if w == "true":
            return TRUE
        if w == "false":
            return FALSE
        if w == "Algo":
            return Const(0)
        if w in _TYPE_NAMES:
            return Const(_TYPE_NAMES[w].tag_bytes)
        if w == "txlen":
            return TxLen()
        if w == "txpos":
            return TxPos()
        if w == "txid":
            return TxId(self._index())
        if w == "tx":
            idx = self._index()
            self.expect(".")
            f = self.next()
            if f.text not in FIELDS:
                raise self.error(f"unknown field {f.text!r}", f)
            return TxField(idx, f.text)
        if w == "arg":
            self.expect("(")
            n = self.next()
            if n.kind != "int":
                raise self.error("arg index must be an integer literal", n)
            self.expect(")")
            return Arg(int(n.text))
        if w == "H":
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return Hash(e)
        if w == "versig":
            self.expect("(")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(",")
            c = self.expr()
            self.expect(")")
            return Versig(a, b, c)
        if w in self.env:
            v = self.env[w]
            return v if not isinstance(v, (int, bytes, TxType)) else Const(
                v.tag_bytes if isinstance(v, TxType) else v)
        msg = f"unknown name {w!r}" if w not in _KEYWORDS else f"unexpected keyword {w!r}"
        raise self.error(msg, t)


def parse(src: str, env: Optional[Mapping] = None) -> Expr:
    return _Parser(src, env or {}).parse()


# -- printing -------------------------------------------------------------

_PREC = {"or": 1, "and": 2, "<": 4, "<=": 4, "=": 4, ">=": 4, ">": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "%": 6}
_NOT_PREC = 3
_ATOM = 7
_TAG_NAMES = {t.tag_bytes: t.value for t in TxType}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Not):
        return _NOT_PREC
    return _ATOM


def _wrap(e: Expr, need: bool, names) -> str:
    s = _show(e, names)
    return f"({s})" if need else s


def _show(e: Expr, names: Mapping[bytes, str]) -> str:
    if isinstance(e, Const):
        v = e.value
        if isinstance(v, int):
            return str(v)
        if v in names:
            return names[v]
        if v in _TAG_NAMES:
            return _TAG_NAMES[v]
        return "0x" + v.hex()
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        cmp = p == 4
        left = _wrap(e.left, _prec(e.left) < p or (cmp and _prec(e.left) == p), names)
        right = _wrap(e.right, _prec(e.right) <= p, names)
        return f"{left} {e.op} {right}"
    if isinstance(e, Not):
        return "not " + _wrap(e.operand, _prec(e.operand) < _ATOM, names)
    if isinstance(e, TxLen):
        return "txlen"
    if isinstance(e, TxPos):
        return "txpos"
    if isinstance(e, TxId):
        return "txid" if isinstance(e.index, TxPos) else f"txid({_show(e.index, names)})"
    if isinstance(e, TxField):
        if isinstance(e.index, TxPos):
            return f"tx.{e.field}"
        return f"tx({_show(e.index, names)}).{e.field}"
    if isinstance(e, Arg):
        return f"arg({e.n})"
    if isinstance(e, Hash):
        return f"H({_show(e.operand, names)})"
    if isinstance(e, Versig):
        return f"versig({_show(e.msg, names)}, {_show(e.sig, names)}, {_show(e.key, names)})"
    raise TypeError(f"not a script expression: {e!r}")


def pretty(e: Expr, names: Optional[Mapping[str, bytes]] = None) -> str:
    """Render ``e``; ``parse(pretty(e, names), names)`` gives back ``e``.

    ``names`` maps identifiers to byte constants that should be printed by
    name (addresses, hashes).
    """
    by_value = {v: k for k, v in (names or {}).items() if isinstance(v, bytes)}
    return _show(e, by_value)
