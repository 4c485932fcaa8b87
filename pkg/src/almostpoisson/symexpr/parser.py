"""Recursive-descent parser for the expression grammar.

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ['^' exponent]          (right-associative)
    atom    := NUMBER | RATIONAL | IDENT | 'sqrt' '(' expr ')' | '(' expr ')'

Exponents must reduce to integer constants.  ``3/4`` written without
whitespace is a single exact rational literal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .nodes import Add, Const, Div, Expr, Mul, Neg, Pow, Sqrt, Var


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset
        self.text = text


class NonIntegerExponentError(ExprSyntaxError):
    pass


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<rational>\d+/\d+(?![\d.]))
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<ident>[a-zA-Z][a-zA-Z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_INTEGER = re.compile(r"\d+")


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind == "rational" and out and out[-1].text == "^":
            # "x^2/3" means (x^2)/3
            m = _INTEGER.match(text, pos)
            kind = "number"
        if kind != "ws":
            out.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    out.append(_Tok("end", "", len(text)))
    return out


def _literal(tok: _Tok) -> Const:
    if tok.kind == "rational":
        n, d = tok.text.split("/")
        if int(d) == 0:
            raise ExprSyntaxError("zero denominator in rational literal", tok.pos)
        return Const(Fraction(int(n), int(d)))
    if _INTEGER.fullmatch(tok.text):
        return Const(Fraction(int(tok.text)))
    return Const(float(tok.text))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ExprSyntaxError(msg, tok.pos, self.text)

    def take(self, text=None, kind=None) -> _Tok:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = text or kind
            got = t.text or "end of input"
            raise self.error(f"expected {want!r}, found {got!r}")
        self.i += 1
        return t

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise self.error("empty expression")
        e, _ = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    # Each level returns (expr, bare) where ``bare`` marks an unparenthesized
    # numeric literal, so "-3" and "a - 3" fold into negative constants.

    def expr(self):
        left, bare = self.term()
        terms = None
        while self.tok.text in ("+", "-"):
            op = self.take().text
            right, rbare = self.term()
            if op == "-":
                right = Const(-right.value) if rbare else Neg(right)
            if terms is None:
                terms = [left]
            terms.append(right)
            bare = False
        if terms is not None:
            return Add(terms), False
        return left, bare

    def term(self):
        left, bare = self.unary()
        factors = None
        while self.tok.text in ("*", "/"):
            op = self.take().text
            right, _ = self.unary()
            if op == "*":
                if factors is None:
                    factors = [left]
                factors.append(right)
            else:
                if factors is not None:
                    left = Mul(factors)
                    factors = None
                left = Div(left, right)
            bare = False
        if factors is not None:
            return Mul(factors), False
        return left, bare

    def unary(self):
        if self.tok.text == "-":
            self.take()
            inner, bare = self.unary()
            if bare:
                return Const(-inner.value), True
            return Neg(inner), False
        return self.power()

    def power(self):
        base, bare = self.atom()
        if self.tok.text != "^":
            return base, bare
        caret = self.take()
        start = self.tok
        exponent = self.exponent()
        k = _constant_value(exponent)
        if k is None or (isinstance(k, float) and not k.is_integer()) or (
            isinstance(k, Fraction) and k.denominator != 1
        ):
            raise NonIntegerExponentError(
                "non-integer exponent (use sqrt for square roots)", start.pos, self.text
            )
        del caret
        return Pow(base, int(k)), False

    def exponent(self):
        # right-associative: the exponent may itself be a power or a negation
        if self.tok.text == "-":
            self.take()
            inner = self.exponent()
            return Neg(inner)
        e, _ = self.power()
        return e

    def atom(self):
        t = self.tok
        if t.kind in ("number", "rational"):
            self.take()
            return _literal(t), True
        if t.kind == "ident":
            self.take()
            if t.text == "sqrt":
                self.take("(")
                arg, _ = self.expr()
                self.take(")")
                return Sqrt(arg), False
            if self.tok.text == "(":
                raise self.error(f"unknown function {t.text!r}", t)
            return Var(t.text), False
        if t.text == "(":
            self.take()
            e, _ = self.expr()
            self.take(")")
            return e, False
        got = t.text or "end of input"
        raise self.error(f"unexpected {got!r}")


def _constant_value(e: Expr):
    """Exact value of a variable-free tree, or None."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return None
    if isinstance(e, Sqrt):
        return None
    vals = [_constant_value(a) for a in e.args]
    if any(v is None for v in vals):
        return None
    if isinstance(e, Neg):
        return -vals[0]
    if isinstance(e, Add):
        return sum(vals, Fraction(0))
    if isinstance(e, Mul):
        out = Fraction(1)
        for v in vals:
            out = out * v
        return out
    if isinstance(e, Div):
        if vals[1] == 0:
            return None
        return vals[0] / vals[1]
    if isinstance(e, Pow):
        if vals[0] == 0 and e.exp < 0:
            return None
        return vals[0] ** e.exp
    return None


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises :class:`ExprSyntaxError` (with ``offset``) on malformed input and
    :class:`NonIntegerExponentError` when an exponent is not an integer.
    """
    if not isinstance(text, str):
        raise TypeError("parse expects a string")
    return _Parser(text).parse()
