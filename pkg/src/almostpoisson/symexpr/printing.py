"""Canonical text form of expressions, in the parser's grammar."""

from __future__ import annotations

from fractions import Fraction

from .nodes import Add, Const, Div, Expr, Mul, Neg, Pow, Sqrt, Var


def _const_text(value) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return repr(float(value))


def _atomic_const(c: Const) -> bool:
    # a bare non-negative integer or decimal needs no parentheses anywhere
    v = c.value
    return v >= 0 and (not isinstance(v, Fraction) or v.denominator == 1)


def _wrap(text: str) -> str:
    return f"({text})"


def to_text(e: Expr) -> str:
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Sqrt):
        return f"sqrt({to_text(e.arg)})"
    if isinstance(e, Pow):
        base = e.base
        btxt = to_text(base)
        if not (isinstance(base, (Var, Sqrt)) or (isinstance(base, Const) and _atomic_const(base))):
            btxt = _wrap(btxt)
        etxt = str(e.exp) if e.exp >= 0 else f"({e.exp})"
        return f"{btxt}^{etxt}"
    if isinstance(e, Neg):
        a = e.arg
        if isinstance(a, Const) or a.precedence < Neg.precedence:
            return "-" + _wrap(to_text(a))
        return "-" + to_text(a)
    if isinstance(e, Add):
        first = e.args[0]
        parts = [_wrap(to_text(first)) if isinstance(first, Add) else to_text(first)]
        for a in e.args[1:]:
            if isinstance(a, Const) and a.value < 0:
                parts.append(f" - {to_text(Const(-a.value))}")
            elif isinstance(a, Add):
                parts.append(f" + {_wrap(to_text(a))}")
            elif isinstance(a, Neg):
                inner = a.arg
                itxt = to_text(inner)
                # "a - b" re-parses as Add(a, Neg(b)); keep b at product level
                if isinstance(inner, Add) or isinstance(inner, Const):
                    itxt = _wrap(itxt)
                parts.append(f" - {itxt}")
            else:
                parts.append(f" + {to_text(a)}")
        return "".join(parts)
    if isinstance(e, Mul):
        out = []
        for i, a in enumerate(e.args):
            t = to_text(a)
            if a.precedence < Mul.precedence or isinstance(a, Mul):
                t = _wrap(t)
            elif i > 0 and (isinstance(a, (Div, Mul)) or isinstance(a, Neg)):
                t = _wrap(t)
            elif i > 0 and isinstance(a, Const) and not _atomic_const(a):
                t = _wrap(t)
            out.append(t)
        return "*".join(out)
    if isinstance(e, Div):
        n, d = e.num, e.den
        ntxt = to_text(n)
        if n.precedence < Div.precedence:
            ntxt = _wrap(ntxt)
        dtxt = to_text(d)
        if d.precedence <= Div.precedence or (isinstance(d, Const) and not _atomic_const(d)):
            dtxt = _wrap(dtxt)
        sep = "/"
        # "3/4" lexes as one rational literal; keep integer division visibly binary
        if ntxt[-1:].isdigit() and dtxt[:1].isdigit():
            sep = " / "
        return f"{ntxt}{sep}{dtxt}"
    raise TypeError(type(e).__name__)
