"""Best-effort canonicalization.

Expressions are normalized to a factored rational function

    coeff * prod(factor ** k)

whose factors are atoms (variables, square roots, anything opaque) or
multi-term polynomials over those atoms.  Sums are put over a common
denominator, numerators are expanded, and polynomial factors that divide
the expanded numerator exactly are cancelled.  ``sqrt(u)**2`` is rewritten
to ``u``.  There is no factorization and no completeness guarantee; use
:func:`almostpoisson.symexpr.equal` to decide equality.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from .nodes import Add, Const, Div, Expr, Mul, Neg, Pow, Sqrt, Var, neg, power
from .printing import to_text


class _Unnormalizable(Exception):
    pass


@lru_cache(maxsize=65536)
def _atom_key(a: Expr) -> tuple:
    if isinstance(a, Var):
        return (0, a.name)
    return (1, to_text(a))


class Poly:
    """Sparse polynomial over atoms: monomial tuple -> coefficient."""

    __slots__ = ("terms", "_hash", "_text")

    def __init__(self, terms: dict):
        items = [(m, c) for m, c in terms.items() if c != 0]
        items.sort(key=lambda mc: _mono_order(mc[0]))
        self.terms = tuple(items)
        self._hash = hash(self.terms)
        self._text = None

    def __eq__(self, other):
        return isinstance(other, Poly) and self._hash == other._hash and self.terms == other.terms

    def __hash__(self):
        return self._hash

    def as_dict(self) -> dict:
        return dict(self.terms)

    def text(self) -> str:
        if self._text is None:
            self._text = to_text(_poly_expr(self))
        return self._text

    def __repr__(self):
        return f"Poly({self.text()})"


def _mono_order(m: tuple) -> tuple:
    return (sum(e for _, e in m), tuple((_atom_key(a), e) for a, e in m))


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for a, e in m2:
        d[a] = d.get(a, 0) + e
    return tuple(sorted(((a, e) for a, e in d.items() if e), key=lambda ae: _atom_key(ae[0])))


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            out[m] = out.get(m, 0) + c1 * c2
    return {m: c for m, c in out.items() if c != 0}


def _poly_add(p: dict, q: dict) -> dict:
    out = dict(p)
    for m, c in q.items():
        out[m] = out.get(m, 0) + c
    return {m: c for m, c in out.items() if c != 0}


def _poly_pow(p: dict, k: int) -> dict:
    out = {(): Fraction(1)}
    for _ in range(k):
        out = _poly_mul(out, p)
    return out


def _reduce_sqrt_squares(p: dict) -> dict:
    """Rewrite sqrt(u)^2 -> u inside monomials whenever u is polynomial."""
    for _ in range(64):
        hit = None
        for m in p:
            for a, e in m:
                if isinstance(a, Sqrt) and e >= 2:
                    arg = _rat_of_atom(a)
                    if all(k > 0 for k in arg.factors.values()):
                        hit = (m, a, e, arg)
                        break
            if hit:
                break
        if hit is None:
            return p
        m, a, e, arg = hit
        c = p.pop(m)
        rest = tuple((b, f) for b, f in m if b is not a)
        q, r = divmod(e, 2)
        if r:
            rest = _mono_mul(rest, ((a, 1),))
        repl = _poly_pow(_rat_expand(arg), q)
        p = _poly_add(p, _poly_mul({rest: c}, repl))
    return p


def _lead(p: dict, order: tuple) -> tuple:
    """Leading monomial in graded lex order over the atom list ``order``."""

    def key(m):
        d = dict(m)
        vec = tuple(d.get(a, 0) for a in order)
        return (sum(vec), vec)

    return max(p, key=key)


def _mono_div(m1: tuple, m2: tuple):
    d = dict(m1)
    for a, e in m2:
        if d.get(a, 0) < e:
            return None
        d[a] -= e
    return tuple(sorted(((a, e) for a, e in d.items() if e), key=lambda ae: _atom_key(ae[0])))


def _poly_exact_div(p: dict, q: dict):
    """Quotient p/q if q divides p exactly (monomial lex division), else None."""
    if not q:
        return None
    atoms = {a for poly in (p, q) for m in poly for a, _ in m}
    order = tuple(sorted(atoms, key=_atom_key))
    lq = _lead(q, order)
    cq = q[lq]
    rem = dict(p)
    quo: dict = {}
    for _ in range(10000):
        if not rem:
            return quo
        lr = _lead(rem, order)
        m = _mono_div(lr, lq)
        if m is None:
            return None
        c = rem[lr] / cq
        quo[m] = quo.get(m, 0) + c
        rem = _poly_add(rem, _poly_mul({m: -c}, q))
        if isinstance(c, float):
            # floating coefficients never cancel exactly; drop roundoff dust
            rem = {k: v for k, v in rem.items() if abs(v) > 1e-14 * abs(c)}
    return None


class Rat:
    """coeff * prod(key ** exp); keys are atom Exprs or Polys."""

    __slots__ = ("coeff", "factors")

    def __init__(self, coeff, factors=None):
        self.coeff = coeff
        self.factors = {k: e for k, e in (factors or {}).items() if e} if coeff != 0 else {}

    @property
    def is_zero(self):
        return self.coeff == 0


def _rat_const(c) -> Rat:
    return Rat(c)


def _rat_mul(a: Rat, b: Rat) -> Rat:
    if a.is_zero or b.is_zero:
        return Rat(Fraction(0))
    f = dict(a.factors)
    for k, e in b.factors.items():
        f[k] = f.get(k, 0) + e
    out = Rat(a.coeff * b.coeff, f)
    return _fix_sqrt(out)


def _fix_sqrt(r: Rat) -> Rat:
    for k, e in list(r.factors.items()):
        if isinstance(k, Sqrt) and abs(e) >= 2:
            q, rem = divmod(e, 2)
            f = dict(r.factors)
            f[k] = rem
            base = Rat(r.coeff, f)
            return _rat_mul(base, _rat_pow(_rat_of_atom(k), q))
    return r


def _rat_pow(a: Rat, k: int) -> Rat:
    if k == 0:
        return Rat(Fraction(1))
    if a.is_zero:
        if k < 0:
            raise _Unnormalizable
        return a
    coeff = a.coeff**k if k > 0 else (1 / a.coeff) ** (-k)
    return _fix_sqrt(Rat(coeff, {f: e * k for f, e in a.factors.items()}))


def _rat_expand(r: Rat) -> dict:
    """Expand a Rat with only non-negative exponents into a polynomial dict."""
    p = {(): r.coeff}
    mono = []
    for k, e in r.factors.items():
        if e < 0:
            raise ValueError("negative exponent in expansion")
        if isinstance(k, Poly):
            p = _poly_mul(p, _poly_pow(k.as_dict(), e))
        else:
            mono.append((k, e))
    if mono:
        m = tuple(sorted(mono, key=lambda ae: _atom_key(ae[0])))
        p = _poly_mul(p, {m: Fraction(1)})
    return _reduce_sqrt_squares(p)


def _rat_from_poly(p: dict) -> Rat:
    if not p:
        return Rat(Fraction(0))
    # monomial content
    atoms = None
    for m in p:
        d = dict(m)
        if atoms is None:
            atoms = d
        else:
            atoms = {a: min(e, d[a]) for a, e in atoms.items() if a in d}
    content = tuple(sorted(((a, e) for a, e in atoms.items() if e), key=lambda ae: _atom_key(ae[0])))
    if content:
        p = {_mono_div(m, content): c for m, c in p.items()}
    if len(p) == 1:
        (m, c), = p.items()
        f = dict(m)
        for a, e in content:
            f[a] = f.get(a, 0) + e
        return _fix_sqrt(Rat(c, f))
    poly = Poly(p)
    lc = poly.terms[0][1]
    poly = Poly({m: c / lc for m, c in p.items()})
    f = {poly: 1}
    for a, e in content:
        f[a] = f.get(a, 0) + e
    return _fix_sqrt(Rat(lc, f))


def _rat_add(a: Rat, b: Rat) -> Rat:
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    keys = set(a.factors) | set(b.factors)
    common = {k: min(a.factors.get(k, 0), b.factors.get(k, 0)) for k in keys}
    common = {k: e for k, e in common.items() if e}
    ra = Rat(a.coeff, {k: e - common.get(k, 0) for k, e in a.factors.items()})
    rb = Rat(b.coeff, {k: e - common.get(k, 0) for k, e in b.factors.items()})
    for k, e in common.items():
        if k not in a.factors:
            ra.factors[k] = -e
        if k not in b.factors:
            rb.factors[k] = -e
    s = _poly_add(_rat_expand(ra), _rat_expand(rb))
    if not s:
        return Rat(Fraction(0))
    # cancel denominator polynomials that divide the new numerator
    for k in sorted((k for k, e in common.items() if e < 0 and isinstance(k, Poly)), key=lambda k: k.text()):
        while common[k] < 0:
            q = _poly_exact_div(s, k.as_dict())
            if q is None or not q:
                break
            s = q
            common[k] += 1
    out = _rat_from_poly(s)
    return _rat_mul(out, Rat(Fraction(1), common))


@lru_cache(maxsize=8192)
def _rat_of_atom(a: Expr) -> Rat:
    if isinstance(a, Sqrt):
        return to_rat(a.arg)
    return Rat(Fraction(1), {a: 1})


def _opaque(e: Expr) -> Rat:
    return Rat(Fraction(1), {e: 1})


@lru_cache(maxsize=65536)
def to_rat(e: Expr) -> Rat:
    if isinstance(e, Const):
        return Rat(e.value)
    if isinstance(e, Var):
        return Rat(Fraction(1), {e: 1})
    if isinstance(e, Neg):
        r = to_rat(e.arg)
        return Rat(-r.coeff, r.factors)
    if isinstance(e, Add):
        out = Rat(Fraction(0))
        for t in e.args:
            out = _rat_add(out, to_rat(t))
        return out
    if isinstance(e, Mul):
        out = Rat(Fraction(1))
        for t in e.args:
            out = _rat_mul(out, to_rat(t))
        return out
    if isinstance(e, Div):
        try:
            return _rat_mul(to_rat(e.num), _rat_pow(to_rat(e.den), -1))
        except _Unnormalizable:
            return _opaque(Div(simplify(e.num), simplify(e.den)))
    if isinstance(e, Pow):
        try:
            return _rat_pow(to_rat(e.base), e.exp)
        except _Unnormalizable:
            return _opaque(Pow(simplify(e.base), e.exp))
    if isinstance(e, Sqrt):
        return _sqrt_rat(to_rat(e.arg))
    raise TypeError(type(e).__name__)


def _sqrt_const(c):
    if isinstance(c, Fraction):
        if c < 0:
            return None
        n, d = c.numerator, c.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
        return None
    if c < 0:
        return None
    return math.sqrt(c)


def _sqrt_rat(u: Rat) -> Rat:
    if u.is_zero:
        return u
    if not u.factors:
        root = _sqrt_const(u.coeff)
        if root is not None:
            return Rat(root)
        return _opaque(Sqrt(Const(u.coeff)))
    coeff = Fraction(1)
    inner_coeff = u.coeff
    if u.coeff > 0:
        root = _sqrt_const(u.coeff)
        if root is not None:
            coeff, inner_coeff = root, Fraction(1)
    inner = Rat(inner_coeff, u.factors)
    atom = Sqrt(rat_to_expr(inner))
    return Rat(coeff, {atom: 1})


# -- back to trees


def _mono_expr(m: tuple, c) -> Expr:
    parts = [power(a, e) for a, e in m]
    if c != 1 or not parts:
        parts.insert(0, Const(c))
    return parts[0] if len(parts) == 1 else Mul(parts)


def _poly_expr(p: Poly) -> Expr:
    terms = []
    for i, (m, c) in enumerate(p.terms):
        if i > 0 and c < 0:
            terms.append(Neg(_mono_expr(m, -c)) if m else Const(c))
        else:
            terms.append(_mono_expr(m, c))
    return terms[0] if len(terms) == 1 else Add(terms)


def _factor_key(k) -> tuple:
    if isinstance(k, Poly):
        return (2, k.text())
    return _atom_key(k)


def _factor_expr(k, e: int) -> Expr:
    base = _poly_expr(k) if isinstance(k, Poly) else k
    return base if e == 1 else Pow(base, e)


def rat_to_expr(r: Rat) -> Expr:
    if r.is_zero:
        return Const(0)
    keys = sorted(r.factors, key=_factor_key)
    num = [_factor_expr(k, r.factors[k]) for k in keys if r.factors[k] > 0]
    den = [_factor_expr(k, -r.factors[k]) for k in keys if r.factors[k] < 0]
    c = r.coeff
    neg_sign = c < 0
    c = -c if neg_sign else c
    if c != 1 or not num:
        num.insert(0, Const(c))
    if neg_sign:
        num[0] = neg(num[0])
    top = num[0] if len(num) == 1 else Mul(num)
    if not den:
        return top
    bottom = den[0] if len(den) == 1 else Mul(den)
    return Div(top, bottom)


@lru_cache(maxsize=65536)
def simplify(e: Expr) -> Expr:
    """Canonicalize ``e`` (best effort; result is semantically equal)."""
    if isinstance(e, (Const, Var)):
        return e
    return rat_to_expr(to_rat(e))


__all__ = ["simplify", "to_rat", "rat_to_expr", "Poly", "Rat"]
