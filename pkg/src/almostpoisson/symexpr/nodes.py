"""Expression tree nodes, differentiation, substitution and evaluation."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Number as _Number
from typing import Callable, Iterable, Mapping, Sequence, Union

Scalar = Union[Fraction, float]


class EvaluationError(ArithmeticError):
    """Base class for failures while evaluating an expression at a point."""


class UnboundVariableError(EvaluationError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unbound variable {self.name!r}"


class DivisionByZeroError(EvaluationError, ZeroDivisionError):
    pass


class NegativeSqrtError(EvaluationError, ValueError):
    pass


class Expr:
    """Immutable expression node.

    Subclasses hold their children in ``args``.  Hashes are computed once,
    since expressions are used as cache keys all over the package.
    """

    __slots__ = ("_hash",)
    precedence = 100

    def _key(self) -> tuple:
        raise NotImplementedError

    def __setattr__(self, name, value):
        if hasattr(self, "_hash"):
            raise AttributeError(f"{type(self).__name__} is immutable")
        object.__setattr__(self, name, value)

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Expr) else False
        return hash(self) == hash(other) and self._key() == other._key()

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        return self._hash

    def _seal(self):
        object.__setattr__(self, "_hash", hash((type(self).__name__,) + self._key()))

    # -- arithmetic sugar (light folding only; see simplify for more)
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        if isinstance(k, Fraction) and k.denominator == 1:
            k = int(k)
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported; use sqrt()")
        return power(self, k)

    def __str__(self):
        from .printing import to_text

        return to_text(self)

    def __repr__(self):
        return f"Expr({str(self)!r})"

    # convenience methods
    def diff(self, var: str) -> "Expr":
        return diff(self, var)

    def subs(self, var: str, repl) -> "Expr":
        return substitute(self, var, as_expr(repl))

    def evaluate(self, point: Mapping[str, float]) -> float:
        return evaluate(self, point)

    @property
    def variables(self) -> frozenset:
        return free_variables(self)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, bool):
            value = int(value)
        if isinstance(value, int):
            value = Fraction(value)
        elif isinstance(value, Fraction):
            pass
        elif isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError(f"non-finite constant {value!r}")
        elif isinstance(value, _Number):
            value = float(value)
        else:
            raise TypeError(f"cannot make a constant from {value!r}")
        object.__setattr__(self, "value", value)
        self._seal()

    def _key(self):
        # 0.5 and 1/2 are different nodes: exactness is part of the structure
        return (type(self.value).__name__, self.value)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction)


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if not isinstance(name, str) or not name:
            raise ValueError(f"bad variable name {name!r}")
        object.__setattr__(self, "name", name)
        self._seal()

    def _key(self):
        return (self.name,)


class Add(Expr):
    __slots__ = ("args",)
    precedence = 10

    def __init__(self, args: Sequence[Expr]):
        args = tuple(args)
        if len(args) < 2:
            raise ValueError("Add needs at least two terms")
        object.__setattr__(self, "args", args)
        self._seal()

    def _key(self):
        return self.args


class Mul(Expr):
    __slots__ = ("args",)
    precedence = 20

    def __init__(self, args: Sequence[Expr]):
        args = tuple(args)
        if len(args) < 2:
            raise ValueError("Mul needs at least two factors")
        object.__setattr__(self, "args", args)
        self._seal()

    def _key(self):
        return self.args


class Div(Expr):
    __slots__ = ("num", "den")
    precedence = 20

    def __init__(self, num: Expr, den: Expr):
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        self._seal()

    @property
    def args(self):
        return (self.num, self.den)

    def _key(self):
        return (self.num, self.den)


class Neg(Expr):
    __slots__ = ("arg",)
    precedence = 30

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)
        self._seal()

    @property
    def args(self):
        return (self.arg,)

    def _key(self):
        return (self.arg,)


class Pow(Expr):
    __slots__ = ("base", "exp")
    precedence = 40

    def __init__(self, base: Expr, exp: int):
        if not isinstance(exp, int) or isinstance(exp, bool):
            raise TypeError("Pow exponent must be an int")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exp", exp)
        self._seal()

    @property
    def args(self):
        return (self.base,)

    def _key(self):
        return (self.base, self.exp)


class Sqrt(Expr):
    __slots__ = ("arg",)
    precedence = 50

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)
        self._seal()

    @property
    def args(self):
        return (self.arg,)

    def _key(self):
        return (self.arg,)


ZERO = Const(0)
ONE = Const(1)
HALF = Const(Fraction(1, 2))


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        from .parser import parse

        return parse(value)
    return Const(value)


def is_const(e: Expr, value=None) -> bool:
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


# -- smart constructors: constant folding and 0/1 absorption only


def _fold(a: Scalar, b: Scalar, op: Callable) -> Const:
    return Const(op(a, b))


def add(*terms: Expr) -> Expr:
    flat = []
    const: Scalar = Fraction(0)
    for t in terms:
        t = as_expr(t)
        for s in t.args if isinstance(t, Add) else (t,):
            if isinstance(s, Const):
                const = const + s.value
            else:
                flat.append(s)
    if const != 0 or not flat:
        flat.append(Const(const))
    return flat[0] if len(flat) == 1 else Add(flat)


def mul(*factors: Expr) -> Expr:
    flat = []
    const: Scalar = Fraction(1)
    for f in factors:
        f = as_expr(f)
        for s in f.args if isinstance(f, Mul) else (f,):
            if isinstance(s, Const):
                const = const * s.value
            else:
                flat.append(s)
    if const == 0:
        return ZERO
    if not flat:
        return Const(const)
    if const == -1:
        head = neg(flat[0])
        flat = [head] + flat[1:]
    elif const != 1:
        flat.insert(0, Const(const))
    return flat[0] if len(flat) == 1 else Mul(flat)


def div(num: Expr, den: Expr) -> Expr:
    num, den = as_expr(num), as_expr(den)
    if isinstance(den, Const):
        if den.value == 0:
            return Div(num, den)  # kept so evaluation reports the division
        if den.value == 1:
            return num
        if isinstance(num, Const):
            return Const(num.value / den.value)
    if is_const(num, 0):
        return ZERO
    if num == den:
        return ONE
    return Div(num, den)


def neg(e: Expr) -> Expr:
    e = as_expr(e)
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Neg):
        return e.arg
    return Neg(e)


def power(base: Expr, k: int) -> Expr:
    base = as_expr(base)
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and k < 0:
            return Pow(base, k)
        return Const(base.value**k)
    return Pow(base, k)


def sqrt(e) -> Expr:
    e = as_expr(e)
    if isinstance(e, Const) and e.is_exact and e.value >= 0:
        n, d = e.value.numerator, e.value.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Const(Fraction(rn, rd))
    return Sqrt(e)


def var(name: str) -> Var:
    return Var(name)


def symbols(names: str | Iterable[str]) -> tuple:
    if isinstance(names, str):
        names = names.replace(",", " ").split()
    return tuple(Var(n) for n in names)


# -- structural queries


@lru_cache(maxsize=65536)
def free_variables(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Const):
        return frozenset()
    out = frozenset()
    for a in e.args:
        out |= free_variables(a)
    return out


def depends_on(e: Expr, name: str) -> bool:
    return name in free_variables(e)


# -- calculus


@lru_cache(maxsize=65536)
def diff(e: Expr, v: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to the variable ``v``."""
    if v not in free_variables(e):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Add):
        return add(*(diff(a, v) for a in e.args))
    if isinstance(e, Neg):
        return neg(diff(e.arg, v))
    if isinstance(e, Mul):
        terms = []
        for i, a in enumerate(e.args):
            da = diff(a, v)
            if is_const(da, 0):
                continue
            terms.append(mul(*e.args[:i], da, *e.args[i + 1 :]))
        return add(*terms) if terms else ZERO
    if isinstance(e, Div):
        dn, dd = diff(e.num, v), diff(e.den, v)
        if is_const(dd, 0):
            return div(dn, e.den)
        return div(add(mul(dn, e.den), neg(mul(e.num, dd))), power(e.den, 2))
    if isinstance(e, Pow):
        return mul(Const(e.exp), power(e.base, e.exp - 1), diff(e.base, v))
    if isinstance(e, Sqrt):
        return div(diff(e.arg, v), mul(Const(2), e))
    raise TypeError(f"unknown node {type(e).__name__}")


def gradient(e: Expr, variables: Sequence[str]) -> tuple:
    return tuple(diff(e, v) for v in variables)


def substitute(e: Expr, v: str, r: Expr) -> Expr:
    """Replace every occurrence of the variable ``v`` in ``e`` by ``r``."""
    return substitute_many(e, {v: as_expr(r)})


def substitute_many(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    mapping = {k: as_expr(val) for k, val in mapping.items()}
    memo: dict = {}

    def walk(node: Expr) -> Expr:
        if not (free_variables(node) & mapping.keys()):
            return node
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Var):
            out = mapping[node.name]
        elif isinstance(node, Add):
            out = add(*map(walk, node.args))
        elif isinstance(node, Mul):
            out = mul(*map(walk, node.args))
        elif isinstance(node, Div):
            out = div(walk(node.num), walk(node.den))
        elif isinstance(node, Neg):
            out = neg(walk(node.arg))
        elif isinstance(node, Pow):
            out = power(walk(node.base), node.exp)
        elif isinstance(node, Sqrt):
            out = sqrt(walk(node.arg))
        else:
            raise TypeError(type(node).__name__)
        memo[node] = out
        return out

    return walk(e)


# -- evaluation: expressions are compiled to Python source once and cached


def _source(e: Expr, names: Mapping[str, str]) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return names[e.name]
    if isinstance(e, Add):
        return "(" + " + ".join(_source(a, names) for a in e.args) + ")"
    if isinstance(e, Mul):
        return "(" + " * ".join(_source(a, names) for a in e.args) + ")"
    if isinstance(e, Div):
        return f"({_source(e.num, names)} / {_source(e.den, names)})"
    if isinstance(e, Neg):
        return f"(-{_source(e.arg, names)})"
    if isinstance(e, Pow):
        if e.exp < 0:
            return f"(1.0 / {_source(e.base, names)} ** {-e.exp})"
        return f"({_source(e.base, names)} ** {e.exp})"
    if isinstance(e, Sqrt):
        return f"_sqrt({_source(e.arg, names)})"
    raise TypeError(type(e).__name__)


@lru_cache(maxsize=4096)
def _compiled(exprs: tuple, variables: tuple) -> Callable:
    names = {v: f"_a{i}" for i, v in enumerate(variables)}
    body = ", ".join(_source(e, names) for e in exprs)
    params = ", ".join(names[v] for v in variables)
    src = f"def _f({params}):\n    return ({body},)\n"
    env = {"_sqrt": math.sqrt}
    exec(compile(src, "<symexpr>", "exec"), env)
    return env["_f"]


def _translate(exc: Exception) -> EvaluationError:
    if isinstance(exc, ZeroDivisionError):
        return DivisionByZeroError("division by zero")
    if isinstance(exc, ValueError):
        return NegativeSqrtError("square root of a negative value")
    return EvaluationError(str(exc))


def lambdify(exprs: Sequence[Expr], variables: Sequence[str]) -> Callable[..., tuple]:
    """Return ``f(*values) -> tuple`` evaluating ``exprs`` with positional
    arguments bound to ``variables``.  Raises the same error kinds as
    :func:`evaluate`."""
    exprs = tuple(as_expr(e) for e in exprs)
    variables = tuple(variables)
    missing = set().union(*(free_variables(e) for e in exprs)) - set(variables) if exprs else set()
    if missing:
        raise UnboundVariableError(sorted(missing)[0])
    fn = _compiled(exprs, variables)

    def call(*values):
        try:
            return fn(*values)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise _translate(exc) from None

    return call


def evaluate(e: Expr, point: Mapping[str, float]) -> float:
    """Evaluate ``e`` at ``point`` in double precision."""
    e = as_expr(e)
    needed = tuple(sorted(free_variables(e)))
    for name in needed:
        if name not in point:
            raise UnboundVariableError(name)
    fn = _compiled((e,), needed)
    try:
        return fn(*(float(point[n]) for n in needed))[0]
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise _translate(exc) from None
