"""Graded tensor fields on a coordinate chart with expression coefficients.

Alternating objects (bivectors, trivectors, two- and three-forms) store only
their strictly increasing index tuples; reading any other index tuple goes
through the permutation sign.  Components are written

    B = sum_{I<J} B^{IJ} d/dq_I ^ d/dq_J,   w = sum_{I<J} w_{IJ} dq_I ^ dq_J

so ``(X ^ Y)^{IJ} = X^I Y^J - X^J Y^I``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Callable, Iterable, Mapping, Sequence

from . import symmatrix
from .symexpr import ZERO, Expr, as_expr, diff, equal, free_variables, snap, to_text

# The Schouten-Nijenhuis self-bracket is normalized so that a Poisson
# bivector has [B,B] = 0 and a Jacobi pair satisfies [B,B] = 2 E^B.  With
# the cyclic coordinate sum below this needs an overall factor 2.
SCHOUTEN_FACTOR = 2


class ChartMismatchError(ValueError):
    pass


class SingularBivectorError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Chart:
    names: tuple

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate chart variables in {names}")
        if not 2 <= len(names) <= 8:
            raise ValueError("chart dimension must be between 2 and 8")

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def __iter__(self):
        return iter(self.names)

    def __len__(self):
        return len(self.names)

    def __str__(self):
        return "{" + ",".join(self.names) + "}"


def _same_chart(*fields):
    c = fields[0].chart
    for f in fields[1:]:
        if f.chart != c:
            raise ChartMismatchError(f"chart {f.chart} differs from {c}")
    return c


def _perm_sign(idx: Sequence[int]) -> int:
    idx = list(idx)
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] == idx[j]:
                return 0
            if idx[i] > idx[j]:
                sign = -sign
    return sign


def _coef_text(c: Expr) -> str:
    t = to_text(c)
    return t if t.replace("_", "").isalnum() else f"({t})"


class VectorField:
    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components: Iterable):
        comps = tuple(as_expr(c) for c in components)
        if len(comps) != chart.dim:
            raise ValueError(f"expected {chart.dim} components, got {len(comps)}")
        self.chart = chart
        self.components = comps

    @classmethod
    def basis(cls, chart: Chart, name: str) -> "VectorField":
        i = chart.index(name)
        return cls(chart, [1 if k == i else 0 for k in range(chart.dim)])

    @classmethod
    def from_dict(cls, chart: Chart, comps: Mapping[str, object]) -> "VectorField":
        unknown = set(comps) - set(chart.names)
        if unknown:
            raise ValueError(f"components for unknown variables {sorted(unknown)}")
        return cls(chart, [comps.get(n, 0) for n in chart.names])

    def __getitem__(self, i):
        if isinstance(i, str):
            i = self.chart.index(i)
        return self.components[i]

    def __add__(self, other):
        _same_chart(self, other)
        return VectorField(self.chart, [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        _same_chart(self, other)
        return VectorField(self.chart, [a - b for a, b in zip(self.components, other.components)])

    def scale(self, f) -> "VectorField":
        f = as_expr(f)
        return VectorField(self.chart, [f * c for c in self.components])

    def simplified(self) -> "VectorField":
        return VectorField(self.chart, [snap(c) for c in self.components])

    def apply(self, f) -> Expr:
        """Directional derivative X(f)."""
        f = as_expr(f)
        return snap(sum((c * diff(f, n) for c, n in zip(self.components, self.chart.names)), ZERO))

    def equals(self, other, samples=20, tol=1e-10, **kw) -> bool:
        _same_chart(self, other)
        return all(equal(a, b, samples, tol, **kw) for a, b in zip(self.components, other.components))

    def is_zero(self, **kw) -> bool:
        return self.equals(VectorField(self.chart, [0] * self.chart.dim), **kw)

    def __str__(self):
        terms = [f"{_coef_text(c)}*d/d{n}" for c, n in zip(self.components, self.chart.names) if c != ZERO]
        return " + ".join(terms) if terms else "0"

    def __repr__(self):
        return f"VectorField({self})"


class OneForm:
    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components: Iterable):
        comps = tuple(as_expr(c) for c in components)
        if len(comps) != chart.dim:
            raise ValueError(f"expected {chart.dim} components, got {len(comps)}")
        self.chart = chart
        self.components = comps

    @classmethod
    def differential(cls, chart: Chart, f) -> "OneForm":
        f = as_expr(f)
        return cls(chart, [diff(f, n) for n in chart.names])

    def __getitem__(self, i):
        if isinstance(i, str):
            i = self.chart.index(i)
        return self.components[i]

    def __call__(self, X: VectorField) -> Expr:
        _same_chart(self, X)
        return snap(sum((a * b for a, b in zip(self.components, X.components)), ZERO))

    def equals(self, other, samples=20, tol=1e-10, **kw) -> bool:
        _same_chart(self, other)
        return all(equal(a, b, samples, tol, **kw) for a, b in zip(self.components, other.components))

    def __str__(self):
        terms = [f"{_coef_text(c)}*d{n}" for c, n in zip(self.components, self.chart.names) if c != ZERO]
        return " + ".join(terms) if terms else "0"

    def __repr__(self):
        return f"OneForm({self})"


class _Alternating:
    """Alternating rank-k table on a chart, stored on increasing k-tuples."""

    rank = 0
    covariant = False
    __slots__ = ("chart", "coeffs")

    def __init__(self, chart: Chart, coeffs: Mapping[tuple, object] | None = None):
        self.chart = chart
        table = {}
        for idx, c in (coeffs or {}).items():
            idx = tuple(chart.index(i) if isinstance(i, str) else i for i in idx)
            if len(idx) != self.rank:
                raise ValueError(f"index {idx} has wrong rank")
            s = _perm_sign(idx)
            if s == 0:
                continue
            key = tuple(sorted(idx))
            c = as_expr(c)
            table[key] = table.get(key, ZERO) + (c if s > 0 else -c)
        self.coeffs = {k: v for k, v in table.items() if v != ZERO}

    @classmethod
    def from_function(cls, chart: Chart, fn: Callable[..., Expr], antisymmetrize: bool = False):
        """Build from ``fn(i, j, ...)`` evaluated on increasing index tuples.

        With ``antisymmetrize`` the stored value is the alternating average
        ``(1/k!) sum_sigma sign(sigma) fn(sigma(idx))`` instead.
        """
        out = {}
        for idx in combinations(range(chart.dim), cls.rank):
            if antisymmetrize:
                terms = []
                for p in permutations(idx):
                    s = _perm_sign(p)
                    v = as_expr(fn(*p))
                    terms.append(v if s > 0 else -v)
                val = sum(terms, ZERO) / _factorial(cls.rank)
            else:
                val = fn(*idx)
            out[idx] = snap(val)
        return cls(chart, out)

    @classmethod
    def from_matrix(cls, chart: Chart, m):
        if cls.rank != 2:
            raise TypeError("from_matrix is for rank-2 objects")
        return cls(chart, {(i, j): m[i][j] for i in range(chart.dim) for j in range(i + 1, chart.dim)})

    def __getitem__(self, idx) -> Expr:
        idx = tuple(self.chart.index(i) if isinstance(i, str) else i for i in idx)
        s = _perm_sign(idx)
        if s == 0:
            return ZERO
        c = self.coeffs.get(tuple(sorted(idx)), ZERO)
        return c if s > 0 else -c

    def matrix(self) -> tuple:
        if self.rank != 2:
            raise TypeError("matrix() is for rank-2 objects")
        n = self.chart.dim
        return tuple(tuple(self[i, j] for j in range(n)) for i in range(n))

    def items(self):
        return sorted(self.coeffs.items())

    def _new(self, coeffs):
        return type(self)(self.chart, coeffs)

    def __add__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        _same_chart(self, other)
        keys = set(self.coeffs) | set(other.coeffs)
        return self._new({k: snap(self.coeffs.get(k, ZERO) + other.coeffs.get(k, ZERO)) for k in keys})

    def __sub__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self + other.scale(-1)

    def scale(self, f):
        f = as_expr(f)
        return self._new({k: snap(f * v) for k, v in self.coeffs.items()})

    def simplified(self):
        return self._new({k: snap(v) for k, v in self.coeffs.items()})

    def equals(self, other, samples=20, tol=1e-10, **kw) -> bool:
        _same_chart(self, other)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(
            equal(self.coeffs.get(k, ZERO), other.coeffs.get(k, ZERO), samples, tol, **kw) for k in keys
        )

    def is_zero(self, samples=20, tol=1e-10, **kw) -> bool:
        return all(equal(v, ZERO, samples, tol, **kw) for v in self.coeffs.values())

    def nonzero_items(self, **kw):
        """Entries that do not sample as zero."""
        return [(k, v) for k, v in self.items() if not equal(v, ZERO, **kw)]

    def evaluate(self, point) -> dict:
        from .symexpr import evaluate

        return {k: evaluate(v, point) for k, v in self.coeffs.items()}

    @property
    def variables(self) -> frozenset:
        out = frozenset()
        for v in self.coeffs.values():
            out |= free_variables(v)
        return out

    def _basis_text(self, idx) -> str:
        names = [self.chart.names[i] for i in idx]
        if self.covariant:
            return "^".join(f"d{n}" for n in names)
        return "^".join(f"d/d{n}" for n in names)

    def __str__(self):
        terms = [f"{_coef_text(v)}*{self._basis_text(k)}" for k, v in self.items()]
        return " + ".join(terms) if terms else "0"

    def __repr__(self):
        return f"{type(self).__name__}({self})"


def _factorial(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


class Bivector(_Alternating):
    rank = 2
    __slots__ = ()


class Trivector(_Alternating):
    rank = 3
    __slots__ = ()


class TwoForm(_Alternating):
    rank = 2
    covariant = True
    __slots__ = ()


class ThreeForm(_Alternating):
    rank = 3
    covariant = True
    __slots__ = ()


# -- operations


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X,Y]^K = X^L d_L Y^K - Y^L d_L X^K."""
    chart = _same_chart(X, Y)
    comps = []
    for k in range(chart.dim):
        terms = []
        for l, name in enumerate(chart.names):
            terms.append(X.components[l] * diff(Y.components[k], name))
            terms.append(-(Y.components[l] * diff(X.components[k], name)))
        comps.append(snap(sum(terms, ZERO)))
    return VectorField(chart, comps)


def wedge(X: VectorField, Y: VectorField) -> Bivector:
    chart = _same_chart(X, Y)
    a, b = X.components, Y.components
    return Bivector.from_function(chart, lambda i, j: a[i] * b[j] - a[j] * b[i])


def wedge3(X: VectorField, B: Bivector) -> Trivector:
    """(X ^ B)^{IJK} = X^I B^{JK} + X^J B^{KI} + X^K B^{IJ}."""
    chart = _same_chart(X, B)
    x = X.components
    return Trivector.from_function(
        chart, lambda i, j, k: x[i] * B[j, k] + x[j] * B[k, i] + x[k] * B[i, j]
    )


def wedge_forms(a: OneForm, w: TwoForm) -> ThreeForm:
    """(a ^ w)_{IJK} = a_I w_{JK} + a_J w_{KI} + a_K w_{IJ}."""
    chart = _same_chart(a, w)
    c = a.components
    return ThreeForm.from_function(chart, lambda i, j, k: c[i] * w[j, k] + c[j] * w[k, i] + c[k] * w[i, j])


def _partials(B: _Alternating) -> dict:
    """d_L of every stored coefficient: {(key, L): Expr}."""
    out = {}
    for key, v in B.coeffs.items():
        for l, name in enumerate(B.chart.names):
            if name in free_variables(v):
                out[key, l] = diff(v, name)
    return out


def schouten_self(B: Bivector) -> Trivector:
    """Schouten-Nijenhuis bracket [B,B].

    Each entry is ``SCHOUTEN_FACTOR`` times the cyclic sum
    ``B^{LK} d_L B^{IJ} + B^{LI} d_L B^{JK} + B^{LJ} d_L B^{KI}``, then
    alternated over the index triple.  Zero iff B is Poisson.
    """
    chart = B.chart
    n = chart.dim
    partials = _partials(B)

    def dB(i, j, l):
        if i == j:
            return ZERO
        key = (i, j) if i < j else (j, i)
        d = partials.get((key, l), ZERO)
        return d if i < j else -d

    def raw(i, j, k):
        terms = []
        for l in range(n):
            for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                d = dB(a, b, l)
                if d == ZERO:
                    continue
                coef = B[l, c]
                if coef == ZERO:
                    continue
                terms.append(coef * d)
        return SCHOUTEN_FACTOR * sum(terms, ZERO)

    return Trivector.from_function(chart, raw, antisymmetrize=True)


def lie_derivative_bivector(E: VectorField, B: Bivector) -> Bivector:
    """(L_E B)^{IJ} = E^L d_L B^{IJ} - B^{LJ} d_L E^I - B^{IL} d_L E^J."""
    chart = _same_chart(E, B)
    names = chart.names
    e = E.components

    def entry(i, j):
        terms = []
        for l, name in enumerate(names):
            terms.append(e[l] * diff(B[i, j], name))
            terms.append(-(B[l, j] * diff(e[i], name)))
            terms.append(-(B[i, l] * diff(e[j], name)))
        return sum(terms, ZERO)

    return Bivector.from_function(chart, entry)


def hamiltonian_vector_field(B: Bivector, H) -> VectorField:
    """X^I = B^{IJ} d_J H."""
    H = as_expr(H)
    chart = B.chart
    grad = [diff(H, n) for n in chart.names]
    comps = []
    for i in range(chart.dim):
        comps.append(snap(sum((B[i, j] * grad[j] for j in range(chart.dim) if j != i), ZERO)))
    return VectorField(chart, comps)


def sharp(B: Bivector, a: OneForm) -> VectorField:
    """Vector field with components X^J = a_I B^{IJ}."""
    chart = _same_chart(B, a)
    n = chart.dim
    return VectorField(chart, [snap(sum((a[i] * B[i, j] for i in range(n)), ZERO)) for j in range(n)])


def flat(w: TwoForm, X: VectorField) -> OneForm:
    """One-form with components a_I = X^J w_{JI} (inverse of :func:`sharp`
    when ``w`` is the inverse matrix of the bivector)."""
    chart = _same_chart(w, X)
    n = chart.dim
    return OneForm(chart, [snap(sum((X[j] * w[j, i] for j in range(n)), ZERO)) for i in range(n)])


def invert_bivector(B: Bivector) -> TwoForm:
    """Two-form whose coefficient matrix is the inverse of B's."""
    n = B.chart.dim
    if n % 2:
        raise SingularBivectorError(f"odd dimension {n}: an antisymmetric matrix is singular")
    try:
        inv = symmatrix.inverse(B.matrix())
    except symmatrix.SingularMatrixError as exc:
        raise SingularBivectorError(str(exc)) from None
    return TwoForm.from_matrix(B.chart, inv)


def exterior_derivative(w: TwoForm) -> ThreeForm:
    """(dw)_{IJK} = d_I w_{JK} + d_J w_{KI} + d_K w_{IJ}."""
    names = w.chart.names

    def entry(i, j, k):
        return diff(w[j, k], names[i]) + diff(w[k, i], names[j]) + diff(w[i, j], names[k])

    return ThreeForm.from_function(w.chart, entry)


def exterior_derivative_1form(a: OneForm) -> TwoForm:
    """(da)_{IJ} = d_I a_J - d_J a_I."""
    names = a.chart.names
    return TwoForm.from_function(a.chart, lambda i, j: diff(a[j], names[i]) - diff(a[i], names[j]))


def contract_product(B: Bivector, w: TwoForm) -> tuple:
    """Matrix product B^{IJ} w_{JK} (identity when w = B^{-1})."""
    _same_chart(B, w)
    return symmatrix.matmul(B.matrix(), w.matrix())


__all__ = [
    "Chart", "VectorField", "OneForm", "Bivector", "Trivector", "TwoForm", "ThreeForm",
    "ChartMismatchError", "SingularBivectorError", "SCHOUTEN_FACTOR",
    "lie_bracket", "wedge", "wedge3", "wedge_forms", "schouten_self",
    "lie_derivative_bivector", "hamiltonian_vector_field", "sharp", "flat",
    "invert_bivector", "exterior_derivative", "exterior_derivative_1form", "contract_product",
]
