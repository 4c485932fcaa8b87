"""Poisson / Jacobi / conformally symplectic verdicts for bivectors.

A pair (B, E) is Jacobi when ``[B,B] = 2 E^B`` and ``L_E B = 0``.  Existence
of E is first tested pointwise: at each sample point the map
``e -> 2 e^B(p)`` is linear and a least-squares solve tells whether the
target trivector lies in its range.  A symbolic E is then produced for the
compressed-contact family (canonical blocks plus one ``du1^du2`` entry) or
recovered from a conformal factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import integrate

from .exterior import (
    Bivector,
    Chart,
    OneForm,
    SingularBivectorError,
    Trivector,
    TwoForm,
    VectorField,
    exterior_derivative,
    flat,
    invert_bivector,
    lie_derivative_bivector,
    schouten_self,
    sharp,
    wedge3,
    wedge_forms,
)
from .symexpr import (
    ONE,
    ZERO,
    Box,
    DEFAULT_BOX,
    Const,
    EvaluationError,
    Expr,
    as_expr,
    diff,
    equal,
    evaluate,
    free_variables,
    is_zero,
    lambdify,
    parse,
    sample_points,
    snap,
    sqrt,
)

DEFAULT_THRESHOLD = 1e-6
DEFAULT_POINTS = 25
_EPS = 1e-30


class ShapeError(ValueError):
    pass


class VerificationError(ArithmeticError):
    pass


class AnsatzInconsistentError(ValueError):
    pass


class DegenerateFormError(ArithmeticError):
    pass


# -- verdict


@dataclass
class StructureVerdict:
    tag: str  # "Poisson" | "ConformalSymplectic" | "Jacobi" | "NotJacobi"
    defect: Trivector
    f: "ConformalFactor | None" = None
    E: VectorField | None = None
    witness: dict | None = None
    residual: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __str__(self):
        if self.tag == "ConformalSymplectic":
            return f"ConformalSymplectic(f = {self.f})"
        if self.tag == "Jacobi":
            return f"Jacobi(E = {self.E})"
        if self.tag == "NotJacobi":
            return f"NotJacobi(residual = {self.residual:.6g})"
        return self.tag


# -- operations


def jacobi_defect(B: Bivector) -> Trivector:
    """The Schouten self-bracket [B,B]; zero iff B is Poisson."""
    return schouten_self(B)


def _triples(n: int) -> list:
    return list(combinations(range(n), 3))


def wedge_matrix(Bp: np.ndarray) -> np.ndarray:
    """Matrix of e -> 2 e^B on canonical triples, for a numeric B (n x n)."""
    n = Bp.shape[0]
    rows = _triples(n)
    M = np.zeros((len(rows), n))
    for r, (i, j, k) in enumerate(rows):
        M[r, i] += 2.0 * Bp[j, k]
        M[r, j] += 2.0 * Bp[k, i]
        M[r, k] += 2.0 * Bp[i, j]
    return M


def _numeric_bivector(B: Bivector, point) -> np.ndarray:
    n = B.chart.dim
    out = np.zeros((n, n))
    for (i, j), v in B.coeffs.items():
        val = evaluate(v, point)
        out[i, j], out[j, i] = val, -val
    return out


def _numeric_trivector(T: Trivector, point) -> np.ndarray:
    idx = _triples(T.chart.dim)
    return np.array([evaluate(T.coeffs[t], point) if t in T.coeffs else 0.0 for t in idx])


def solve_E_pointwise(B: Bivector, T: Trivector, point: Mapping[str, float]) -> tuple:
    """Least-squares E with 2 E^B = T at ``point``.

    Returns ``(E components, relative residual)`` where the residual is
    ``||2E^B - T|| / max(||T||, 1e-30)`` on canonical triple coefficients.
    """
    if T.chart != B.chart:
        raise ValueError("bivector and trivector on different charts")
    Bp = _numeric_bivector(B, point)
    t = _numeric_trivector(T, point)
    M = wedge_matrix(Bp)
    e, *_ = np.linalg.lstsq(M, t, rcond=None)
    res = np.linalg.norm(M @ e - t) / max(np.linalg.norm(t), _EPS)
    return e, float(res)


def _eq37_parts(B: Bivector):
    """(x, y, u1, u2) names and the du1^du2 coefficient r, or raise ShapeError."""
    c = B.chart
    if c.dim != 4:
        raise ShapeError("compressed shape needs a 4-dimensional chart")
    expect = {(0, 2): ONE, (1, 3): ONE, (0, 1): ZERO, (0, 3): ZERO, (1, 2): ZERO}
    for key, val in expect.items():
        if not equal(B[key], val):
            raise ShapeError(f"entry {key} of the bivector is not {val}")
    r = B[2, 3]
    u1, u2 = c.names[2], c.names[3]
    for a in (u1, u2):
        for b in (u1, u2):
            if not is_zero(diff(diff(r, a), b)):
                raise ShapeError("du1^du2 coefficient is not linear in the momenta")
    if not is_zero(r - (diff(r, u1) * parse(u1) + diff(r, u2) * parse(u2))):
        raise ShapeError("du1^du2 coefficient is not homogeneous-linear in the momenta")
    return c.names, r


def compressed_ratios(B: Bivector) -> tuple:
    """For r = a u1 + b u2 return (a, b) = (gamma13/gamma33, gamma23/gamma33)."""
    names, r = _eq37_parts(B)
    return snap(diff(r, names[2])), snap(diff(r, names[3]))


def solve_E_symbolic_compressed(B: Bivector, T: Trivector | None = None) -> VectorField:
    """E = mu d/du1 + nu d/du2 with mu = b, nu = -a for r = a u1 + b u2.

    Verifies ``2 E^B = [B,B]`` by sampling.
    """
    a, b = compressed_ratios(B)
    E = VectorField(B.chart, [0, 0, b, snap(-a)])
    T = T if T is not None else jacobi_defect(B)
    if not wedge3(E, B).scale(2).equals(T):
        raise VerificationError("2 E^B does not reproduce [B,B]")
    return E


def check_LE(B: Bivector, E: VectorField) -> Bivector:
    """L_E B, which must vanish for a Jacobi pair."""
    return lie_derivative_bivector(E, B)


def restriction_condition(ratio13, ratio23, x: str = "x", y: str = "y") -> Expr:
    """d/dx (gamma13/gamma33) + d/dy (gamma23/gamma33)."""
    return snap(diff(as_expr(ratio13), x) + diff(as_expr(ratio23), y))


# -- conformal factor


@dataclass(frozen=True)
class ConformalFactor:
    """Positive f(v) with f(0) = 1 such that f * Omega is closed.

    ``expr`` is set when f has a closed form in the expression grammar;
    otherwise f is evaluated as exp(-int_0^v h) numerically.  ``rate`` is h,
    from f' + h f = 0.
    """

    variable: str
    rate: Expr
    expr: Expr | None = None
    kind: str = "numeric"
    constant: float | None = None

    def __call__(self, value: float) -> float:
        if self.expr is not None:
            return evaluate(self.expr, {self.variable: value})
        if self.kind == "exponential":
            return math.exp(-self.constant * value)
        h = lambdify([self.rate], [self.variable])
        integral, _ = integrate.quad(lambda s: h(s)[0], 0.0, value, epsabs=1e-13, epsrel=1e-12)
        return math.exp(-integral)

    def as_expr(self) -> Expr:
        if self.expr is None:
            raise ValueError(f"conformal factor of kind {self.kind!r} has no closed form")
        return self.expr

    def __str__(self):
        if self.expr is not None:
            return str(self.expr)
        if self.kind == "exponential":
            return f"exp({-self.constant!r}*{self.variable})"
        return f"exp(-integral_0^{self.variable} ({self.rate}))"


def _as_rational(value: float, tol: float = 1e-9):
    fr = Fraction(value).limit_denominator(1000)
    return fr if abs(float(fr) - value) <= tol * max(1.0, abs(value)) else None


def _constant_value(e: Expr, box: Box = DEFAULT_BOX):
    """Value of ``e`` if it samples as a constant, else None."""
    for v in free_variables(e):
        if not is_zero(diff(e, v), box=box):
            return None
    if not free_variables(e):
        return evaluate(e, {})
    (p, (val,)), = sample_points([e], 1, box=box)
    return val


def _half_power(base: Expr, twice_exponent: int) -> Expr:
    """base ** (twice_exponent / 2) as an expression."""
    if twice_exponent % 2 == 0:
        return snap(base ** (twice_exponent // 2))
    return snap(sqrt(base) ** twice_exponent)


def _closed_form(h: Expr, v: str) -> ConformalFactor:
    """f = exp(-int_0^v h) in closed form for h = 0, c, or c v/(1+v^2)."""
    vv = parse(v)
    if is_zero(h):
        return ConformalFactor(v, h, ONE, "closed")
    c = _constant_value(h)
    if c is not None:
        return ConformalFactor(v, h, None, "exponential", c)
    c = _constant_value(snap(h * (1 + vv * vv) / vv))
    if c is not None:
        cr = _as_rational(c)
        if cr is not None and cr.denominator == 1:
            # (1 + v^2)^(-c/2)
            return ConformalFactor(v, h, _half_power(1 + vv * vv, -int(cr)), "closed")
    return ConformalFactor(v, h, None, "numeric")


def conformal_factor_search(omega: TwoForm, v: str) -> ConformalFactor:
    """Find f = f(v) with d(f omega) = 0, normalized by f(0) = 1.

    Every coefficient of ``f' dv^omega + f d omega`` must reduce to one ODE
    ``f' + h(v) f = 0``; otherwise :class:`AnsatzInconsistentError`.
    """
    chart = omega.chart
    if chart.dim % 2:
        raise DegenerateFormError("odd-dimensional two-form is degenerate")
    if v not in chart.names:
        raise ValueError(f"ansatz variable {v!r} not in chart {chart}")
    dv = OneForm(chart, [1 if n == v else 0 for n in chart.names])
    slope = wedge_forms(dv, omega)  # coefficient of f'
    dw = exterior_derivative(omega)  # coefficient of f
    if slope.is_zero():
        raise DegenerateFormError(f"d{v} ^ omega vanishes")
    h = None
    for idx in sorted(set(slope.coeffs) | set(dw.coeffs)):
        a, b = slope[idx], dw[idx]
        if is_zero(a):
            if not is_zero(b):
                raise AnsatzInconsistentError(f"component {idx} forces f = 0")
            continue
        cand = snap(b / a)
        if h is None:
            h = cand
        elif not equal(h, cand):
            raise AnsatzInconsistentError(f"components disagree on f'/f at {idx}")
    h = h if h is not None else ZERO
    for n in free_variables(h) - {v}:
        if not is_zero(diff(h, n)):
            raise AnsatzInconsistentError(f"f'/f depends on {n!r}, not only on {v!r}")
    return _closed_form(h, v)


def _log_derivative_from_E(B: Bivector, E: VectorField, omega: TwoForm) -> OneForm:
    """d(ln f) with E = B^#(d ln f)."""
    return flat(omega, E)


def conformal_from_E(B: Bivector, E: VectorField, omega: TwoForm | None = None):
    """Conformal factor whose log-differential reproduces E, or None."""
    omega = omega if omega is not None else invert_bivector(B)
    alpha = _log_derivative_from_E(B, E, omega)
    deps = set()
    for c in alpha.components:
        deps |= free_variables(c)
    deps = {n for n in deps if any(not is_zero(diff(c, n)) for c in alpha.components)}
    candidates = sorted(deps) if len(deps) == 1 else list(B.chart.names)
    if not deps and all(is_zero(c) for c in alpha.components):
        candidates = list(B.chart.names)[:1]
    for v in candidates:
        try:
            f = conformal_factor_search(omega, v)
        except (AnsatzInconsistentError, DegenerateFormError):
            continue
        return f
    return None


def _E_from_factor(B: Bivector, f: ConformalFactor) -> VectorField:
    chart = B.chart
    dlog = OneForm(chart, [snap(-f.rate) if n == f.variable else 0 for n in chart.names])
    return sharp(B, dlog)


def is_invertible(B: Bivector) -> bool:
    if B.chart.dim % 2:
        return False
    try:
        invert_bivector(B)
    except SingularBivectorError:
        return False
    return True


def _worst(values: Sequence[tuple]) -> tuple:
    return max(values, key=lambda pr: pr[1])


def classify(
    B: Bivector,
    *,
    points: int = DEFAULT_POINTS,
    threshold: float = DEFAULT_THRESHOLD,
    box: Box = DEFAULT_BOX,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
) -> StructureVerdict:
    """Decide Poisson / ConformalSymplectic / Jacobi / NotJacobi for B."""
    T = jacobi_defect(B)
    diag: dict = {"defect": T}
    if T.is_zero(box=box, seed=seed, rng=rng):
        return StructureVerdict("Poisson", T, diagnostics=diag)

    exprs = list(B.coeffs.values()) + list(T.coeffs.values())
    samples = sample_points(exprs, points, variables=B.chart.names, box=box, seed=seed, rng=rng)
    pointwise = []
    for point, _vals in samples:
        e, res = solve_E_pointwise(B, T, point)
        pointwise.append((point, res, e))
    diag["pointwise"] = [(p, r) for p, r, _ in pointwise]
    diag["best_fit_E"] = [e for _, _, e in pointwise]
    wp, wres, _ = max(pointwise, key=lambda t: t[1])
    if wres > threshold:
        diag["reason"] = "2E^B = [B,B] has no solution at the witness point"
        return StructureVerdict("NotJacobi", T, witness=wp, residual=wres, diagnostics=diag)

    E = None
    f = None
    invertible = is_invertible(B)
    try:
        E = solve_E_symbolic_compressed(B, T)
        diag["confidence"] = "symbolic"
    except ShapeError:
        if invertible:
            omega = invert_bivector(B)
            for v in B.chart.names:
                try:
                    cand = conformal_factor_search(omega, v)
                except (AnsatzInconsistentError, DegenerateFormError):
                    continue
                Ecand = _E_from_factor(B, cand)
                if wedge3(Ecand, B).scale(2).equals(T):
                    E, f = Ecand, cand
                    diag["confidence"] = "symbolic"
                    break
    except VerificationError:
        E = None
    if E is None:
        diag["confidence"] = "sampled-only"
        return StructureVerdict("Jacobi", T, diagnostics=diag)

    LE = check_LE(B, E)
    diag["E"] = E
    diag["LE"] = LE
    if not LE.is_zero(box=box):
        worst = []
        for point, _vals in sample_points(list(LE.coeffs.values()), points, variables=B.chart.names, box=box, seed=seed):
            vals = LE.evaluate(point)
            worst.append((point, max(abs(x) for x in vals.values())))
        wp, wres = _worst(worst)
        diag["reason"] = "L_E B does not vanish"
        return StructureVerdict("NotJacobi", T, E=E, witness=wp, residual=wres, diagnostics=diag)
    if invertible:
        if f is None:
            f = conformal_from_E(B, E)
        if f is not None:
            return StructureVerdict("ConformalSymplectic", T, f=f, E=E, diagnostics=diag)
    return StructureVerdict("Jacobi", T, E=E, diagnostics=diag)


__all__ = [
    "StructureVerdict", "ConformalFactor",
    "ShapeError", "VerificationError", "AnsatzInconsistentError", "DegenerateFormError",
    "jacobi_defect", "wedge_matrix", "solve_E_pointwise", "solve_E_symbolic_compressed",
    "compressed_ratios", "check_LE", "restriction_condition", "conformal_factor_search",
    "conformal_from_E", "is_invertible", "classify",
]
