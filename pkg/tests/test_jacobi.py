import random
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from almostpoisson import presets
from almostpoisson.exterior import (
    Bivector,
    Chart,
    Trivector,
    TwoForm,
    VectorField,
    exterior_derivative,
    invert_bivector,
    wedge3,
)
from almostpoisson.jacobi import (
    AnsatzInconsistentError,
    DegenerateFormError,
    ShapeError,
    check_LE,
    classify,
    conformal_factor_search,
    jacobi_defect,
    restriction_condition,
    solve_E_pointwise,
    solve_E_symbolic_compressed,
)
from almostpoisson.symexpr import Const, equal, evaluate, parse, sample_points

from oracles import CONTACT_P0_RESIDUAL, contact_constrained_at, heisenberg_constrained_residual, lsq_residual_exact

S4 = Chart(("x", "y", "u1", "u2"))
P5 = Chart(("x", "y", "z", "u1", "u2"))
P0 = {"x": 0.0, "y": 0.0, "z": 0.0, "u1": 1.0, "u2": 1.0}


def compressed(a, b):
    r = parse(f"({a})*u1 + ({b})*u2")
    return Bivector(S4, {("x", "u1"): 1, ("y", "u2"): 1, ("u1", "u2"): r})


def canonical():
    return Bivector(S4, {("x", "u1"): 1, ("y", "u2"): 1})


# -- defect


def test_defect_of_orthonormal_frame_bracket_matches_up_to_sign():
    B = presets.build_preset("contact-orthonormal").constrained.bivector
    e3 = VectorField(P5, [0, parse("-x/sqrt(1+x^2)"), parse("1/sqrt(1+x^2)"), 0, 0])
    plane = Bivector(P5, {("u1", "u2"): 1})
    target = wedge3(e3, plane).scale(parse("2/(1+x^2)"))
    assert jacobi_defect(B).equals(target.scale(-1))


def test_defect_of_heisenberg_metric_bracket_matches_up_to_sign():
    B = presets.build_preset("contact-heisenberg").constrained.bivector
    assert jacobi_defect(B).equals(Trivector(P5, {("z", "u1", "u2"): -2}))


# -- pointwise solve


def test_p0_residual_matches_exact_oracle():
    B = presets.build_preset("contact-euclidean").constrained.bivector
    _, res = solve_E_pointwise(B, jacobi_defect(B), P0)
    assert abs(res - CONTACT_P0_RESIDUAL) <= 1e-9


def test_exact_oracle_agrees_with_runtime_at_rational_points():
    B = presets.build_preset("contact-euclidean").constrained.bivector
    T = jacobi_defect(B)
    for x, u2 in [(Fraction(1, 2), Fraction(3, 2)), (Fraction(-7, 5), Fraction(1, 3)), (Fraction(2), Fraction(-1))]:
        Bq, Tq = contact_constrained_at(x, u2)
        _, exact = lsq_residual_exact(Bq, Tq)
        p = {"x": float(x), "y": 0.3, "z": -0.4, "u1": 0.9, "u2": float(u2)}
        assert abs(solve_E_pointwise(B, T, p)[1] - exact) <= 1e-12


def test_heisenberg_residual_closed_form():
    B = presets.build_preset("contact-heisenberg").constrained.bivector
    T = jacobi_defect(B)
    for x in (0.0, 0.5, 1.0, 1.7, 2.0):
        p = dict(P0, x=x)
        assert abs(solve_E_pointwise(B, T, p)[1] - heisenberg_constrained_residual(x)) <= 1e-12


def test_pointwise_matches_symbolic_E_on_compressed_family():
    a, b = "x*y/(2 + x^2)", "-x/(1+x^2) + y^2/5"
    B = compressed(a, b)
    T = jacobi_defect(B)
    E = solve_E_symbolic_compressed(B, T)
    for p, _ in sample_points([B[2, 3]], 10, seed=4):
        e, res = solve_E_pointwise(B, T, p)
        assert res < 1e-10
        assert np.allclose(e, [evaluate(c, p) for c in E.components], atol=1e-8)


def test_zero_target_gives_zero_E():
    B = canonical()
    e, res = solve_E_pointwise(B, Trivector(S4, {}), {"x": 1, "y": 1, "u1": 1, "u2": 1})
    assert res == 0.0 and np.allclose(e, 0)


# -- symbolic E


def test_symbolic_E_euclidean():
    B = presets.build_preset("contact-euclidean").compressed.bivector
    E = solve_E_symbolic_compressed(B)
    assert E.equals(VectorField(S4, [0, 0, parse("-x/(1+x^2)"), 0]))
    assert wedge3(E, B).scale(2).equals(jacobi_defect(B))


def test_symbolic_E_heisenberg_is_zero():
    B = presets.build_preset("contact-heisenberg").compressed.bivector
    assert solve_E_symbolic_compressed(B).is_zero()
    assert jacobi_defect(B).is_zero()


def test_symbolic_E_generic_ratios():
    a, b = parse("x*y/(3 + y^2)"), parse("x^2 - y/2")
    B = compressed(a, b)
    E = solve_E_symbolic_compressed(B)
    assert E.equals(VectorField(S4, [0, 0, b, -a]))


def test_symbolic_E_rejects_wrong_shape():
    B = Bivector(S4, {("x", "u1"): 1, ("y", "u2"): 1, ("u1", "u2"): parse("u1^2")})
    with pytest.raises(ShapeError):
        solve_E_symbolic_compressed(B)
    with pytest.raises(ShapeError):
        solve_E_symbolic_compressed(Bivector(S4, {("x", "y"): 1}))


# -- Lie derivative and restriction condition


def test_LE_compressed_family_reduces_to_restriction():
    a, b = parse("x*y"), parse("x^2 - y^3")
    B = compressed(a, b)
    L = check_LE(B, solve_E_symbolic_compressed(B))
    expected = -restriction_condition(a, b)
    assert equal(L["u1", "u2"], expected)
    assert len(L.nonzero_items()) == 1


def test_restriction_euclidean_and_heisenberg():
    assert restriction_condition(Const(0), parse("-x/(1+x^2)")) == Const(0)
    assert restriction_condition(Const(0), Const(0)) == Const(0)


def test_restriction_counterexamples():
    assert restriction_condition(parse("x"), Const(0)) == Const(1)
    # a ratio depending on y alone is not differentiated in x
    assert restriction_condition(parse("y"), Const(0)) == Const(0)


# -- conformal factor


def test_conformal_factor_euclidean():
    Om = invert_bivector(presets.build_preset("contact-euclidean").compressed.bivector)
    f = conformal_factor_search(Om, "x")
    assert f.expr is not None and equal(f.expr, parse("1/sqrt(1+x^2)"))
    assert exterior_derivative(Om.scale(f.expr)).is_zero(tol=1e-9)
    assert f(0.0) == 1.0


def test_conformal_factor_of_closed_form_is_one():
    Om = invert_bivector(canonical())
    assert conformal_factor_search(Om, "x").expr == Const(1)


def test_conformal_ansatz_inconsistent():
    Om = TwoForm(S4, {("u1", "x"): 1, ("u2", "y"): 1, ("x", "y"): parse("y*u2")})
    with pytest.raises(AnsatzInconsistentError):
        conformal_factor_search(Om, "x")


def test_conformal_factor_numeric_fallback():
    # canonical form divided by (1 + x^2)^2: rational rate, closed-form factor
    Om = TwoForm(S4, {("u1", "x"): parse("1/(1 + x^2)^2"), ("u2", "y"): parse("1/(1 + x^2)^2")})
    f = conformal_factor_search(Om, "x")
    assert f.expr is not None and equal(f.expr, parse("(1 + x^2)^2"))
    # rate h = x has no table entry: f = exp(x^2/2) numerically
    Om2 = TwoForm(S4, {("u1", "x"): 1, ("u2", "y"): 1, ("x", "y"): parse("x*u2")})
    f2 = conformal_factor_search(Om2, "x")
    assert f2.expr is None
    assert abs(f2(1.0) - np.exp(0.5)) < 1e-9
    Om3 = TwoForm(S4, {("u1", "x"): 1, ("u2", "y"): parse("1/(1 + x^4)")})
    g = conformal_factor_search(Om3, "x")
    assert g.expr is None
    assert abs(g(0.0) - 1.0) < 1e-14
    # f = 1 + x^4 solves f' + h f = 0 with h = -4x^3/(1+x^4)
    assert abs(g(1.3) - (1 + 1.3 ** 4)) < 1e-9


def test_conformal_exponential_table_entry():
    Om = TwoForm(S4, {("u1", "x"): 1, ("u2", "y"): 1, ("x", "y"): parse("u2")})
    f = conformal_factor_search(Om, "x")
    assert f.kind == "exponential"
    assert abs(f(1.0) - np.exp(-f.constant)) < 1e-15


def test_conformal_degenerate_form():
    with pytest.raises(DegenerateFormError):
        conformal_factor_search(TwoForm(S4, {("x", "y"): 1}), "x")
    with pytest.raises(DegenerateFormError):
        conformal_factor_search(TwoForm(P5, {("x", "y"): 1}), "z")


# -- classify


def test_classify_constrained_contact_is_not_jacobi():
    v = classify(presets.build_preset("contact-euclidean").constrained.bivector)
    assert v.tag == "NotJacobi"
    assert v.residual > 1e-6
    assert min(r for _, r in v.diagnostics["pointwise"]) >= CONTACT_P0_RESIDUAL - 0.1 - 1e-9


def test_constrained_contact_residual_never_drops_below_oracle_bound():
    # at every sampled point the residual stays at the order of the p0 value
    B = presets.build_preset("contact-euclidean").constrained.bivector
    T = jacobi_defect(B)
    for p, _ in sample_points(list(B.coeffs.values()), 25, variables=P5.names, seed=12):
        assert solve_E_pointwise(B, T, p)[1] > 0.5


def test_classify_euclidean_compressed_is_conformal():
    v = classify(presets.build_preset("contact-euclidean").compressed.bivector)
    assert v.tag == "ConformalSymplectic"
    assert equal(v.f.expr, parse("1/sqrt(1+x^2)"))


def test_classify_canonical_is_poisson():
    assert classify(canonical()).tag == "Poisson"


def test_classify_random_constant_bivectors_are_poisson():
    rng = random.Random(17)
    for _ in range(10):
        B = Bivector(P5, {idx: rng.randint(-4, 4) for idx in combinations(range(5), 2)})
        assert classify(B).tag == "Poisson"


def test_classify_restriction_violation():
    v = classify(compressed("x", "0"))
    assert v.tag == "NotJacobi"
    assert v.residual > 1e-6
    assert v.E is not None


def test_classify_jacobi_without_closed_conformal_factor():
    # r = y u1 passes the restriction; f = exp(-y^2/2) has no closed form here
    v = classify(compressed("y", "0"))
    assert v.tag == "ConformalSymplectic"
    assert v.f.expr is None
    assert v.f.variable == "y"
    assert abs(v.f(1.2) - np.exp(-1.2 ** 2 / 2)) < 1e-9


def test_conformal_consistency_of_verdicts():
    for a, b in [("0", "-x/(1+x^2)"), ("x/(1+x^2)", "0"), ("0", "0")]:
        B = compressed(a, b)
        v = classify(B)
        if v.tag == "ConformalSymplectic" and v.f.expr is not None:
            assert exterior_derivative(invert_bivector(B).scale(v.f.expr)).is_zero(tol=1e-9)


def test_not_jacobi_residual_exceeds_threshold():
    v = classify(presets.build_preset("contact-orthonormal").constrained.bivector, threshold=1e-6)
    assert v.tag == "NotJacobi" and v.residual > 1e-6
