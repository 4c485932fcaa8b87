import pytest

from almostpoisson import framecraft as fc
from almostpoisson import presets
from almostpoisson.exterior import Bivector, Chart, OneForm, VectorField, hamiltonian_vector_field, wedge
from almostpoisson.symexpr import Const, equal, is_zero, parse, substitute

XYZ = Chart(("x", "y", "z"))
P5 = Chart(("x", "y", "z", "u1", "u2"))


def E(text):
    return parse(text)


@pytest.fixture(scope="module")
def euclid():
    return presets.build_preset("contact-euclidean")


@pytest.fixture(scope="module")
def ortho():
    return presets.build_preset("contact-orthonormal")


@pytest.fixture(scope="module")
def heis():
    return presets.build_preset("contact-heisenberg")


# -- frames


def test_heisenberg_coframe(euclid):
    C = euclid.frame.coframe
    assert C[0].equals(OneForm(XYZ, [1, 0, 0]))
    assert C[1].equals(OneForm(XYZ, [0, 1, 0]))
    assert C[2].equals(OneForm(XYZ, [0, E("-x"), 1]))


def test_orthonormal_coframe_is_itself(ortho):
    F = ortho.frame
    for v, eps in zip(F.vectors, F.coframe):
        for a, b in zip(v.components, eps.components):
            assert equal(a, b)


def test_identity_frame():
    F = fc.build_frame(XYZ, [[1, 0, 0], [0, 1, 0], [0, 0, 1]], 2)
    for i, eps in enumerate(F.coframe):
        assert eps.equals(OneForm(XYZ, [1 if j == i else 0 for j in range(3)]))


def test_duality(ortho):
    F = ortho.frame
    for i, eps in enumerate(F.coframe):
        for j, v in enumerate(F.vectors):
            assert equal(eps(v), Const(1 if i == j else 0), tol=1e-10)


def test_singular_frame_rejected():
    with pytest.raises(fc.FrameError):
        fc.build_frame(XYZ, [[1, 0, 0], [2, 0, 0], [0, 0, 1]], 2)


# -- structure matrix


def _assert_matrix(M, expected):
    for i, row in enumerate(expected):
        for j, val in enumerate(row):
            assert equal(M[i][j], E(val)), (i, j, str(M[i][j]))


def test_R_heisenberg(euclid):
    _assert_matrix(euclid.constrained.R, [["0", "-u3", "0"], ["u3", "0", "0"], ["0", "0", "0"]])


def test_R_orthonormal(ortho):
    R = ortho.constrained.R
    assert equal(R[0][1], E("-u3/(1+x^2)"))
    assert equal(R[2][0], E("-u2/(1+x^2)"))
    assert equal(R[1][2], Const(0))


def test_R_coordinate_frame_vanishes():
    F = fc.build_frame(XYZ, [[1, 0, 0], [0, 1, 0], [0, 0, 1]], 2)
    assert all(is_zero(c) for row in fc.structure_matrix(F) for c in row)


def test_R_is_antisymmetric_and_linear_in_momenta(ortho):
    R = ortho.constrained.R
    for i in range(3):
        for j in range(3):
            assert equal(R[i][j], -R[j][i])
            scaled = R[i][j]
            for u in ("u1", "u2", "u3"):
                scaled = substitute(scaled, u, E(f"2*{u}"))
            assert equal(scaled, 2 * R[i][j])


# -- Hamiltonians


def test_euclidean_hamiltonian(euclid):
    assert equal(euclid.hamiltonian, E("1/2*(u1^2 + (u2 - x*u3)^2 + u3^2)"))


def test_heisenberg_metric_hamiltonian(heis):
    assert equal(heis.hamiltonian, E("1/2*(u1^2 + u2^2 + u3^2)"))


def test_orthonormal_hamiltonian(ortho):
    assert equal(ortho.hamiltonian, E("(u1^2 + u2^2 + u3^2)/2"))


def test_singular_metric_rejected():
    m = fc.MetricSpec([[1, 0, 0], [0, 0, 0], [0, 0, 1]])
    with pytest.raises(fc.MetricError):
        fc.hamiltonian_from_metric(m, fc.heisenberg_frame())


def test_indefinite_metric_rejected():
    with pytest.raises(fc.MetricError):
        fc.MetricSpec([[1, 0, 0], [0, -1, 0], [0, 0, 1]]).check()


# -- constraint elimination and compression


def test_contact_elimination(euclid):
    cs = euclid.constrained
    assert equal(cs.elimination["u3"], E("x*u2/(1+x^2)"))
    assert equal(cs.hamiltonian, E("1/2*(u1^2 + u2^2/(1+x^2))"))
    expected = Bivector(P5, {("x", "u1"): 1, ("y", "u2"): 1, ("z", "u2"): E("x"), ("u1", "u2"): E("-x*u2/(1+x^2)")})
    assert cs.bivector.equals(expected)


def test_elimination_solves_the_constraint(euclid):
    cs = euclid.constrained
    dH = euclid.hamiltonian.diff("u3")
    assert is_zero(substitute(dH, "u3", cs.elimination["u3"]))


@pytest.mark.parametrize("fixture", ["ortho", "heis"])
def test_orthonormal_shortcut_gives_frame_wedge(fixture, request):
    b = request.getfixturevalue(fixture)
    cs = b.constrained
    assert is_zero(cs.elimination["u3"])
    lift = [VectorField(P5, list(v.components) + [0, 0]) for v in b.frame.admissible]
    expected = wedge(lift[0], VectorField.basis(P5, "u1")) + wedge(lift[1], VectorField.basis(P5, "u2"))
    assert cs.bivector.equals(expected)


def test_constraint_is_respected_by_the_constrained_flow():
    for name in ("contact-euclidean", "contact-heisenberg"):
        cs = presets.build_preset(name).constrained
        X = hamiltonian_vector_field(cs.bivector, cs.hamiltonian)
        assert equal(X["z"], E("x") * X["y"])


def test_compressed_contact_system(euclid):
    c = euclid.compressed
    assert c.chart.names == ("x", "y", "u1", "u2")
    assert equal(c.bivector["u1", "u2"], E("-x*u2/(1+x^2)"))
    assert equal(c.hamiltonian, E("1/2*(u1^2 + u2^2/(1+x^2))"))
    assert equal(c.reconstruction["z"], E("x*u2/(1+x^2)"))
    X = hamiltonian_vector_field(c.bivector, c.hamiltonian)
    assert X.equals(VectorField(c.chart, [E("u1"), E("u2/(1+x^2)"), 0, E("x*u1*u2/(1+x^2)")]))


def test_general_compressed_shape():
    b = presets.build_preset("contact-general-metric")
    g = fc.gamma_from_metric(b.metric, b.frame)
    r13, r23 = fc.gamma_ratios(g)
    B = b.compressed.bivector
    assert equal(B["u1", "u2"], r13 * E("u1") + r23 * E("u2"))
    assert equal(B["x", "u1"], Const(1)) and equal(B["y", "u2"], Const(1))


def test_fiber_dependent_hamiltonian_is_rejected():
    F = fc.heisenberg_frame()
    cs = fc.constrain(F, E("1/2*(u1^2 + u2^2 + u3^2) + z"), fiber=("z",))
    with pytest.raises(fc.InvarianceError) as info:
        fc.compress(cs)
    assert info.value.variable == "z"


def test_non_quadratic_hamiltonian_is_rejected():
    with pytest.raises(fc.NonQuadraticHamiltonianError):
        fc.constrain(fc.heisenberg_frame(), E("u1^2 + u3^3"))


def test_singular_elimination_is_rejected():
    with pytest.raises(fc.SingularEliminationError):
        fc.constrain(fc.heisenberg_frame(), E("1/2*(u1^2 + u2^2)"))


# -- gamma ratios


def test_gamma_ratios_euclidean(euclid):
    g = fc.gamma_from_metric(euclid.metric, euclid.frame)
    r13, r23 = fc.gamma_ratios(g)
    assert is_zero(r13)
    assert equal(r23, E("-x/(1+x^2)"))
    h13, h23 = fc.gamma_ratios(fc.gamma_from_hamiltonian(euclid.hamiltonian))
    assert equal(h13, r13) and equal(h23, r23)


def test_gamma_heisenberg_metric(heis):
    g = fc.gamma_from_metric(heis.metric, heis.frame)
    assert is_zero(g[0][2]) and is_zero(g[1][2])


def test_gamma_closed_form_generic_metric():
    b = presets.build_preset("contact-general-metric")
    direct = fc.gamma_ratios(fc.gamma_from_metric(b.metric, b.frame))
    closed = fc.gamma_ratios_closed_form(b.metric)
    assert equal(direct[0], closed[0]) and equal(direct[1], closed[1])
    assert not is_zero(b.metric.g[0][1])


def test_gamma_closed_form_with_all_off_diagonal_entries():
    g = [["2", "x/5", "y/7"], ["x/5", "3", "1/3 + x*y/9"], ["y/7", "1/3 + x*y/9", "2 + x^2/4"]]
    m = fc.MetricSpec([[E(c) for c in row] for row in g])
    m.check()
    direct = fc.gamma_ratios(fc.gamma_from_metric(m, fc.heisenberg_frame()))
    closed = fc.gamma_ratios_closed_form(m)
    assert equal(direct[0], closed[0]) and equal(direct[1], closed[1])


def _naive_ratios(g):
    """A tempting closed form with the x sign reversed; right only at g = I."""
    x = E("x")
    g11, g12, g13, g22, g23, g33 = g[0][0], g[0][1], g[0][2], g[1][1], g[1][2], g[2][2]
    den = g11 * g22 - g12 * g12 - 2 * x * (g11 * g23 - g12 * g13) + x * x * (g11 * g33 - g13 * g13)
    r13 = (g12 * g23 - g13 * g22 - x * (g12 * g33 - g13 * g23)) / den
    r23 = (g11 * g23 - g12 * g13 - x * (g11 * g33 - g13 * g13)) / den
    return r13, r23


def test_naive_ratio_formulas_agree_only_at_the_identity(heis, euclid):
    pub = _naive_ratios(euclid.metric.g)
    assert is_zero(pub[0]) and equal(pub[1], E("-x/(1+x^2)"))
    # the Heisenberg metric has gamma23 = 0 but the naive formula gives -2x/(1+4x^2)
    pub_h = _naive_ratios(heis.metric.g)
    assert equal(pub_h[1], E("-2*x/(1+4*x^2)"))
    assert not is_zero(pub_h[1])


def test_gamma_requires_heisenberg_frame(ortho):
    with pytest.raises(fc.FrameError):
        fc.gamma_from_metric(ortho.metric, ortho.frame)
