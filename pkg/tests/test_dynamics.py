import math

import numpy as np
import pytest

from almostpoisson import dynamics as dyn
from almostpoisson import presets
from almostpoisson.exterior import Bivector, Chart, invert_bivector
from almostpoisson.jacobi import conformal_factor_search
from almostpoisson.symexpr import Const, UnboundVariableError, parse

from oracles import CONTACT_T1, CONTACT_T10

X0 = {"x": 0.0, "y": 0.0, "u1": 1.0, "u2": 1.0}
S4 = Chart(("x", "y", "u1", "u2"))


@pytest.fixture(scope="module")
def contact():
    return presets.build_preset("contact-euclidean").compressed


@pytest.fixture(scope="module")
def short_run(contact):
    return dyn.integrate(contact.bivector, contact.hamiltonian, X0, 1.0, 1e-3, name="contact")


@pytest.fixture(scope="module")
def standard_run(contact):
    return dyn.integrate(contact.bivector, contact.hamiltonian, X0, 10.0, 1e-3, name="contact")


# -- integrate


def test_u1_is_conserved_exactly(short_run):
    assert np.all(short_run.column("u1") == 1.0)


def test_u2_at_one_second(short_run):
    assert abs(short_run.final["u2"] - math.sqrt(2.0)) <= 1e-6


def test_trajectory_metadata(short_run):
    assert short_run.names == ("x", "y", "u1", "u2")
    assert short_run.integrator == "rk4" and short_run.step == 1e-3
    assert len(short_run) == 1001
    assert np.all(np.diff(short_run.t) > 0)


def test_energy_conserved_over_standard_run(standard_run, contact):
    H = dyn.invariant_values(standard_run, contact.hamiltonian)
    assert np.max(np.abs(H - H[0])) <= 1e-8


def test_energy_rate_estimate_within_budget(standard_run, contact):
    H = dyn.invariant_values(standard_run, contact.hamiltonian)
    rate = np.diff(H) / np.diff(standard_run.t)
    # a drift budget of 1e-7 spread over t = 10
    assert np.max(np.abs(rate)) * standard_run.step <= 1e-7


@pytest.mark.parametrize("name", ["contact-euclidean", "contact-orthonormal", "contact-heisenberg"])
def test_energy_drift_on_constrained_presets(name):
    b = presets.build_preset(name)
    cs = b.constrained
    x0 = {"x": 0.0, "y": 0.0, "z": 0.0, "u1": 1.0, "u2": 1.0}
    traj = dyn.integrate(cs.bivector, cs.hamiltonian, x0, 10.0, 1e-3)
    rep = dyn.invariant_report(traj, {"H": cs.hamiltonian})
    assert rep["H"].max_rel_drift < 1e-7


def test_integrate_rejects_bad_steps(contact):
    with pytest.raises(ValueError):
        dyn.integrate(contact.bivector, contact.hamiltonian, X0, 1.0, 0.0)
    with pytest.raises(ValueError):
        dyn.integrate(contact.bivector, contact.hamiltonian, X0, -1.0, 1e-3)
    with pytest.raises(ValueError):
        dyn.integrate(contact.bivector, contact.hamiltonian, X0, 1.0, 0.3)


def test_missing_initial_variable(contact):
    with pytest.raises(UnboundVariableError):
        dyn.integrate(contact.bivector, contact.hamiltonian, {"x": 0.0, "y": 0.0, "u1": 1.0}, 1.0, 1e-3)


def test_singularity_reports_time_and_partial_trajectory():
    # x' = 1, y' = 1/(1 - x): the field blows up at x = 1, t = 0.5
    B = Bivector(S4, {("x", "u1"): 1, ("y", "u2"): 1})
    H = parse("u1 + u2 / (1 - x)")
    with pytest.raises(dyn.IntegrationSingularityError) as info:
        dyn.integrate(B, H, {"x": 0.5, "y": 0.0, "u1": 0.0, "u2": 0.0}, 1.0, 0.125)
    err = info.value
    assert 0.0 < err.t <= 0.5
    assert len(err.partial) >= 1
    assert set(err.state) == set(S4.names)


# -- oracle


def test_oracle_at_time_zero():
    ref = dyn.contact_oracle(0.3, -0.2, 0.7, 1.5, 2.0, 0.0)
    assert ref == {"x": 0.3, "y": -0.2, "z": 0.7, "u1": 1.5, "u2": 2.0 * math.sqrt(1 + 0.09)}


def test_oracle_with_zero_speed():
    x0, A = 0.8, 1.3
    ref = dyn.contact_oracle(x0, 0.0, 0.0, 0.0, A, 2.0)
    assert ref["x"] == x0
    assert abs(ref["u2"] - A * math.sqrt(1 + x0 * x0)) < 1e-15
    ydot = A / math.sqrt(1 + x0 * x0)
    assert abs(ref["y"] - 2.0 * ydot) < 1e-12
    assert abs(ref["z"] - x0 * ref["y"]) < 1e-12


def test_oracle_matches_frozen_values():
    for t, frozen in ((1.0, CONTACT_T1), (10.0, CONTACT_T10)):
        ref = dyn.contact_oracle(0.0, 0.0, 0.0, 1.0, 1.0, t)
        for k, v in frozen.items():
            assert abs(ref[k] - v) <= 1e-9, k


def test_oracle_agrees_with_hand_integrated_form():
    for args in [(0.0, 0.0, 0.0, 1.0, 1.0, 3.0), (0.5, 1.0, -1.0, -0.7, 2.0, 4.0)]:
        q = dyn.contact_oracle(*args)
        c = dyn.contact_closed_form(*args)
        for k in q:
            assert abs(q[k] - c[k]) <= 1e-9


def test_simpson_tolerance():
    assert abs(dyn.simpson(np.exp, 0.0, 1.0) - (math.e - 1)) < 1e-10
    assert dyn.simpson(np.exp, 2.0, 2.0) == 0.0


def test_contact_parameters():
    assert dyn.contact_parameters({"x": 0.0, "y": 0.0, "u1": 1.0, "u2": 1.0}) == (0.0, 0.0, 0.0, 1.0, 1.0)
    x0, _, _, _, A = dyn.contact_parameters({"x": 1.0, "y": 0.0, "u1": 1.0, "u2": 2.0})
    assert abs(A - 2 / math.sqrt(2)) < 1e-15


def test_rk4_order_at_coarse_steps(contact):
    errs = []
    for dt in (0.02, 0.01):
        traj = dyn.integrate(contact.bivector, contact.hamiltonian, X0, 10.0, dt)
        errs.append(max(dyn.oracle_deviation(traj, every=50).values()))
    assert 12 <= errs[0] / errs[1] <= 20


# -- fiber reconstruction


def test_reconstructed_fiber_matches_oracle(short_run, contact):
    traj = dyn.reconstruct_fiber(short_run, contact.reconstruction)
    assert abs(traj.final["z"] - CONTACT_T1["z"]) <= 1e-5
    dev = dyn.oracle_deviation(traj, every=100)
    assert dev["z"] <= 1e-5


def test_reconstruction_satisfies_constraint_by_construction(short_run):
    rate = parse("x * u2 / (1 + x^2)")
    traj = dyn.reconstruct_fiber(short_run, {"z": rate}, {"z": 2.0})
    z = traj.column("z")
    x, u2, t = short_run.column("x"), short_run.column("u2"), short_run.t
    zdot_trap = np.diff(z) / np.diff(t)
    ydot = u2 / (1 + x * x)
    expected = 0.5 * (x[1:] * ydot[1:] + x[:-1] * ydot[:-1])
    assert np.max(np.abs(zdot_trap - expected)) < 1e-10
    assert z[0] == 2.0


def test_zero_trajectory_keeps_fiber_constant(contact):
    traj = dyn.integrate(contact.bivector, contact.hamiltonian, {"x": 0.4, "y": 0.0, "u1": 0.0, "u2": 0.0}, 1.0, 0.01)
    z = dyn.reconstruct_fiber(traj, {"z": parse("x*u2/(1+x^2)")}, {"z": -3.0}).column("z")
    assert np.all(z == -3.0)


def test_zero_speed_run_has_linear_fiber(contact):
    x0 = 0.8
    traj = dyn.integrate(contact.bivector, contact.hamiltonian, {"x": x0, "y": 0.0, "u1": 0.0, "u2": 1.0}, 1.0, 0.01)
    traj = dyn.reconstruct_fiber(traj, {"z": parse("x*u2/(1+x^2)")})
    y, z = traj.column("y"), traj.column("z")
    assert np.allclose(z, x0 * y, atol=1e-13)
    assert np.allclose(np.diff(y, 2), 0.0, atol=1e-13)


def test_reconstruct_rejects_unbound_variable(short_run):
    with pytest.raises(UnboundVariableError):
        dyn.reconstruct_fiber(short_run, {"z": parse("w * x")})


# -- invariant reports


def test_invariant_report_standard_run(standard_run, contact):
    rep = dyn.invariant_report(standard_run, {"H": contact.hamiltonian, "px": parse("u1"), "u2": parse("u2")})
    assert rep["H"].max_abs_drift < 1e-8
    assert rep["px"].max_abs_drift < 1e-8
    assert rep["u2"].max_abs_drift > 0.1
    u2_end = math.sqrt(101.0)
    assert abs(rep["u2"].max_abs_drift - (u2_end - 1.0)) < 1e-6
    assert all(e.max_abs_drift >= 0 and e.max_rel_drift >= 0 for e in rep)
    assert "px" in str(rep)


def test_constant_invariant_has_zero_drift(short_run):
    rep = dyn.invariant_report(short_run, {"one": Const(1)})
    assert rep["one"].max_abs_drift == 0.0 and rep["one"].initial == 1.0


# -- time rescaling


def _euclidean_factor():
    b = presets.build_preset("contact-euclidean").compressed
    return conformal_factor_search(invert_bivector(b.bivector), "x")


def test_rescaled_flow_matches_direct_flow(short_run, contact):
    f = _euclidean_factor()
    # dt/ds = sqrt(1 + x^2) >= 1, so s = 1 already covers t in [0, 1]
    resc = dyn.reparametrized_flow(contact.bivector, contact.hamiltonian, f, X0, 1.0, 1e-3)
    assert resc.t[-1] >= 1.0
    assert dyn.rescaling_deviation(short_run, resc, 1.0) <= 1e-6


def test_unit_factor_reproduces_direct_flow(short_run, contact):
    resc = dyn.reparametrized_flow(contact.bivector, contact.hamiltonian, Const(1), X0, 1.0, 1e-3)
    assert np.allclose(resc.states, short_run.states, rtol=0, atol=1e-14)
    assert np.allclose(resc.t, resc.s, atol=1e-12)


def test_u1_conserved_in_rescaled_time(contact):
    resc = dyn.reparametrized_flow(contact.bivector, contact.hamiltonian, _euclidean_factor(), X0, 2.0, 1e-2)
    assert np.all(resc.column("u1") == 1.0)
    assert resc.integrator == "rk4-rescaled"


def test_rescaled_flow_rejects_nonpositive_factor(contact):
    with pytest.raises(dyn.NonPositiveFactorError):
        dyn.reparametrized_flow(contact.bivector, contact.hamiltonian, parse("x - 1"), X0, 1.0, 1e-2)


def test_rescaling_deviation_requires_coverage(short_run, contact):
    resc = dyn.reparametrized_flow(contact.bivector, contact.hamiltonian, Const(1), X0, 0.5, 1e-3)
    with pytest.raises(ValueError):
        dyn.rescaling_deviation(short_run, resc, 1.0)


# -- CSV


def test_csv_round_trip(tmp_path, short_run, contact):
    traj = dyn.reconstruct_fiber(short_run, {"z": parse("x*u2/(1+x^2)")})
    path = tmp_path / "run.csv"
    dyn.write_csv(traj, path, {"H": contact.hamiltonian, "u1": parse("u1")})
    data = dyn.read_csv(path)
    assert list(data) == ["t", "x", "y", "u1", "u2", "z", "H", "inv_u1"]
    assert np.array_equal(data["u2"], traj.column("u2"))
    assert np.array_equal(data["z"], traj.column("z"))


def test_csv_has_s_column_for_rescaled_runs(tmp_path, contact):
    resc = dyn.reparametrized_flow(contact.bivector, contact.hamiltonian, Const(1), X0, 0.1, 1e-2)
    path = tmp_path / "r.csv"
    resc.to_csv(path)
    with open(path) as fh:
        assert fh.readline().strip() == "t,s,x,y,u1,u2"
