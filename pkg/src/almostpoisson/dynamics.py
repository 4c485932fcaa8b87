"""Integration of bracket flows, fiber reconstruction and drift reports.

The integrator is classical fixed-step RK4 on the Hamiltonian vector field
``x' = B grad H``, compiled once from its symbolic components.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import integrate as _sci

from .exterior import Bivector, hamiltonian_vector_field
from .symexpr import (
    EvaluationError,
    Expr,
    UnboundVariableError,
    as_expr,
    free_variables,
    lambdify,
)


class IntegrationSingularityError(ArithmeticError):
    """Raised when the vector field cannot be evaluated mid-run.

    ``partial`` holds the trajectory computed up to (and including) ``t``.
    """

    def __init__(self, message: str, t: float, state: Mapping[str, float], partial: "Trajectory"):
        super().__init__(f"{message} at t = {t!r}, state = {dict(state)}")
        self.t = t
        self.state = dict(state)
        self.partial = partial


class NonPositiveFactorError(ArithmeticError):
    pass


@dataclass
class Trajectory:
    names: tuple
    t: np.ndarray
    states: np.ndarray  # shape (samples, len(names))
    s: np.ndarray | None = None
    extra: dict = field(default_factory=dict)  # additional named columns
    system: str = ""
    integrator: str = "rk4"
    step: float = 0.0

    def __len__(self):
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        if name == "s" and self.s is not None:
            return self.s
        if name in self.names:
            return self.states[:, self.names.index(name)]
        return self.extra[name]

    def point(self, k: int) -> dict:
        out = dict(zip(self.names, map(float, self.states[k])))
        out.update({n: float(c[k]) for n, c in self.extra.items()})
        return out

    @property
    def final(self) -> dict:
        return self.point(-1)

    def resample(self, times: np.ndarray) -> np.ndarray:
        """States linearly interpolated at ``times`` (within the t range)."""
        return np.column_stack([np.interp(times, self.t, self.states[:, j]) for j in range(len(self.names))])

    def to_csv(self, path, invariants: Mapping[str, Expr] | None = None) -> None:
        write_csv(self, path, invariants)


def _compile_field(B: Bivector, H) -> tuple:
    X = hamiltonian_vector_field(B, as_expr(H))
    return X, lambdify(X.components, B.chart.names)


def _rk4_loop(rhs: Callable, y0: np.ndarray, h: float, steps: int, on_fail: Callable):
    ys = np.empty((steps + 1, y0.size))
    ys[0] = y0
    y = y0
    # poles show up as inf/nan and are reported below
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for k in range(steps):
            try:
                k1 = rhs(y)
                k2 = rhs(y + 0.5 * h * k1)
                k3 = rhs(y + 0.5 * h * k2)
                k4 = rhs(y + h * k3)
            except EvaluationError as exc:
                on_fail(str(exc), k, ys[: k + 1])
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(y)):
                on_fail("non-finite state", k, ys[: k + 1])
            ys[k + 1] = y
    return ys


def _step_count(span: float, step: float) -> int:
    if not (step > 0 and span > 0):
        raise ValueError("step and span must be positive")
    n = int(round(span / step))
    if abs(n * step - span) > 1e-9 * span:
        raise ValueError(f"span {span} is not a whole number of steps of {step}")
    return n


def _initial(names: Sequence[str], x0: Mapping[str, float]) -> np.ndarray:
    missing = [n for n in names if n not in x0]
    if missing:
        raise UnboundVariableError(missing[0])
    return np.array([float(x0[n]) for n in names])


def integrate(B: Bivector, H, x0: Mapping[str, float], t_end: float, dt: float, *, name: str = "") -> Trajectory:
    """RK4 solution of ``x' = (B grad H)(x)`` on ``[0, t_end]``."""
    names = B.chart.names
    _, fn = _compile_field(B, H)
    steps = _step_count(t_end, dt)
    rhs = lambda y: np.array(fn(*y))  # noqa: E731

    def fail(msg, k, done):
        part = Trajectory(names, dt * np.arange(len(done)), done.copy(), system=name, step=dt)
        raise IntegrationSingularityError(msg, k * dt, dict(zip(names, map(float, done[-1]))), part)

    ys = _rk4_loop(rhs, _initial(names, x0), dt, steps, fail)
    return Trajectory(names, dt * np.arange(steps + 1), ys, system=name, step=dt)


def reparametrized_flow(
    B: Bivector,
    H,
    f,
    x0: Mapping[str, float],
    s_end: float,
    ds: float,
    *,
    name: str = "",
) -> Trajectory:
    """RK4 in the rescaled time s for ``dx/ds = (1/f) B grad H``.

    Physical time is carried along through ``dt/ds = 1/f``.  ``f`` is an
    expression over the chart or a conformal factor object.
    """
    names = B.chart.names
    _, fn = _compile_field(B, H)
    f_of = _factor_callable(f, names)
    steps = _step_count(s_end, ds)
    n = len(names)

    def rhs(y):
        fv = f_of(y[:n])
        if not fv > 0:
            raise NonPositiveFactorError(f"conformal factor {fv!r} is not positive at {dict(zip(names, y[:n]))}")
        inv = 1.0 / fv
        out = np.empty(n + 1)
        out[:n] = inv * np.array(fn(*y[:n]))
        out[n] = inv
        return out

    def fail(msg, k, done):
        part = Trajectory(names, done[:, n].copy(), done[:, :n].copy(), s=ds * np.arange(len(done)), system=name, step=ds)
        raise IntegrationSingularityError(msg, float(done[-1, n]), dict(zip(names, map(float, done[-1, :n]))), part)

    y0 = np.append(_initial(names, x0), 0.0)
    ys = _rk4_loop(rhs, y0, ds, steps, fail)
    return Trajectory(
        names, ys[:, n].copy(), ys[:, :n].copy(), s=ds * np.arange(steps + 1),
        system=name, integrator="rk4-rescaled", step=ds,
    )


def _factor_callable(f, names: Sequence[str]) -> Callable:
    expr = getattr(f, "expr", None) if not isinstance(f, (Expr, str, int, float)) else as_expr(f)
    if expr is not None:
        g = lambdify([expr], names)
        return lambda y: g(*y)[0]
    # numeric conformal factor of a single variable
    j = list(names).index(f.variable)
    return lambda y: f(y[j])


def rescaling_deviation(direct: Trajectory, rescaled: Trajectory, t_max: float = 1.0) -> float:
    """Max state difference between the direct run and the rescaled run
    interpolated at the direct sample times in ``[0, t_max]``."""
    if rescaled.t[-1] < t_max - 1e-12:
        raise ValueError(f"rescaled run only reaches t = {rescaled.t[-1]!r}")
    mask = direct.t <= t_max + 1e-12
    times = direct.t[mask]
    cols = [rescaled.names.index(n) for n in direct.names]
    resampled = np.column_stack([np.interp(times, rescaled.t, rescaled.states[:, j]) for j in cols])
    return float(np.max(np.abs(resampled - direct.states[mask])))


# -- fiber reconstruction


def reconstruct_fiber(traj: Trajectory, rules: Mapping[str, object], initial: Mapping[str, float] | None = None) -> Trajectory:
    """Integrate each fiber rate ``dz/dt = rule(state)`` along ``traj`` by
    cumulative trapezoid; ``initial`` gives z(0) (default 0)."""
    initial = dict(initial or {})
    extra = dict(traj.extra)
    for z, rule in rules.items():
        rule = as_expr(rule)
        avail = set(traj.names) | set(traj.extra)
        unbound = sorted(free_variables(rule) - avail)
        if unbound:
            raise UnboundVariableError(unbound[0])
        cols = tuple(sorted(free_variables(rule)))
        fn = lambdify([rule], cols)
        data = [traj.column(c) for c in cols]
        rate = np.array([fn(*vals)[0] for vals in zip(*data)]) if cols else np.full(len(traj), fn()[0])
        extra[z] = float(initial.get(z, 0.0)) + _sci.cumulative_trapezoid(rate, traj.t, initial=0.0)
    return Trajectory(traj.names, traj.t, traj.states, traj.s, extra, traj.system, traj.integrator, traj.step)


# -- invariants


@dataclass(frozen=True)
class InvariantDrift:
    name: str
    expr: Expr
    initial: float
    max_abs_drift: float
    max_rel_drift: float


@dataclass(frozen=True)
class InvariantReport:
    entries: tuple

    def __getitem__(self, name: str) -> InvariantDrift:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def __iter__(self):
        return iter(self.entries)

    def __str__(self):
        rows = [f"{'invariant':<12} {'initial':>22} {'max |drift|':>12} {'max rel':>12}"]
        for e in self.entries:
            rows.append(f"{e.name:<12} {e.initial:>22.15g} {e.max_abs_drift:>12.3e} {e.max_rel_drift:>12.3e}")
        return "\n".join(rows)


def invariant_values(traj: Trajectory, expr) -> np.ndarray:
    expr = as_expr(expr)
    cols = tuple(sorted(free_variables(expr)))
    fn = lambdify([expr], cols)
    if not cols:
        return np.full(len(traj), fn()[0])
    data = [traj.column(c) for c in cols]
    return np.array([fn(*vals)[0] for vals in zip(*data)])


def invariant_report(traj: Trajectory, invariants: Mapping[str, object]) -> InvariantReport:
    out = []
    for name, expr in invariants.items():
        expr = as_expr(expr)
        vals = invariant_values(traj, expr)
        drift = float(np.max(np.abs(vals - vals[0])))
        scale = abs(vals[0])
        out.append(InvariantDrift(name, expr, float(vals[0]), drift, drift / scale if scale > 0 else drift))
    return InvariantReport(tuple(out))


# -- closed-form oracle for the contact system


def simpson(fn: Callable[[np.ndarray], np.ndarray], a: float, b: float, tol: float = 1e-10, max_halvings: int = 30) -> float:
    """Composite Simpson on [a, b], halving the step until two successive
    estimates differ by at most ``tol``."""
    if a == b:
        return 0.0
    n = 2 * max(1, math.ceil(4 * abs(b - a)))
    prev = _sci.simpson(fn(np.linspace(a, b, n + 1)), dx=(b - a) / n)
    for _ in range(max_halvings):
        n *= 2
        cur = _sci.simpson(fn(np.linspace(a, b, n + 1)), dx=(b - a) / n)
        if abs(cur - prev) <= tol:
            return float(cur)
        prev = cur
    raise ArithmeticError("Simpson quadrature did not converge")


def contact_oracle(x0: float, y0: float, z0: float, a: float, A: float, t: float, tol: float = 1e-10) -> dict:
    """State of the compressed contact flow with fiber, from its quadratures.

    x = x0 + a t, u1 = a, u2 = A sqrt(1 + x^2),
    y = y0 + int_0^t A / sqrt(1 + x(s)^2) ds,
    z = z0 + int_0^t x(s) A / sqrt(1 + x(s)^2) ds.
    """
    x = x0 + a * t
    root = lambda s: np.sqrt(1.0 + (x0 + a * s) ** 2)  # noqa: E731
    y = y0 + simpson(lambda s: A / root(s), 0.0, t, tol)
    z = z0 + simpson(lambda s: (x0 + a * s) * A / root(s), 0.0, t, tol)
    return {"x": x, "y": y, "z": z, "u1": a, "u2": A * math.sqrt(1.0 + x * x)}


def contact_closed_form(x0: float, y0: float, z0: float, a: float, A: float, t: float) -> dict:
    """The same state with y and z integrated by hand (a != 0)."""
    x = x0 + a * t
    y = y0 + (A / a) * (math.asinh(x) - math.asinh(x0))
    z = z0 + (A / a) * (math.sqrt(1 + x * x) - math.sqrt(1 + x0 * x0))
    return {"x": x, "y": y, "z": z, "u1": a, "u2": A * math.sqrt(1.0 + x * x)}


def contact_parameters(x0: Mapping[str, float]) -> tuple:
    """(x0, y0, z0, a, A) for a contact initial state over (x, y, [z,] u1, u2)."""
    xv = float(x0["x"])
    return xv, float(x0["y"]), float(x0.get("z", 0.0)), float(x0["u1"]), float(x0["u2"]) / math.sqrt(1 + xv * xv)


def oracle_deviation(traj: Trajectory, z0: float = 0.0, every: int = 1, tol: float = 1e-10) -> dict:
    """Max |numeric - oracle| per variable over every ``every``-th sample."""
    x0, y0, _, a, A = contact_parameters(traj.point(0))
    dev: dict = {}
    for k in range(0, len(traj), every):
        ref = contact_oracle(x0, y0, z0, a, A, float(traj.t[k]), tol)
        p = traj.point(k)
        for n, v in ref.items():
            if n in p:
                dev[n] = max(dev.get(n, 0.0), abs(p[n] - v))
    return dev


# -- CSV


def write_csv(traj: Trajectory, path, invariants: Mapping[str, object] | None = None) -> None:
    header = ["t"] + (["s"] if traj.s is not None else []) + list(traj.names) + list(traj.extra)
    cols = [traj.t] + ([traj.s] if traj.s is not None else []) + [traj.states[:, j] for j in range(len(traj.names))]
    cols += list(traj.extra.values())
    for name, expr in (invariants or {}).items():
        header.append(name if name not in header else f"inv_{name}")
        cols.append(invariant_values(traj, expr))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow(["%.17g" % v for v in row])


def read_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]) if body else np.empty((0, len(header)))
    return {h: data[:, j] for j, h in enumerate(header)}


__all__ = [
    "Trajectory", "InvariantDrift", "InvariantReport",
    "IntegrationSingularityError", "NonPositiveFactorError",
    "integrate", "reparametrized_flow", "rescaling_deviation", "reconstruct_fiber",
    "invariant_values", "invariant_report", "simpson", "contact_oracle", "contact_closed_form",
    "contact_parameters", "oracle_deviation", "write_csv", "read_csv",
]
