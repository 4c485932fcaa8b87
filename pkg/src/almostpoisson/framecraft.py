"""Moving frames, quasi-momenta and the constrained / compressed brackets.

Conventions: a frame is given by vector fields ``e_J = e_J^L d/dq_L``; the
coframe ``eps_I`` is the dual basis (rows of the inverse frame matrix).
Quasi-momenta ``u_I`` are fiber coordinates with ``p_L = u_I (eps_I)_L``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import symmatrix
from .exterior import Bivector, Chart, OneForm, VectorField, hamiltonian_vector_field, lie_bracket
from .symexpr import (
    HALF,
    ONE,
    ZERO,
    Expr,
    as_expr,
    diff,
    equal,
    free_variables,
    is_zero,
    parse,
    sample_points,
    snap,
    substitute_many,
)


class FrameError(ValueError):
    pass


class MetricError(ValueError):
    pass


class NonQuadraticHamiltonianError(ValueError):
    pass


class SingularEliminationError(ArithmeticError):
    pass


class InvarianceError(ValueError):
    def __init__(self, what: str, variable: str):
        super().__init__(f"{what} depends on fiber variable {variable!r}")
        self.what = what
        self.variable = variable


def momentum_labels(n: int, prefix: str = "u") -> tuple:
    return tuple(f"{prefix}{i + 1}" for i in range(n))


@dataclass(frozen=True)
class MovingFrame:
    chart: Chart
    vectors: tuple
    m: int
    coframe: tuple

    @property
    def n(self) -> int:
        return self.chart.dim

    @property
    def admissible(self) -> tuple:
        return self.vectors[: self.m]

    def matrix(self) -> tuple:
        """Frame matrix F with F[L][J] = e_J^L."""
        return tuple(tuple(self.vectors[j][l] for j in range(self.n)) for l in range(self.n))

    def coframe_matrix(self) -> tuple:
        """C[I][L] = (eps_I)_L."""
        return tuple(eps.components for eps in self.coframe)

    def decompose(self, X: VectorField) -> tuple:
        """Frame components of X: X = sum_I eps_I(X) e_I."""
        return tuple(eps(X) for eps in self.coframe)


def build_frame(chart: Chart, vectors: Sequence, m: int, *, tol: float = 1e-10) -> MovingFrame:
    """Frame from ``n`` vector fields whose first ``m`` span the constraints."""
    vecs = tuple(v if isinstance(v, VectorField) else VectorField(chart, v) for v in vectors)
    n = chart.dim
    if len(vecs) != n:
        raise FrameError(f"need {n} vector fields, got {len(vecs)}")
    if not 1 <= m < n:
        raise FrameError(f"admissible count m={m} must satisfy 1 <= m < {n}")
    for v in vecs:
        if v.chart != chart:
            raise FrameError("frame vectors live on a different chart")
    F = tuple(tuple(vecs[j][l] for j in range(n)) for l in range(n))
    try:
        C = symmatrix.inverse(F)
    except symmatrix.SingularMatrixError:
        raise FrameError("frame matrix is singular") from None
    coframe = tuple(OneForm(chart, C[i]) for i in range(n))
    for i in range(n):
        for j in range(n):
            pairing = sum((C[i][l] * F[l][j] for l in range(n)), ZERO)
            if not equal(pairing, ONE if i == j else ZERO, tol=tol):
                raise FrameError(f"duality check failed for eps_{i + 1}(e_{j + 1})")
    return MovingFrame(chart, vecs, m, coframe)


def structure_matrix(frame: MovingFrame, labels: Sequence[str] | None = None) -> tuple:
    """R_{JK} = -u_I eps_I([e_J, e_K])."""
    n = frame.n
    labels = tuple(labels or momentum_labels(n))
    u = [as_expr(parse(l)) for l in labels]
    R = [[ZERO] * n for _ in range(n)]
    for j in range(n):
        for k in range(j + 1, n):
            br = lie_bracket(frame.vectors[j], frame.vectors[k])
            val = snap(-sum((u[i] * frame.coframe[i](br) for i in range(n)), ZERO))
            R[j][k] = val
            R[k][j] = snap(-val)
    return tuple(tuple(r) for r in R)


@dataclass(frozen=True)
class MetricSpec:
    """Kinetic energy 2T = g_{IJ} qdot^I qdot^J, plus a base potential."""

    g: tuple
    potential: Expr = ZERO

    def __post_init__(self):
        object.__setattr__(self, "g", symmatrix.as_matrix(self.g))
        object.__setattr__(self, "potential", as_expr(self.potential))
        n = len(self.g)
        if any(len(r) != n for r in self.g):
            raise MetricError("metric must be square")

    @property
    def n(self) -> int:
        return len(self.g)

    def check(self, samples: int = 20, **kw) -> None:
        g = self.g
        n = self.n
        for i in range(n):
            for j in range(i + 1, n):
                if not equal(g[i][j], g[j][i], **kw):
                    raise MetricError(f"metric not symmetric at ({i + 1},{j + 1})")
        minors = [symmatrix.det([row[:k] for row in g[:k]]) for k in range(1, n + 1)]
        for _p, vals in sample_points(minors, samples, **kw):
            if min(vals) <= 0:
                raise MetricError("metric not positive definite on the sampling box")


def hamiltonian_from_metric(
    metric: MetricSpec, frame: MovingFrame, labels: Sequence[str] | None = None
) -> Expr:
    """H = 1/2 p.g^{-1}.p + V with p_L = u_I (eps_I)_L."""
    n = frame.n
    if metric.n != n:
        raise MetricError(f"metric is {metric.n}x{metric.n}, frame has dimension {n}")
    labels = tuple(labels or momentum_labels(n))
    try:
        ginv = symmatrix.inverse(metric.g)
    except symmatrix.SingularMatrixError:
        raise MetricError("metric is singular") from None
    u = [parse(l) for l in labels]
    C = frame.coframe_matrix()
    p = [sum((u[i] * C[i][l] for i in range(n)), ZERO) for l in range(n)]
    kinetic = sum((p[a] * ginv[a][b] * p[b] for a in range(n) for b in range(n)), ZERO)
    return snap(HALF * kinetic + metric.potential)


@dataclass(frozen=True)
class ConstrainedSystem:
    chart: Chart
    bivector: Bivector
    hamiltonian: Expr
    elimination: Mapping[str, Expr]
    frame: MovingFrame
    labels: tuple
    R: tuple
    R_constrained: tuple
    fiber: tuple = ()
    name: str = ""

    @property
    def base_names(self) -> tuple:
        return self.frame.chart.names

    @property
    def momentum_names(self) -> tuple:
        return self.labels[: self.frame.m]


def constrain(
    frame: MovingFrame,
    H,
    labels: Sequence[str] | None = None,
    *,
    fiber: Sequence[str] = (),
    name: str = "",
) -> ConstrainedSystem:
    """Impose dH/du_alpha = 0 and assemble the bracket on P.

    The bivector is written in the coordinates {q_1..q_n, u_1..u_m}:
    ``B^{q_L u_j} = e_j^L``, ``B^{u_i u_j} = R~_{ij}``, ``B^{q q} = 0``.
    """
    H = as_expr(H)
    n, m = frame.n, frame.m
    labels = tuple(labels or momentum_labels(n))
    if len(labels) != n:
        raise FrameError(f"need {n} momentum labels")
    ui, ua = labels[:m], labels[m:]
    for a in labels:
        for b in labels:
            for c in labels:
                if not is_zero(diff(diff(diff(H, a), b), c)):
                    raise NonQuadraticHamiltonianError(f"H is not quadratic in {labels}")
    A = [[snap(diff(diff(H, a), b)) for b in ua] for a in ua]
    for row in A:
        for entry in row:
            if free_variables(entry) & set(labels):
                raise NonQuadraticHamiltonianError("elimination block depends on momenta")
    at_zero = {a: ZERO for a in ua}
    rhs = [substitute_many(diff(H, a), at_zero) for a in ua]
    try:
        Ainv = symmatrix.inverse(A)
    except symmatrix.SingularMatrixError:
        raise SingularEliminationError("dH/du_alpha = 0 cannot be solved for u_alpha") from None
    elimination = {
        a: snap(-sum((Ainv[k][l] * rhs[l] for l in range(len(ua))), ZERO)) for k, a in enumerate(ua)
    }
    R = structure_matrix(frame, labels)
    Rt = tuple(tuple(snap(substitute_many(R[i][j], elimination)) for j in range(n)) for i in range(n))
    qn = frame.chart.names
    chart = Chart(qn + ui)
    coeffs = {}
    for j in range(m):
        for l, q in enumerate(qn):
            coeffs[(q, ui[j])] = frame.vectors[j][l]
    for i in range(m):
        for j in range(i + 1, m):
            coeffs[(ui[i], ui[j])] = Rt[i][j]
    Ht = snap(substitute_many(H, elimination))
    return ConstrainedSystem(
        chart=chart,
        bivector=Bivector(chart, coeffs),
        hamiltonian=Ht,
        elimination=elimination,
        frame=frame,
        labels=labels,
        R=R,
        R_constrained=Rt,
        fiber=tuple(fiber),
        name=name,
    )


@dataclass(frozen=True)
class CompressedSystem:
    chart: Chart
    bivector: Bivector
    hamiltonian: Expr
    reconstruction: Mapping[str, Expr] = field(default_factory=dict)
    parent: ConstrainedSystem | None = None
    name: str = ""


def compress(cs: ConstrainedSystem, fiber: Sequence[str] | None = None) -> CompressedSystem:
    """Delete the fiber rows/columns of a fiber-invariant constrained system.

    ``reconstruction`` maps each fiber variable to its rate dz/dt as an
    expression on the compressed chart.
    """
    fiber = tuple(fiber if fiber is not None else cs.fiber)
    if not fiber:
        raise ValueError("no fiber variables given")
    for z in fiber:
        if z not in cs.base_names:
            raise ValueError(f"{z!r} is not a base coordinate")
    for z in fiber:
        for key, v in cs.bivector.items():
            if not is_zero(diff(v, z)):
                names = tuple(cs.chart.names[i] for i in key)
                raise InvarianceError(f"bivector coefficient {names}", z)
        if not is_zero(diff(cs.hamiltonian, z)):
            raise InvarianceError("Hamiltonian", z)
        for j, e in enumerate(cs.frame.admissible):
            for comp in e.components:
                if not is_zero(diff(comp, z)):
                    raise InvarianceError(f"admissible frame vector e_{j + 1}", z)
    keep = tuple(n for n in cs.chart.names if n not in fiber)
    chart = Chart(keep)
    coeffs = {}
    for (i, j), v in cs.bivector.items():
        a, b = cs.chart.names[i], cs.chart.names[j]
        if a in fiber or b in fiber:
            continue
        coeffs[(a, b)] = v
    xh = hamiltonian_vector_field(cs.bivector, cs.hamiltonian)
    recon = {z: xh[z] for z in fiber}
    return CompressedSystem(
        chart=chart,
        bivector=Bivector(chart, coeffs),
        hamiltonian=cs.hamiltonian,
        reconstruction=recon,
        parent=cs,
        name=cs.name,
    )


# -- the z-invariant contact setting with the Heisenberg frame


def heisenberg_frame(names: Sequence[str] = ("x", "y", "z")) -> MovingFrame:
    chart = Chart(tuple(names))
    x = names[0]
    return build_frame(
        chart,
        [
            VectorField.basis(chart, names[0]),
            VectorField(chart, [0, 1, x]),
            VectorField.basis(chart, names[2]),
        ],
        2,
    )


def _is_heisenberg(frame: MovingFrame) -> bool:
    if frame.n != 3 or frame.m != 2:
        return False
    ref = heisenberg_frame(frame.chart.names)
    return all(a.equals(b) for a, b in zip(frame.vectors, ref.vectors))


def gamma_from_metric(metric: MetricSpec, frame: MovingFrame) -> tuple:
    """gamma with H_kin = gamma_{ij} u_i u_j, i.e. gamma = 1/2 C g^{-1} C^T."""
    if metric.n != 3 or not _is_heisenberg(frame):
        raise FrameError("gamma_from_metric needs a 3x3 metric and the Heisenberg frame")
    ginv = symmatrix.inverse(metric.g)
    C = frame.coframe_matrix()
    return tuple(
        tuple(
            snap(HALF * sum((C[i][a] * ginv[a][b] * C[j][b] for a in range(3) for b in range(3)), ZERO))
            for j in range(3)
        )
        for i in range(3)
    )


def gamma_ratios(gamma) -> tuple:
    """(gamma13/gamma33, gamma23/gamma33)."""
    return snap(gamma[0][2] / gamma[2][2]), snap(gamma[1][2] / gamma[2][2])


def gamma_ratios_closed_form(metric: MetricSpec, x1: str = "x") -> tuple:
    """The two ratios written directly in terms of metric entries g_{ij}
    for the Heisenberg frame (basis x1 = x, x2 = y, x3 = z).

    With A = g11 g22 - g12^2, B = g11 g23 - g12 g13, D = g11 g33 - g13^2,
    P = g12 g23 - g13 g22, Q = g12 g33 - g13 g23 (cofactors of g):
    gamma13/gamma33 = (P + x Q)/den, gamma23/gamma33 = -(B + x D)/den,
    den = A + 2 x B + x^2 D.
    """
    g = metric.g
    x = parse(x1)
    g11, g12, g13 = g[0][0], g[0][1], g[0][2]
    g22, g23, g33 = g[1][1], g[1][2], g[2][2]
    A = g11 * g22 - g12 * g12
    B = g11 * g23 - g12 * g13
    D = g11 * g33 - g13 * g13
    P = g12 * g23 - g13 * g22
    Q = g12 * g33 - g13 * g23
    den = A + 2 * x * B + x * x * D
    return snap((P + x * Q) / den), snap(-(B + x * D) / den)


def gamma_from_hamiltonian(H, labels: Sequence[str] = ("u1", "u2", "u3")) -> tuple:
    """Read gamma off a quadratic Hamiltonian: gamma_ij = 1/2 d2H/du_i du_j."""
    H = as_expr(H)
    return tuple(tuple(snap(HALF * diff(diff(H, a), b)) for b in labels) for a in labels)


def is_pure_kinetic_sum(H, labels: Sequence[str]) -> bool:
    """True when H samples equal to 1/2 sum u_I^2."""
    target = sum((HALF * parse(l) ** 2 for l in labels), ZERO)
    return equal(H, target)


__all__ = [
    "MovingFrame", "MetricSpec", "ConstrainedSystem", "CompressedSystem",
    "FrameError", "MetricError", "NonQuadraticHamiltonianError", "SingularEliminationError",
    "InvarianceError",
    "build_frame", "structure_matrix", "hamiltonian_from_metric", "constrain", "compress",
    "heisenberg_frame", "gamma_from_metric", "gamma_ratios", "gamma_ratios_closed_form",
    "gamma_from_hamiltonian", "momentum_labels", "is_pure_kinetic_sum",
]
