"""Built-in systems on Q = R^3 with the contact constraint zdot = x ydot.

A :class:`SystemDefinition` is the textual description of a system (what a
config file holds); :func:`build` turns it into frame, Hamiltonian,
constrained system and, when fiber variables are given, the compressed
system.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

from . import framecraft as fc
from .exterior import Chart, VectorField
from .symexpr import parse, to_text


@dataclass(frozen=True)
class RunParams:
    x0: tuple = ()  # (name, value) pairs
    dt: float = 1e-3
    t_end: float = 10.0
    invariants: tuple = ()  # (name, expression text) pairs

    def x0_dict(self) -> dict:
        return dict(self.x0)


@dataclass(frozen=True)
class SystemDefinition:
    name: str
    chart: tuple
    frame: tuple  # n vector fields, each a tuple of expression texts
    m: int
    metric: tuple | None = None  # row-major tuple of tuples of texts
    hamiltonian: str | None = None
    potential: str | None = None
    fiber: tuple = ()
    labels: tuple | None = None
    description: str = ""
    run: RunParams = field(default_factory=RunParams)

    def validate(self) -> None:
        n = len(self.chart)
        if len(self.frame) != n or any(len(v) != n for v in self.frame):
            raise ValueError(f"frame must hold {n} vectors of {n} components")
        if (self.metric is None) == (self.hamiltonian is None):
            raise ValueError("give exactly one of metric or hamiltonian")
        if self.metric is not None and (len(self.metric) != n or any(len(r) != n for r in self.metric)):
            raise ValueError(f"metric must be {n}x{n}")
        for z in self.fiber:
            if z not in self.chart:
                raise ValueError(f"fiber variable {z!r} not in chart")
        texts = [c for v in self.frame for c in v]
        if self.metric is not None:
            texts += [c for r in self.metric for c in r]
        for t in texts + [self.hamiltonian or "0", self.potential or "0"]:
            parse(t)
        for _, t in self.run.invariants:
            parse(t)


@dataclass(frozen=True)
class BuiltSystem:
    definition: SystemDefinition
    frame: fc.MovingFrame
    hamiltonian: object
    constrained: fc.ConstrainedSystem
    compressed: fc.CompressedSystem | None
    metric: fc.MetricSpec | None


def build(defn: SystemDefinition) -> BuiltSystem:
    defn.validate()
    chart = Chart(defn.chart)
    vecs = [VectorField(chart, [parse(c) for c in v]) for v in defn.frame]
    frame = fc.build_frame(chart, vecs, defn.m)
    labels = defn.labels or fc.momentum_labels(len(defn.chart))
    metric = None
    if defn.metric is not None:
        metric = fc.MetricSpec([[parse(c) for c in r] for r in defn.metric], parse(defn.potential or "0"))
        metric.check()
        H = fc.hamiltonian_from_metric(metric, frame, labels)
    else:
        H = parse(defn.hamiltonian)
        if defn.potential:
            H = H + parse(defn.potential)
    cs = fc.constrain(frame, H, labels, fiber=defn.fiber, name=defn.name)
    comp = fc.compress(cs) if defn.fiber else None
    return BuiltSystem(defn, frame, H, cs, comp, metric)


_HEISENBERG_FRAME = (("1", "0", "0"), ("0", "1", "x"), ("0", "0", "1"))
_ORTHONORMAL_FRAME = (
    ("1", "0", "0"),
    ("0", "1/sqrt(1 + x^2)", "x/sqrt(1 + x^2)"),
    ("0", "-x/sqrt(1 + x^2)", "1/sqrt(1 + x^2)"),
)
_EUCLIDEAN = (("1", "0", "0"), ("0", "1", "0"), ("0", "0", "1"))
_HEISENBERG_METRIC = (("1", "0", "0"), ("0", "1 + x^2", "-x"), ("0", "-x", "1"))
# a generic z-invariant metric, positive definite for |x|, |y| <= 2
_GENERAL_METRIC = (("1", "y/4", "0"), ("y/4", "1", "x/4"), ("0", "x/4", "1"))

_STANDARD_RUN = RunParams(
    x0=(("x", 0.0), ("y", 0.0), ("u1", 1.0), ("u2", 1.0)),
    dt=1e-3,
    t_end=10.0,
    invariants=(),
)

_PRESETS = {
    "contact-euclidean": SystemDefinition(
        name="contact-euclidean",
        chart=("x", "y", "z"),
        frame=_HEISENBERG_FRAME,
        m=2,
        metric=_EUCLIDEAN,
        fiber=("z",),
        description="Euclidean kinetic energy, Heisenberg frame d/dx, d/dy + x d/dz, d/dz",
        run=replace(_STANDARD_RUN, invariants=(("H", "1/2*(u1^2 + u2^2/(1 + x^2))"), ("px", "u1"))),
    ),
    "contact-orthonormal": SystemDefinition(
        name="contact-orthonormal",
        chart=("x", "y", "z"),
        frame=_ORTHONORMAL_FRAME,
        m=2,
        metric=_EUCLIDEAN,
        fiber=("z",),
        description="Euclidean kinetic energy, frame orthonormal for the Euclidean metric",
        run=replace(_STANDARD_RUN, invariants=(("H", "1/2*(u1^2 + u2^2)"), ("px", "u1"))),
    ),
    "contact-heisenberg": SystemDefinition(
        name="contact-heisenberg",
        chart=("x", "y", "z"),
        frame=_HEISENBERG_FRAME,
        m=2,
        metric=_HEISENBERG_METRIC,
        fiber=("z",),
        description="Heisenberg-invariant metric; the Heisenberg frame is orthonormal for it",
        run=replace(_STANDARD_RUN, invariants=(("H", "1/2*(u1^2 + u2^2)"), ("px", "u1"))),
    ),
    "contact-general-metric": SystemDefinition(
        name="contact-general-metric",
        chart=("x", "y", "z"),
        frame=_HEISENBERG_FRAME,
        m=2,
        metric=_GENERAL_METRIC,
        fiber=("z",),
        description="z-invariant metric g(x, y) taken from config (a generic default is provided)",
        run=replace(_STANDARD_RUN, t_end=2.0, invariants=()),
    ),
}


def names() -> tuple:
    return tuple(_PRESETS)


def get(name: str, **overrides) -> SystemDefinition:
    try:
        defn = _PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(_PRESETS)}") from None
    return replace(defn, **overrides) if overrides else defn


def with_metric(name: str, g) -> SystemDefinition:
    """Preset with its metric replaced (rows of expression texts or Exprs)."""
    rows = tuple(tuple(c if isinstance(c, str) else to_text(c) for c in r) for r in g)
    return get(name, metric=rows, hamiltonian=None)


@lru_cache(maxsize=None)
def build_preset(name: str) -> BuiltSystem:
    return build(get(name))
