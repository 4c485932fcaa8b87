"""Probabilistic identity testing by evaluation at random points.

Two expressions are declared equal when they agree, to a relative
tolerance, at every one of ``samples`` random points.  This is a Monte Carlo
test: a true identity always passes, a false one fails with overwhelming
probability unless the two sides happen to coincide on a set of positive
measure inside the sampling box.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .nodes import EvaluationError, Expr, as_expr, free_variables, lambdify

DEFAULT_SAMPLES = 20
DEFAULT_TOL = 1e-10
DEFAULT_RETRIES = 100
DEFAULT_SEED = 20240517


@dataclass(frozen=True)
class Box:
    """Per-variable sampling intervals.

    Each variable is drawn uniformly from the union of ``intervals``
    (weighted by length) unless ``overrides`` names its own union.
    """

    intervals: tuple = ((-2.0, -0.1), (0.1, 2.0))
    overrides: Mapping[str, tuple] = field(default_factory=dict)

    def draw(self, name: str, rng: np.random.Generator) -> float:
        ivs = self.overrides.get(name, self.intervals)
        lengths = np.array([hi - lo for lo, hi in ivs], dtype=float)
        k = rng.choice(len(ivs), p=lengths / lengths.sum()) if len(ivs) > 1 else 0
        lo, hi = ivs[k]
        return float(rng.uniform(lo, hi))

    def with_override(self, **intervals) -> "Box":
        merged = dict(self.overrides)
        merged.update(intervals)
        return Box(self.intervals, merged)


DEFAULT_BOX = Box()


def _rng(rng=None, seed=None) -> np.random.Generator:
    if rng is not None:
        return rng
    return np.random.default_rng(DEFAULT_SEED if seed is None else seed)


def sample_points(
    exprs: Sequence[Expr],
    n: int,
    *,
    variables: Iterable[str] | None = None,
    box: Box = DEFAULT_BOX,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
    retries: int = DEFAULT_RETRIES,
) -> list:
    """Draw ``n`` points at which every expression in ``exprs`` evaluates.

    Returns a list of ``(point, values)`` pairs.  A point where any expression
    fails to evaluate is redrawn; after ``retries`` consecutive failures the
    last evaluation error is raised.
    """
    exprs = [as_expr(e) for e in exprs]
    names = set(variables or ())
    for e in exprs:
        names |= free_variables(e)
    names = tuple(sorted(names))
    fn = lambdify(exprs, names)
    gen = _rng(rng, seed)
    out = []
    for _ in range(n):
        last = None
        for _attempt in range(retries):
            point = {v: box.draw(v, gen) for v in names}
            try:
                values = fn(*(point[v] for v in names))
            except EvaluationError as exc:
                last = exc
                continue
            if all(np.isfinite(values)):
                out.append((point, values))
                break
        else:
            raise last if last is not None else EvaluationError("no finite sample found")
    return out


def equal(
    a,
    b,
    samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
    *,
    box: Box = DEFAULT_BOX,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
    retries: int = DEFAULT_RETRIES,
) -> bool:
    """Probabilistic equality: ``|a(p) - b(p)| <= tol * (1 + |a(p)|)`` at
    ``samples`` random points of ``box``."""
    a, b = as_expr(a), as_expr(b)
    if a == b:
        return True
    for _point, (va, vb) in sample_points([a, b], samples, box=box, rng=rng, seed=seed, retries=retries):
        if abs(va - vb) > tol * (1.0 + abs(va)):
            return False
    return True


def is_zero(e, samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL, **kw) -> bool:
    from .nodes import ZERO

    return equal(e, ZERO, samples, tol, **kw)


def max_abs(e, samples: int = DEFAULT_SAMPLES, **kw) -> tuple:
    """Largest ``|e(p)|`` over sampled points, with the point attaining it."""
    pts = sample_points([as_expr(e)], samples, **kw)
    point, (val,) = max(pts, key=lambda pv: abs(pv[1][0]))
    return abs(val), point
