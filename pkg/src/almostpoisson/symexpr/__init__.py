"""Symbolic scalar expressions: parse, differentiate, substitute, evaluate,
and compare by random sampling."""

from .nodes import (
    HALF,
    ONE,
    ZERO,
    Add,
    Const,
    Div,
    DivisionByZeroError,
    EvaluationError,
    Expr,
    Mul,
    Neg,
    NegativeSqrtError,
    Pow,
    Sqrt,
    UnboundVariableError,
    Var,
    as_expr,
    depends_on,
    diff,
    evaluate,
    free_variables,
    gradient,
    lambdify,
    sqrt,
    substitute,
    substitute_many,
    symbols,
    var,
)
from .parser import ExprSyntaxError, NonIntegerExponentError, parse
from .printing import to_text
from .sampling import DEFAULT_BOX, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOL, Box, equal, is_zero, max_abs, sample_points
from .simplify import simplify

# short aliases
eval = evaluate  # noqa: A001


def snap(e) -> Expr:
    """``simplify(e)``, or the zero constant when ``e`` samples as zero."""
    e = simplify(as_expr(e))
    if isinstance(e, Const):
        return e
    try:
        return ZERO if is_zero(e) else e
    except EvaluationError:
        return e


__all__ = [
    "Add", "Const", "Div", "Expr", "Mul", "Neg", "Pow", "Sqrt", "Var",
    "ZERO", "ONE", "HALF",
    "EvaluationError", "UnboundVariableError", "DivisionByZeroError", "NegativeSqrtError",
    "ExprSyntaxError", "NonIntegerExponentError",
    "parse", "to_text", "diff", "gradient", "substitute", "substitute_many",
    "evaluate", "eval", "lambdify", "simplify", "snap",
    "equal", "is_zero", "max_abs", "sample_points", "Box", "DEFAULT_BOX",
    "DEFAULT_SEED", "DEFAULT_SAMPLES", "DEFAULT_TOL",
    "as_expr", "sqrt", "var", "symbols", "free_variables", "depends_on",
]
