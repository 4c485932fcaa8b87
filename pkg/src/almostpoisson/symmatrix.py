"""Small dense matrices of expressions (cofactor determinant and inverse)."""

from __future__ import annotations

from typing import Sequence

from .symexpr import ONE, ZERO, Expr, as_expr, simplify, snap

MAX_SYMBOLIC_DIM = 6


class SingularMatrixError(ArithmeticError):
    pass


def as_matrix(rows) -> tuple:
    return tuple(tuple(as_expr(c) for c in row) for row in rows)


def identity(n: int) -> tuple:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def transpose(m) -> tuple:
    return tuple(zip(*m))


def matmul(a, b) -> tuple:
    n, k, p = len(a), len(b), len(b[0])
    return tuple(
        tuple(snap(sum((a[i][l] * b[l][j] for l in range(k)), ZERO)) for j in range(p))
        for i in range(n)
    )


def _minor(m, i, j):
    return tuple(row[:j] + row[j + 1 :] for r, row in enumerate(m) if r != i)


def _det(m) -> Expr:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    # expand along the row with the most literal zeros
    row = max(range(n), key=lambda r: sum(1 for c in m[r] if c == ZERO))
    terms = []
    for j, c in enumerate(m[row]):
        if c == ZERO:
            continue
        sub = _det(_minor(m, row, j))
        t = c * sub
        terms.append(t if (row + j) % 2 == 0 else -t)
    return sum(terms, ZERO)


def det(m: Sequence[Sequence[Expr]]) -> Expr:
    m = as_matrix(m)
    if any(len(r) != len(m) for r in m):
        raise ValueError("matrix must be square")
    if len(m) > MAX_SYMBOLIC_DIM:
        raise ValueError(f"symbolic determinant limited to n <= {MAX_SYMBOLIC_DIM}")
    return simplify(_det(m))


def inverse(m: Sequence[Sequence[Expr]]) -> tuple:
    """Inverse by the adjugate; raises SingularMatrixError if det samples as 0."""
    m = as_matrix(m)
    n = len(m)
    d = snap(det(m))
    if d == ZERO:
        raise SingularMatrixError("determinant is identically zero")
    if n == 1:
        return ((snap(ONE / d),),)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            cof = _det(_minor(m, j, i))
            if (i + j) % 2:
                cof = -cof
            out[i][j] = snap(cof / d)
    return tuple(tuple(r) for r in out)
