"""Exact rational Gaussian elimination for rank and nullspace.

Dimension statements are the whole point of the harmonic computations,
so ranks and kernels are computed over the rationals: no floating-point
rank threshold is ever involved.  Output is deterministic: reduced
row-echelon pivoting in the given column order, nullspace vectors
scaled to integer entries with gcd 1 and a positive leading entry.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

__all__ = ["rref", "rank", "nullspace", "integerize"]

Matrix = list[list[Fraction]]


def _to_fractions(matrix) -> Matrix:
    return [[Fraction(x) for x in row] for row in matrix]


def rref(matrix) -> tuple[Matrix, list[int]]:
    """Reduced row-echelon form and the pivot column indices."""
    m = _to_fractions(matrix)
    if not m:
        return [], []
    n_rows, n_cols = len(m), len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        pivot_row = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if pivot_row is None:
            continue
        m[r], m[pivot_row] = m[pivot_row], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return m, pivots


def rank(matrix) -> int:
    return len(rref(matrix)[1])


def nullspace(matrix, n_cols: int | None = None) -> list[list[Fraction]]:
    """Basis of the rational kernel, one vector per free column.

    Columns are taken in the given order, so a deterministic column
    ordering (sorted edge ids) yields a deterministic basis.
    """
    m = list(matrix)
    if not m:
        if not n_cols:
            return []
        basis = []
        for j in range(n_cols):
            v = [Fraction(0)] * n_cols
            v[j] = Fraction(1)
            basis.append(v)
        return basis
    n_cols = len(m[0])
    reduced, pivots = rref(m)
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * n_cols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -reduced[r][fc]
        basis.append(v)
    return basis


def integerize(vector) -> list[int]:
    """Scale a rational vector to coprime integers with positive leading entry."""
    vec = [Fraction(x) for x in vector]
    denominators = [x.denominator for x in vec]
    scale = 1
    for d in denominators:
        scale = scale * d // gcd(scale, d)
    ints = [int(x * scale) for x in vec]
    g = 0
    for value in ints:
        g = gcd(g, abs(value))
    if g > 1:
        ints = [value // g for value in ints]
    leading = next((value for value in ints if value != 0), 0)
    if leading < 0:
        ints = [-value for value in ints]
    return ints
