"""Dense linear solves, exact (Fractions) or floating point.

The exact path is plain Gauss-Jordan elimination with a non-zero pivot
search; it is only meant for the small systems (a dozen unknowns) used to
cross-check the floating point solvers.
"""

from fractions import Fraction

import numpy as np

from .errors import NumericalError


def solve_exact(A, b):
    """Solve ``A x = b`` over the rationals.  ``A`` is a list of rows."""
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(rhs)] for row, rhs in zip(A, b)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if M[r][col] != 0), None)
        if pivot is None:
            raise NumericalError(f"singular system (column {col})")
        M[col], M[pivot] = M[pivot], M[col]
        inv = 1 / M[col][col]
        prow = [x * inv for x in M[col]]
        M[col] = prow
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], prow)]
    return [M[r][n] for r in range(n)]


def solve_float(A, b):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular system: {exc}") from None
    if not np.all(np.isfinite(x)):
        raise NumericalError("non-finite solution")
    return x


def solve(A, b, exact=False):
    if exact:
        return solve_exact(A, b)
    return list(solve_float(A, b))
