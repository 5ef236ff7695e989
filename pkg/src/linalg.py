"""Exact linear solves over the rationals (numpy object arrays of Fractions)."""
import numpy as np
from fractions import Fraction


def fraction_matrix(rows):
    return np.array([[Fraction(x) for x in row] for row in rows], dtype=object)


def solve(a, b):
    """Solve a x = b exactly by Gauss-Jordan elimination; returns a list of Fractions.

    Raises ValueError if the matrix is singular.
    """
    if len(b) == 0:
        return []
    a = fraction_matrix(a)
    n = a.shape[0]
    assert a.shape == (n, n)
    x = np.array([Fraction(v) for v in b], dtype=object)

    # downward elimination: zero the lower triangle, unit diagonal
    for i in range(n):
        for j in range(i, n):
            if a[j, i] != 0:
                if i != j:
                    a[[i, j]] = a[[j, i]]
                    x[[i, j]] = x[[j, i]]
                break
        else:
            raise ValueError("matrix is singular")
        pivot = a[i, i]
        a[i, :] = a[i, :] / pivot
        x[i] = x[i] / pivot
        for j in range(i + 1, n):
            factor = a[j, i]
            if factor != 0:
                a[j, :] = a[j, :] - factor * a[i, :]
                x[j] = x[j] - factor * x[i]

    # upward elimination
    for i in range(n - 1, -1, -1):
        for j in range(i):
            factor = a[j, i]
            if factor != 0:
                a[j, :] = a[j, :] - factor * a[i, :]
                x[j] = x[j] - factor * x[i]

    return [Fraction(v) for v in x]
