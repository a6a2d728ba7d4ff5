"""Small dense simplex solver for the fiberwise Wasserstein linear programs.

Solves  max c.x  subject to  A x <= b, x >= 0  with b >= 0, so the slack
basis is feasible and no phase-one step is needed.  The same tableau code
runs in exact rational arithmetic (fractions.Fraction entries) or in
floating point; the W1 fast paths only ever build programs with a few
dozen variables, larger programs are routed to scipy by the caller.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class SimplexError(Exception):
    pass


def solve_simplex(c: Sequence, A: Sequence[Sequence], b: Sequence, *, exact: bool,
                  max_pivots: int = 20000):
    """Return (optimal value, x) for max c.x s.t. A x <= b, x >= 0.

    Requires b >= 0.  Uses Bland's rule, so it terminates on degenerate
    programs; `exact` selects Fraction arithmetic over float.
    """
    m = len(A)
    n = len(c)
    if exact:
        zero, one = Fraction(0), Fraction(1)
        conv = Fraction
        tol = zero
    else:
        zero, one = 0.0, 1.0
        conv = float
        tol = 1e-11

    # tableau rows: m constraint rows [A | I | b], last row objective [-c | 0 | 0]
    T = []
    for i in range(m):
        row = [conv(v) for v in A[i]]
        row.extend(one if j == i else zero for j in range(m))
        bi = conv(b[i])
        if bi < -abs(tol):
            raise SimplexError("negative right-hand side")
        row.append(bi)
        T.append(row)
    obj = [-conv(v) for v in c]
    obj.extend(zero for _ in range(m))
    obj.append(zero)
    T.append(obj)

    basis = list(range(n, n + m))
    ncols = n + m + 1

    for _ in range(max_pivots):
        # Bland: entering = lowest index with negative reduced cost
        enter = -1
        for j in range(n + m):
            if T[m][j] < -tol:
                enter = j
                break
        if enter < 0:
            break
        # ratio test, Bland tie-break on leaving basic variable index
        leave = -1
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > tol:
                ratio = T[i][ncols - 1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            raise SimplexError("unbounded program")
        piv = T[leave][enter]
        T[leave] = [v / piv for v in T[leave]]
        for i in range(m + 1):
            if i == leave:
                continue
            f = T[i][enter]
            if f != zero:
                row_l = T[leave]
                T[i] = [v - f * w for v, w in zip(T[i], row_l)]
        basis[leave] = enter
    else:
        raise SimplexError("pivot limit exceeded")

    x = [zero] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i][ncols - 1]
    return T[m][ncols - 1], x
