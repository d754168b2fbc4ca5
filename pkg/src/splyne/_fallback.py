"""Pure numpy implementation of the batched B-spline kernel.

Used when the compiled ``_kernels`` extension is unavailable.  Same
signature and results as the Cython version.
"""
import numpy as np


def eval_bsplines(knots, x, right=np.nan):
    """Values and first derivatives of many local B-splines at many points.

    ``knots`` has shape ``(m, p + 2)``, ``x`` shape ``(q,)``.  Returns two
    ``(m, q)`` arrays.  ``right`` closes the support at the domain maximum;
    pass ``nan`` for purely half-open supports.
    """
    T = np.ascontiguousarray(knots, dtype=float)
    X = np.ascontiguousarray(x, dtype=float)[None, :]
    m, k = T.shape
    p = k - 2
    closed = not np.isnan(right)
    N = []
    for i in range(p + 1):
        a = T[:, i, None]
        b = T[:, i + 1, None]
        inside = (a <= X) & (X < b)
        if closed:
            inside |= (X == right) & (b == right) & (a < b)
        N.append(inside.astype(float))
    lower = None
    with np.errstate(divide="ignore", invalid="ignore"):
        for d in range(1, p + 1):
            if d == p:
                lower = N
            nxt = []
            for i in range(p + 1 - d):
                den1 = (T[:, i + d] - T[:, i])[:, None]
                den2 = (T[:, i + d + 1] - T[:, i + 1])[:, None]
                t1 = np.where(den1 != 0.0, (X - T[:, i, None]) / den1 * N[i], 0.0)
                t2 = np.where(den2 != 0.0, (T[:, i + d + 1, None] - X) / den2 * N[i + 1], 0.0)
                nxt.append(t1 + t2)
            N = nxt
        vals = N[0]
        if p == 0:
            ders = np.zeros_like(vals)
        else:
            den1 = (T[:, p] - T[:, 0])[:, None]
            den2 = (T[:, p + 1] - T[:, 1])[:, None]
            ders = p * (np.where(den1 != 0.0, lower[0] / den1, 0.0)
                        - np.where(den2 != 0.0, lower[1] / den2, 0.0))
    return np.ascontiguousarray(vals), np.ascontiguousarray(ders)


def accumulate_local(matrix, idx, local):
    """``matrix[idx, idx] += local`` for a dense square block."""
    matrix[np.ix_(idx, idx)] += local
