"""Evaluation of bases whose functions are sums of weighted tensor B-splines.

LR B-splines are single weighted terms; THB-splines are sums over a finer
tensor basis.  :class:`TermTable` flattens either into arrays so that every
distinct univariate knot vector is evaluated once per batch of points.
"""
from __future__ import annotations

from typing import List, Sequence

import numpy as np

from . import kernels
from .geometry import Box
from .splinecore import TensorBSpline


class TermTable:
    def __init__(self, functions: Sequence[Sequence[TensorBSpline]], right=None):
        self.n_functions = len(functions)
        self.right = right
        owner, weights, u_rows, v_rows = [], [], [], []
        u_index, v_index = {}, {}
        for f, terms in enumerate(functions):
            for t in terms:
                owner.append(f)
                weights.append(t.weight)
                u_rows.append(u_index.setdefault(t.kv_u.knots, len(u_index)))
                v_rows.append(v_index.setdefault(t.kv_v.knots, len(v_index)))
        self.owner = np.asarray(owner, dtype=np.intp)
        self.weights = np.asarray(weights, dtype=float)
        self.u_row = np.asarray(u_rows, dtype=np.intp)
        self.v_row = np.asarray(v_rows, dtype=np.intp)
        self.u_knots = np.array(list(u_index), dtype=float).reshape(len(u_index), -1)
        self.v_knots = np.array(list(v_index), dtype=float).reshape(len(v_index), -1)
        ub = np.column_stack([self.u_knots[:, 0], self.u_knots[:, -1]]) if len(u_index) else np.zeros((0, 2))
        vb = np.column_stack([self.v_knots[:, 0], self.v_knots[:, -1]]) if len(v_index) else np.zeros((0, 2))
        # term supports as (x0, x1, y0, y1)
        self.boxes = np.column_stack([ub[self.u_row], vb[self.v_row]]) if owner else np.zeros((0, 4))
        self.first_term = np.searchsorted(self.owner, np.arange(self.n_functions + 1))

    @property
    def right_xy(self):
        if self.right is None:
            return np.nan, np.nan
        return self.right

    def terms_overlapping(self, box: Box) -> np.ndarray:
        b = self.boxes
        return np.nonzero((b[:, 0] < box.x1) & (box.x0 < b[:, 1])
                          & (b[:, 2] < box.y1) & (box.y0 < b[:, 3]))[0]

    def element_terms(self, boxes: Sequence[Box], buckets: int = 32) -> List[np.ndarray]:
        """Terms overlapping each box, found through a uniform bucket grid."""
        if len(self.boxes) == 0:
            return [np.zeros(0, dtype=np.intp) for _ in boxes]
        lo_x, hi_x = self.boxes[:, 0].min(), self.boxes[:, 1].max()
        lo_y, hi_y = self.boxes[:, 2].min(), self.boxes[:, 3].max()
        sx = buckets / (hi_x - lo_x)
        sy = buckets / (hi_y - lo_y)

        def cells(x0, x1, y0, y1):
            i0 = max(int(np.floor((x0 - lo_x) * sx)), 0)
            i1 = min(int(np.ceil((x1 - lo_x) * sx)), buckets)
            j0 = max(int(np.floor((y0 - lo_y) * sy)), 0)
            j1 = min(int(np.ceil((y1 - lo_y) * sy)), buckets)
            return i0, max(i1, i0 + 1), j0, max(j1, j0 + 1)

        grid: List[List[int]] = [[] for _ in range(buckets * buckets)]
        for t, (x0, x1, y0, y1) in enumerate(self.boxes.tolist()):
            i0, i1, j0, j1 = cells(x0, x1, y0, y1)
            for i in range(i0, i1):
                row = i * buckets
                for j in range(j0, j1):
                    grid[row + j].append(t)
        out = []
        b = self.boxes
        for box in boxes:
            i0, i1, j0, j1 = cells(*box)
            cand = np.unique(np.concatenate([np.asarray(grid[i * buckets + j], dtype=np.intp)
                                             for i in range(i0, i1) for j in range(j0, j1)]))
            bc = b[cand]
            keep = ((bc[:, 0] < box.x1) & (box.x0 < bc[:, 1])
                    & (bc[:, 2] < box.y1) & (box.y0 < bc[:, 3]))
            out.append(cand[keep])
        return out

    def functions_on(self, box: Box) -> np.ndarray:
        """Functions that do not vanish identically on ``box`` (all terms are non-negative)."""
        return np.unique(self.owner[self.terms_overlapping(box)])

    def tensor_values(self, terms: np.ndarray, xq, yq, derivatives: bool = False):
        """Per-term values on the tensor grid ``xq x yq``: arrays of shape (T, qx, qy)."""
        rx, ry = self.right_xy
        urows, uinv = np.unique(self.u_row[terms], return_inverse=True)
        vrows, vinv = np.unique(self.v_row[terms], return_inverse=True)
        bu, du = kernels.eval_bsplines(self.u_knots[urows], xq, rx)
        bv, dv = kernels.eval_bsplines(self.v_knots[vrows], yq, ry)
        w = self.weights[terms][:, None, None]
        val = w * bu[uinv][:, :, None] * bv[vinv][:, None, :]
        if not derivatives:
            return val
        gx = w * du[uinv][:, :, None] * bv[vinv][:, None, :]
        gy = w * bu[uinv][:, :, None] * dv[vinv][:, None, :]
        return val, gx, gy

    def point_values(self, x, y) -> np.ndarray:
        """Matrix of shape (n_functions, n_points) at scattered points."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        rx, ry = self.right_xy
        bu, _ = kernels.eval_bsplines(self.u_knots, x, rx)
        bv, _ = kernels.eval_bsplines(self.v_knots, y, ry)
        term_vals = self.weights[:, None] * bu[self.u_row] * bv[self.v_row]
        out = np.zeros((self.n_functions, x.size))
        np.add.at(out, self.owner, term_vals)
        return out


def collocation_matrix(space, x, y) -> np.ndarray:
    """Rows are points, columns basis functions."""
    return space.term_table().point_values(x, y).T


def probe_grid(domain: Box, n: int = 40, inset: float = 0.0):
    """Tensor grid of ``n * n`` points, avoiding knot lines via an irrational offset."""
    s = (np.arange(n) + 0.5 + inset) / n
    s = s + 0.1234567 / (7 * n)
    s = np.clip(s, 0.0, 1.0)
    xs = domain.x0 + domain.width * s
    ys = domain.y0 + domain.height * s
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return X.ravel(), Y.ravel()


def representation_residual(target_space, source_functions, x, y) -> float:
    """Max least-squares residual of ``source_functions`` in ``target_space`` on the points."""
    A = collocation_matrix(target_space, x, y)
    src = TermTable(source_functions, target_space.right).point_values(x, y).T
    coef, *_ = np.linalg.lstsq(A, src, rcond=None)
    return float(np.max(np.abs(A @ coef - src)))
