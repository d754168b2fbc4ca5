"""Mass and stiffness assembly, L2 projection and eigenvalue-based conditioning."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .geometry import Box

__all__ = [
    "NumericalError",
    "SymmetricOperator",
    "EigenSummary",
    "assemble",
    "assemble_pair",
    "load_vector",
    "l2_project",
    "l2_error",
    "eigensolve",
    "condition_estimate",
    "eigvec_heatmap",
    "write_matrix_market",
    "write_eigen_csv",
    "thread_count",
]

MASS = "mass"
STIFFNESS = "stiffness"


class NumericalError(RuntimeError):
    """A linear-algebra step failed (singular or non-symmetric matrix)."""


def thread_count() -> int:
    """Worker threads for assembly, capped by ``SPLYNE_THREADS`` when set."""
    cap = os.environ.get("SPLYNE_THREADS")
    if cap:
        try:
            return max(1, int(cap))
        except ValueError:
            raise ValueError(f"SPLYNE_THREADS must be a positive integer, got {cap!r}") from None
    return 1


@dataclass
class SymmetricOperator:
    kind: str
    matrix: np.ndarray
    basis_tag: str = ""

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def asymmetry(self) -> float:
        a = self.matrix
        scale = max(np.abs(a).max(), np.finfo(float).tiny)
        return float(np.abs(a - a.T).max() / scale)


@dataclass
class EigenSummary:
    """Eigenvalues in decreasing order plus the extreme eigenvectors."""

    kind: str
    eigenvalues: np.ndarray
    eigvec_max: np.ndarray
    eigvec_min: np.ndarray
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)


def _element_data(space, elements: Sequence[Box]):
    table = space.term_table()
    return table, table.element_terms(elements)


def _local_matrices(table, box: Box, terms: np.ndarray, rule, kinds):
    """Local matrices of one element: returns (function indices, {kind: matrix})."""
    gx, gw = rule[0]
    hx, hw = rule[1]
    xq = box.x0 + 0.5 * box.width * (gx + 1.0)
    yq = box.y0 + 0.5 * box.height * (hx + 1.0)
    w = np.outer(gw, hw).ravel() * (0.25 * box.area)
    owners, inv = np.unique(table.owner[terms], return_inverse=True)
    nf = len(owners)
    need_grad = STIFFNESS in kinds
    res = table.tensor_values(terms, xq, yq, derivatives=need_grad)
    vals = res[0] if need_grad else res
    out = {}
    if MASS in kinds:
        F = np.zeros((nf, vals.shape[1] * vals.shape[2]))
        np.add.at(F, inv, vals.reshape(len(terms), -1))
        out[MASS] = (F * w) @ F.T
    if need_grad:
        gx_, gy_ = res[1], res[2]
        Gx = np.zeros((nf, gx_.shape[1] * gx_.shape[2]))
        Gy = np.zeros_like(Gx)
        np.add.at(Gx, inv, gx_.reshape(len(terms), -1))
        np.add.at(Gy, inv, gy_.reshape(len(terms), -1))
        out[STIFFNESS] = (Gx * w) @ Gx.T + (Gy * w) @ Gy.T
    return owners, out


def _assemble(space, kinds, threads: Optional[int] = None):
    elements = space.integration_elements()
    table, incidence = _element_data(space, elements)
    p1, p2 = space.degree
    rule = (np.polynomial.legendre.leggauss(p1 + 1), np.polynomial.legendre.leggauss(p2 + 1))
    n = len(space)
    mats = {k: np.zeros((n, n)) for k in kinds}
    threads = thread_count() if threads is None else threads

    def work(i):
        return _local_matrices(table, elements[i], incidence[i], rule, kinds)

    if threads > 1 and len(elements) > 64:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(work, range(len(elements)), chunksize=32)
            for idx, local in results:
                for k in kinds:
                    kernels.accumulate_local(mats[k], idx, local[k])
    else:
        for i in range(len(elements)):
            idx, local = work(i)
            for k in kinds:
                kernels.accumulate_local(mats[k], idx, local[k])
    tag = repr(space)
    return {k: SymmetricOperator(k, 0.5 * (m + m.T), tag) for k, m in mats.items()}


def assemble(space, kind: str, threads: Optional[int] = None) -> SymmetricOperator:
    """Assemble ``kind`` ("mass" or "stiffness") by per-element Gauss-Legendre quadrature."""
    if kind not in (MASS, STIFFNESS):
        raise ValueError(f"unknown operator kind {kind!r}")
    if len(space) == 0:
        raise ValueError("cannot assemble on an empty basis")
    return _assemble(space, (kind,), threads)[kind]


def assemble_pair(space, threads: Optional[int] = None) -> Tuple[SymmetricOperator, SymmetricOperator]:
    """Mass and stiffness from one pass over the elements."""
    ops = _assemble(space, (MASS, STIFFNESS), threads)
    return ops[MASS], ops[STIFFNESS]


def load_vector(space, f: Callable) -> np.ndarray:
    """``b_j = integral of f * phi_j`` with the assembly quadrature rule."""
    elements = space.integration_elements()
    table, incidence = _element_data(space, elements)
    p1, p2 = space.degree
    (gx, gw), (hx, hw) = np.polynomial.legendre.leggauss(p1 + 1), np.polynomial.legendre.leggauss(p2 + 1)
    b = np.zeros(len(space))
    for box, terms in zip(elements, incidence):
        xq = box.x0 + 0.5 * box.width * (gx + 1.0)
        yq = box.y0 + 0.5 * box.height * (hx + 1.0)
        X, Y = np.meshgrid(xq, yq, indexing="ij")
        fw = (np.asarray(f(X, Y), dtype=float) * np.outer(gw, hw) * (0.25 * box.area)).ravel()
        vals = table.tensor_values(terms, xq, yq).reshape(len(terms), -1)
        np.add.at(b, table.owner[terms], vals @ fw)
    return b


def l2_project(space, f: Callable, mass: Optional[SymmetricOperator] = None) -> np.ndarray:
    """Coefficients of the L2-best approximation of ``f``."""
    M = (mass or assemble(space, MASS)).matrix
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("mass matrix is singular or indefinite") from exc
    b = load_vector(space, f)
    return np.linalg.solve(L.T, np.linalg.solve(L, b))


def l2_error(space, coef: np.ndarray, f: Callable, points: int = 6) -> float:
    """``|| f - sum coef_j phi_j ||`` in L2(Omega), with ``points`` Gauss points per direction."""
    elements = space.integration_elements()
    table, incidence = _element_data(space, elements)
    g, gw = np.polynomial.legendre.leggauss(points)
    total = 0.0
    for box, terms in zip(elements, incidence):
        xq = box.x0 + 0.5 * box.width * (g + 1.0)
        yq = box.y0 + 0.5 * box.height * (g + 1.0)
        X, Y = np.meshgrid(xq, yq, indexing="ij")
        vals = table.tensor_values(terms, xq, yq)
        uh = np.tensordot(coef[table.owner[terms]], vals, axes=1)
        diff = np.asarray(f(X, Y), dtype=float) - uh
        total += float((diff ** 2 * np.outer(gw, gw)).sum()) * 0.25 * box.area
    return float(np.sqrt(total))


def eigensolve(op: SymmetricOperator, tol: float = 1e-12, keep_vectors: bool = False) -> EigenSummary:
    if op.asymmetry() > tol:
        raise NumericalError(f"operator is not symmetric (relative asymmetry {op.asymmetry():.2e})")
    try:
        w, v = np.linalg.eigh(op.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("eigensolver did not converge") from exc
    w = w[::-1]
    v = v[:, ::-1]
    return EigenSummary(op.kind, w, v[:, 0].copy(), v[:, -1].copy(), v if keep_vectors else None)


def condition_estimate(op) -> float:
    """Spectral condition number; the stiffness kernel of constants is skipped."""
    summary = op if isinstance(op, EigenSummary) else eigensolve(op)
    lam = np.abs(summary.eigenvalues)
    if summary.kind == STIFFNESS:
        if len(lam) < 2:
            raise NumericalError("stiffness condition needs at least two eigenvalues")
        return float(lam[0] / lam[-2])
    return float(lam[0] / lam[-1])


def eigvec_heatmap(space, summary: EigenSummary, which: str = "min") -> List[Tuple[Box, float]]:
    """Per-element max of |coefficient| over the functions living there, scaled to [0, 1]."""
    vec = summary.eigvec_min if which == "min" else summary.eigvec_max
    if which not in ("min", "max"):
        raise ValueError("which must be 'min' or 'max'")
    elements = space.integration_elements()
    table, incidence = _element_data(space, elements)
    a = np.abs(vec)
    vals = np.array([a[np.unique(table.owner[t])].max() if len(t) else 0.0 for t in incidence])
    top = vals.max() if len(vals) else 0.0
    if top > 0:
        vals = vals / top
    return list(zip(elements, vals.tolist()))


def write_matrix_market(op: SymmetricOperator, path) -> None:
    """Coordinate-format export of the symmetric operator."""
    from scipy.io import mmwrite
    from scipy.sparse import coo_matrix

    mmwrite(str(path), coo_matrix(op.matrix), comment=f"{op.kind} {op.basis_tag}", symmetry="symmetric")


def write_eigen_csv(summary: EigenSummary, path) -> None:
    with open(path, "w") as fh:
        fh.write("index,lambda\n")
        for i, lam in enumerate(summary.eigenvalues, start=1):
            fh.write(f"{i},{float(lam)!r}\n")
