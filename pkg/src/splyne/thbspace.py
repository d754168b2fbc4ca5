"""Truncated hierarchical B-splines.

Every THB function is stored as a non-negative combination of tensor
B-splines of the finest level its support has met (``fine_rep``).  Moving a
function one level down re-expands it with the two-scale relation; the
truncation then drops the fine terms whose supports lie inside the next
region.  Functions that never meet a finer region keep their coarse
representation.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .basis import TermTable
from .boxmesh import BoxMesh, HierarchicalSpec, build_hierarchical, grid_coords
from .geometry import Box, union_contains
from .splinecore import LocalKnotVector, TensorBSpline, split_univariate

__all__ = [
    "THBFunction",
    "THBSpace",
    "two_scale_univariate",
    "two_scale",
    "truncate",
    "truncate_subtractive",
    "thb_construct",
    "level_knots",
]

Key = Tuple[Tuple[float, ...], Tuple[float, ...]]


@lru_cache(maxsize=None)
def two_scale_univariate(knots: Tuple[float, ...], inserted: Tuple[float, ...]) -> Tuple[Tuple[Tuple[float, ...], float], ...]:
    """Coefficients of ``B[knots]`` over the B-splines of the refined knots.

    Each new knot in ``inserted`` that falls inside the support is added by
    one single-knot insertion applied to every current piece.
    """
    pieces: Dict[Tuple[float, ...], float] = {tuple(knots): 1.0}
    for t in inserted:
        if not knots[0] < t < knots[-1]:
            continue
        nxt: Dict[Tuple[float, ...], float] = {}
        for kv, c in pieces.items():
            if kv[0] < t < kv[-1]:
                left, al, right, ar = split_univariate(kv, t)
                nxt[left.knots] = nxt.get(left.knots, 0.0) + c * al
                nxt[right.knots] = nxt.get(right.knots, 0.0) + c * ar
            else:
                nxt[kv] = nxt.get(kv, 0.0) + c
        pieces = nxt
    return tuple(sorted(pieces.items()))


def two_scale(b: TensorBSpline, inserted_u: Sequence[float], inserted_v: Sequence[float]) -> Dict[Key, float]:
    """Bivariate two-scale coefficients: outer product of the univariate ones."""
    cu = two_scale_univariate(b.kv_u.knots, tuple(inserted_u))
    cv = two_scale_univariate(b.kv_v.knots, tuple(inserted_v))
    return {(ku, kv): b.weight * a * c for ku, a in cu for kv, c in cv}


def _box(key: Key) -> Box:
    u, v = key
    return Box(u[0], u[-1], v[0], v[-1])


def truncate(b: TensorBSpline, region: Sequence[Box], inserted_u, inserted_v) -> Dict[Key, float]:
    """Additive truncation: keep fine terms whose support is not inside ``region``."""
    return {k: c for k, c in two_scale(b, inserted_u, inserted_v).items()
            if not union_contains(region, _box(k))}


def truncate_subtractive(b: TensorBSpline, region: Sequence[Box], inserted_u, inserted_v):
    """``b`` minus the fine terms inside ``region``, as (function, removed-terms) pair."""
    removed = {k: c for k, c in two_scale(b, inserted_u, inserted_v).items()
               if union_contains(region, _box(k))}
    return b, removed


@dataclass
class THBFunction:
    """One THB-spline.

    ``fine_rep`` maps knot-vector pairs of level ``rep_level`` to coefficients.
    """

    origin_level: int
    mother: TensorBSpline
    rep_level: int
    fine_rep: Dict[Key, float] = field(default_factory=dict)

    @property
    def support(self) -> Box:
        boxes = [_box(k) for k in self.fine_rep]
        return Box(min(b.x0 for b in boxes), max(b.x1 for b in boxes),
                   min(b.y0 for b in boxes), max(b.y1 for b in boxes))

    def terms(self) -> List[TensorBSpline]:
        return [TensorBSpline(LocalKnotVector(u), LocalKnotVector(v), c)
                for (u, v), c in sorted(self.fine_rep.items())]


def level_knots(spec: HierarchicalSpec, level: int, direction: int, mult: int) -> Tuple[float, ...]:
    d = spec.domain
    if direction == 1:
        pts = grid_coords(d.x0, d.x1, spec.initial_cells[0], level)
    else:
        pts = grid_coords(d.y0, d.y1, spec.initial_cells[1], level)
    return (pts[0],) * mult + pts[1:-1] + (pts[-1],) * mult


class _RegionMask:
    """Union of boxes rasterized on a level grid, with O(1) box queries."""

    def __init__(self, boxes: Sequence[Box], xs: Sequence[float], ys: Sequence[float]):
        self.xi = {x: i for i, x in enumerate(xs)}
        self.yi = {y: j for j, y in enumerate(ys)}
        cx = 0.5 * (np.asarray(xs[:-1]) + np.asarray(xs[1:]))
        cy = 0.5 * (np.asarray(ys[:-1]) + np.asarray(ys[1:]))
        X, Y = np.meshgrid(cx, cy, indexing="ij")
        mask = np.zeros(X.shape, dtype=np.int64)
        for b in boxes:
            mask |= ((X > b.x0) & (X < b.x1) & (Y > b.y0) & (Y < b.y1))
        self.sat = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
        self.sat[1:, 1:] = mask.cumsum(0).cumsum(1)

    def _count(self, box: Box):
        i0, i1 = self.xi[box.x0], self.xi[box.x1]
        j0, j1 = self.yi[box.y0], self.yi[box.y1]
        s = self.sat
        return s[i1, j1] - s[i0, j1] - s[i1, j0] + s[i0, j0], (i1 - i0) * (j1 - j0)

    def contains(self, box: Box) -> bool:
        n, total = self._count(box)
        return n == total

    def overlaps(self, box: Box) -> bool:
        return self._count(box)[0] > 0


class THBSpace:
    """THB-spline basis on the hierarchical mesh of ``spec``."""

    def __init__(self, spec: HierarchicalSpec, degree, variant: str, domain: Box,
                 functions: List[THBFunction], mesh: BoxMesh):
        self.spec = spec
        self.degree = tuple(degree)
        self.variant = variant
        self.domain = domain
        self.functions = functions
        self.mesh = mesh
        self._table = None

    def __len__(self) -> int:
        return len(self.functions)

    @property
    def right(self):
        return (self.domain.x1, self.domain.y1) if self.variant == "open" else None

    def function_terms(self) -> List[List[TensorBSpline]]:
        return [f.terms() for f in self.functions]

    def term_table(self) -> TermTable:
        if self._table is None:
            self._table = TermTable(self.function_terms(), self.right)
        return self._table

    def integration_elements(self) -> List[Box]:
        return [b for b in self.mesh.element_boxes() if self.domain.contains_box(b)]

    def level_basis(self, level: int) -> List[TensorBSpline]:
        """All tensor B-splines of one hierarchical level."""
        p1, p2 = self.degree
        gu = level_knots(self.spec, level, 1, self._mult[0])
        gv = level_knots(self.spec, level, 2, self._mult[1])
        return [TensorBSpline(gu[i:i + p1 + 2], gv[j:j + p2 + 2])
                for i in range(len(gu) - p1 - 1) for j in range(len(gv) - p2 - 1)]

    @property
    def _mult(self):
        p1, p2 = self.degree
        return (p1 + 1, p2 + 1) if self.variant == "open" else (1, 1)

    def __repr__(self) -> str:
        return (f"THBSpace(degree={self.degree}, variant={self.variant!r}, "
                f"levels={self.spec.levels}, functions={len(self)})")


def _new_knots(spec: HierarchicalSpec, level: int, direction: int) -> Tuple[float, ...]:
    """Breakpoints that first appear at ``level`` (the midlines of ``level - 1``)."""
    d = spec.domain
    lo, hi, n = (d.x0, d.x1, spec.initial_cells[0]) if direction == 1 else (d.y0, d.y1, spec.initial_cells[1])
    return grid_coords(lo, hi, n, level)[1::2]


def _inside_range(knots: Sequence[float], p: int, lo: float, hi: float) -> range:
    """Indices of the B-splines of a global knot vector whose support overlaps ``(lo, hi)``."""
    first = max(bisect_right(knots, lo) - p - 2, 0)
    last = min(bisect_left(knots, hi), len(knots) - p - 1)
    return range(first, last)


def thb_construct(spec: HierarchicalSpec, degree=(3, 3), variant: str = "open") -> THBSpace:
    """Level loop: truncate the surviving functions, add the fine ones inside the region."""
    degree = tuple(degree)
    p1, p2 = degree
    domain = spec.domain
    if variant == "ghost":
        spec = spec.extended((p1, p2))
        mult = (1, 1)
    elif variant == "open":
        mult = (p1 + 1, p2 + 1)
    else:
        raise ValueError(f"unknown boundary variant {variant!r}")
    spec.validate()

    gu = level_knots(spec, 1, 1, mult[0])
    gv = level_knots(spec, 1, 2, mult[1])
    funcs: List[THBFunction] = []
    for i in range(len(gu) - p1 - 1):
        for j in range(len(gv) - p2 - 1):
            key = (gu[i:i + p1 + 2], gv[j:j + p2 + 2])
            funcs.append(THBFunction(1, TensorBSpline(*key), 1, {key: 1.0}))

    new_knots = {lev: (_new_knots(spec, lev, 1), _new_knots(spec, lev, 2))
                 for lev in range(2, spec.levels + 1)}
    for lev in range(1, spec.levels):
        fine = lev + 1
        d = spec.domain
        xs = grid_coords(d.x0, d.x1, spec.initial_cells[0], fine)
        ys = grid_coords(d.y0, d.y1, spec.initial_cells[1], fine)
        region = _RegionMask(spec.regions[fine - 1], xs, ys)
        survivors = []
        for H in funcs:
            boxes = [_box(k) for k in H.fine_rep]
            if all(region.contains(b) for b in boxes):
                continue
            if any(region.overlaps(b) for b in boxes):
                rep = H.fine_rep
                for step in range(H.rep_level + 1, fine + 1):
                    nu, nv = new_knots[step]
                    expanded: Dict[Key, float] = {}
                    for (u, v), c in rep.items():
                        for k, a in two_scale(TensorBSpline(u, v), nu, nv).items():
                            expanded[k] = expanded.get(k, 0.0) + c * a
                    rep = expanded
                rep = {k: c for k, c in rep.items() if not region.contains(_box(k))}
                if not rep:
                    continue
                H = THBFunction(H.origin_level, H.mother, fine, rep)
            survivors.append(H)
        fu = level_knots(spec, fine, 1, mult[0])
        fv = level_knots(spec, fine, 2, mult[1])
        fresh = set()
        for box in spec.regions[fine - 1]:
            for i in _inside_range(fu, p1, box.x0, box.x1):
                for j in _inside_range(fv, p2, box.y0, box.y1):
                    fresh.add((i, j))
        for i, j in sorted(fresh):
            key = (fu[i:i + p1 + 2], fv[j:j + p2 + 2])
            if region.contains(_box(key)):
                survivors.append(THBFunction(fine, TensorBSpline(*key), fine, {key: 1.0}))
        funcs = survivors

    def meets(f: THBFunction) -> bool:
        return any(_box(k).overlaps(domain) for k in f.fine_rep)

    funcs = [f for f in funcs if meets(f)]
    mesh = build_hierarchical(spec, mult)
    return THBSpace(spec, degree, variant, domain, funcs, mesh)


def dump_thb(space: THBSpace) -> str:
    """Space dump with a ``#level`` metadata line before each function's terms."""
    from .lrspace import _fmt_kv

    out = []
    for f in space.functions:
        m = f.mother
        out.append(f"#level {f.origin_level} {f.rep_level} {_fmt_kv(m.kv_u.knots)} | {_fmt_kv(m.kv_v.knots)}")
        for t in f.terms():
            out.append(f"{_fmt_kv(t.kv_u.knots)} | {_fmt_kv(t.kv_v.knots)} | {float(t.weight)!r}")
    return "\n".join(out) + "\n"
