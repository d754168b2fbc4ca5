"""Overloaded elements and the mesh modifications that remove them.

An element is overloaded when more basis functions live on it than the
dimension ``(p1 + 1)(p2 + 1)`` of the local polynomial space.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .boxmesh import MeshError, MeshRectangle
from .geometry import Box, format_dyadic, union_contains
from .lrspace import LRSpace

__all__ = [
    "OverloadReport",
    "overload_report",
    "convex_corners",
    "lrbno_modify",
    "tlrbno_modify",
    "diagonal_modify",
    "lrb1_modify",
    "UnsupportedDegree",
    "TMeshIncompatible",
]


class UnsupportedDegree(ValueError):
    pass


class TMeshIncompatible(ValueError):
    pass


@dataclass
class OverloadReport:
    elements: List[Box]
    counts: np.ndarray
    degree: Tuple[int, int]

    @property
    def local_dim(self) -> int:
        p1, p2 = self.degree
        return (p1 + 1) * (p2 + 1)

    @property
    def excess(self) -> np.ndarray:
        return self.counts - self.local_dim

    @property
    def overloaded(self) -> List[int]:
        return [i for i, e in enumerate(self.excess) if e > 0]

    def histogram(self) -> Dict[int, int]:
        return dict(sorted(Counter(int(e) for e in self.excess).items()))

    def to_csv(self) -> str:
        rows = ["element_id,x0,x1,y0,y1,count,excess"]
        for i, (b, c, e) in enumerate(zip(self.elements, self.counts, self.excess)):
            coords = ",".join(format_dyadic(v) for v in b)
            rows.append(f"{i},{coords},{int(c)},{int(e)}")
        return "\n".join(rows) + "\n"


def overload_report(space) -> OverloadReport:
    """Count the functions that do not vanish on each element of the domain.

    Every stored term is non-negative, so a function is alive on an element
    exactly when one of its terms overlaps it.  This also handles truncated
    functions correctly.
    """
    elements = space.integration_elements()
    table = space.term_table()
    counts = np.array([len(np.unique(table.owner[t])) for t in table.element_terms(elements)],
                      dtype=np.int64)
    return OverloadReport(elements, counts, tuple(space.degree))


# -- region geometry ----------------------------------------------------------------

def _quadrant(x: float, y: float, sx: int, sy: int, hx: float, hy: float) -> Box:
    return Box(min(x, x + sx * hx), max(x, x + sx * hx), min(y, y + sy * hy), max(y, y + sy * hy))


def convex_corners(boxes: Sequence[Box], cell: Tuple[float, float]):
    """Corners of the union of ``boxes`` where exactly one adjacent cell is inside.

    Returns ``(x, y, (sx, sy))`` with ``(sx, sy)`` pointing into the region.
    """
    hx, hy = cell
    pts = sorted({(x, y) for b in boxes for x in (b.x0, b.x1) for y in (b.y0, b.y1)})
    out = []
    for x, y in pts:
        inside = [(sx, sy) for sx in (-1, 1) for sy in (-1, 1)
                  if union_contains(boxes, _quadrant(x, y, sx, sy, hx, hy))]
        if len(inside) == 1:
            out.append((x, y, inside[0]))
    return out


def _require_bicubic(space) -> None:
    if tuple(space.degree) != (3, 3):
        raise UnsupportedDegree(f"overload modifications are defined for bi-degree (3,3), got {space.degree}")


def _spec_of(space, spec):
    spec = spec if spec is not None else getattr(space, "spec", None)
    if spec is None:
        raise ValueError("the space carries no hierarchical spec; pass one explicitly")
    return spec


def _extend(builder, direction: int, fixed: float, end: float, sign: int, length: float, limits) -> int:
    """Insert the piece of line ``fixed`` from ``end`` outward by ``length``.

    The far end is clipped to ``limits`` and pushed outward to the next
    transversal line so that the mesh stays a box mesh.
    """
    lo, hi = limits
    target = min(max(end + sign * length, lo), hi)
    if target == end:
        return 0
    stops = builder.stops(direction, fixed)
    if sign < 0:
        target = max([t for t in stops if t <= target] + [lo])
    else:
        target = min([t for t in stops if t >= target] + [hi])
    line = MeshRectangle(direction, fixed, min(end, target), max(end, target))
    if not builder.would_split(line):
        return 0
    return builder.insert(line)


def _corner_extensions(builder, spec, levels, limits, rule, directions=(1, 2)) -> None:
    """Extend the fine lines next to every convex corner.

    ``rule`` pairs an offset (in fine cells, odd) with an extension length in
    coarse cells.
    """
    xlim, ylim = limits
    for lev in levels:
        H = spec.cell_size(lev - 1)
        h = (H[0] / 2, H[1] / 2)
        for x, y, (sx, sy) in convex_corners(spec.regions[lev - 1], H):
            for offset, length in rule:
                if 1 in directions:
                    _extend(builder, 1, x + sx * offset * h[0], y, -sy, length * H[1], ylim)
                if 2 in directions:
                    _extend(builder, 2, y + sy * offset * h[1], x, -sx, length * H[0], xlim)


def _partial_lines(mesh, key):
    """Lines crossing the interior of a support without traversing it."""
    u, v = key
    out = []
    for direction, kv, (lo, hi) in ((1, u, (v[0], v[-1])), (2, v, (u[0], u[-1]))):
        for c in mesh.coords_between(direction, kv[0], kv[-1]):
            if not kv[0] < c < kv[-1]:
                continue
            segs = [(a, b) for a, b, _ in mesh.segments(direction, c) if a < hi and b > lo]
            if not segs:
                continue
            covered = sum(min(b, hi) - max(a, lo) for a, b in segs)
            if covered < hi - lo:
                out.append((hi - lo - covered, direction, c, lo, hi))
    return out


def split_culprits(space: LRSpace, max_rounds: int = 200) -> LRSpace:
    """Extend fine lines across the supports of the functions causing overload.

    On every overloaded element the largest function crossed by an
    incomplete meshline is split by completing the shortest such line.
    Repeats until no element is overloaded.
    """
    for _ in range(max_rounds):
        report = overload_report(space)
        if not report.overloaded:
            return space
        table = space.term_table()
        basis = space.basis
        builder = space._builder()
        done = set()
        inserted = 0
        boxes = [report.elements[i] for i in report.overloaded]
        for terms in table.element_terms(boxes):
            cands = []
            for f in np.unique(table.owner[terms]):
                b = basis[f]
                key = (b.kv_u.knots, b.kv_v.knots)
                if key not in builder.basis:
                    continue
                partial = _partial_lines(builder.mesh, key)
                if partial:
                    cands.append((-b.support.area, key, min(partial)))
            if not cands:
                continue
            _, _, (_, d, c, lo, hi) = min(cands)
            if (d, c, lo, hi) in done:
                continue
            done.add((d, c, lo, hi))
            line = MeshRectangle(d, c, lo, hi)
            if builder.would_split(line):
                builder.insert(line)
                inserted += 1
        if not inserted:
            raise MeshError("overload removal stalled: no culprit can be split")
        space = space._from_builder(builder)
    raise MeshError(f"overload removal did not converge in {max_rounds} rounds")


def _limits(space):
    d = space.domain
    return (d.x0, d.x1), (d.y0, d.y1)


def lrbno_modify(space: LRSpace, spec=None, close: bool = True) -> LRSpace:
    """Corner rule: the fine lines closest to each convex corner grow by three
    coarse elements, the next ones by one."""
    _require_bicubic(space)
    spec = _spec_of(space, spec)
    builder = space._builder()
    _corner_extensions(builder, spec, range(2, spec.levels + 1), _limits(space), ((1, 3), (3, 1)))
    out = space._from_builder(builder)
    return split_culprits(out) if close else out


def lrb1_modify(space: LRSpace, spec=None) -> LRSpace:
    """The corner rule applied to vertical lines only.

    This reduces the overload but does not remove it.
    """
    _require_bicubic(space)
    spec = _spec_of(space, spec)
    builder = space._builder()
    _corner_extensions(builder, spec, range(2, spec.levels + 1), _limits(space), ((1, 3), (3, 1)), (1,))
    return space._from_builder(builder)


def _single_box(boxes: Sequence[Box]) -> Box:
    bb = Box(min(b.x0 for b in boxes), max(b.x1 for b in boxes),
             min(b.y0 for b in boxes), max(b.y1 for b in boxes))
    if not union_contains(boxes, bb):
        raise TMeshIncompatible("T-mesh incompatible: refinement region is not a rectangle")
    return bb


def tlrbno_modify(space: LRSpace, spec=None, close: bool = True) -> LRSpace:
    """Every fine line ending on a level border grows by two coarse elements,
    the lines closest to the corners by three."""
    _require_bicubic(space)
    spec = _spec_of(space, spec)
    dom = space.domain
    rects = [None] + [_single_box(spec.regions[lev - 1]) for lev in range(2, spec.levels + 1)]
    for lev in range(2, spec.levels + 1):
        R = rects[lev - 1]
        H = spec.cell_size(lev - 1)
        grown = Box(max(R.x0 - 3 * H[0], dom.x0), min(R.x1 + 3 * H[0], dom.x1),
                    max(R.y0 - 3 * H[1], dom.y0), min(R.y1 + 3 * H[1], dom.y1))
        parent = rects[lev - 2] if lev > 2 else dom
        if not parent.contains_box(grown):
            raise TMeshIncompatible(f"T-mesh incompatible: level {lev} region too close to level {lev - 1} border")
    builder = space._builder()
    xlim, ylim = _limits(space)
    for lev in range(2, spec.levels + 1):
        R = rects[lev - 1]
        Hx, Hy = spec.cell_size(lev - 1)
        xs = np.arange(R.x0 + Hx / 2, R.x1, Hx)
        ys = np.arange(R.y0 + Hy / 2, R.y1, Hy)
        for k, x in enumerate(xs):
            n = 3 if k in (0, len(xs) - 1) else 2
            _extend(builder, 1, float(x), R.y0, -1, n * Hy, ylim)
            _extend(builder, 1, float(x), R.y1, 1, n * Hy, ylim)
        for k, y in enumerate(ys):
            n = 3 if k in (0, len(ys) - 1) else 2
            _extend(builder, 2, float(y), R.x0, -1, n * Hx, xlim)
            _extend(builder, 2, float(y), R.x1, 1, n * Hx, xlim)
    out = space._from_builder(builder)
    return split_culprits(out) if close else out


def diagonal_modify(space: LRSpace, spec=None, close: bool = True) -> LRSpace:
    """Staircase refinements: vertical fine lines grow three coarse elements at
    both ends, then the remaining culprits are split."""
    _require_bicubic(space)
    spec = _spec_of(space, spec)
    from .boxmesh import hierarchical_lines

    builder = space._builder()
    _, ylim = _limits(space)
    for lev in range(2, spec.levels + 1):
        Hy = spec.cell_size(lev - 1)[1]
        for line in hierarchical_lines(spec, lev):
            if line.direction != 1:
                continue
            _extend(builder, 1, line.fixed, line.a, -1, 3 * Hy, ylim)
            _extend(builder, 1, line.fixed, line.b, 1, 3 * Hy, ylim)
    out = space._from_builder(builder)
    return split_culprits(out) if close else out
