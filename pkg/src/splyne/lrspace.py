"""LR B-splines: tensor B-splines split until every function has minimal support.

Weights keep the partition of unity: when a split child coincides with an
existing function, the weighted coefficient is added to that function.
"""
from __future__ import annotations

from collections import deque
from typing import Dict, List, Optional, Sequence, Tuple


from .basis import TermTable
from .boxmesh import (
    BoxMesh,
    HierarchicalSpec,
    MeshError,
    MeshRectangle,
    _mesh_from_grid,
    cover_multiplicity,
    merged_segments,
    tensor_mesh,
)
from .geometry import Box, format_dyadic, parse_dyadic
from .splinecore import LocalKnotVector, TensorBSpline, split_univariate

__all__ = [
    "LRSpace",
    "lr_construct",
    "tensor_space",
    "ghost_wrap",
    "refine_region",
    "insert_local_line",
    "lr_hierarchical",
    "dump_space",
    "load_basis",
]

Key = Tuple[Tuple[float, ...], Tuple[float, ...]]


class _Builder:
    """Mutable working state of the LR construction."""

    def __init__(self, mesh: BoxMesh, basis: Dict[Key, float]):
        self.mesh = mesh
        self.basis = basis

    def _candidates(self, line: MeshRectangle):
        c = line.fixed
        out = []
        if line.direction == 1:
            for key in self.basis:
                u, v = key
                if u[0] < c < u[-1] and v[0] <= line.b and line.a <= v[-1]:
                    out.append(key)
        else:
            for key in self.basis:
                u, v = key
                if v[0] < c < v[-1] and u[0] <= line.b and line.a <= u[-1]:
                    out.append(key)
        out.sort()
        return out

    def would_split(self, line: MeshRectangle) -> bool:
        segs = merged_segments(self.mesh.segments(line.direction, line.fixed), line)
        c = line.fixed
        for u, v in self._candidates(line):
            kv, (lo, hi) = (u, (v[0], v[-1])) if line.direction == 1 else (v, (u[0], u[-1]))
            if cover_multiplicity(segs, lo, hi) > kv.count(c):
                return True
        return False

    def _missing(self, key: Key):
        u, v = key
        mesh = self.mesh
        for direction, kv, lo, hi in ((1, u, v[0], v[-1]), (2, v, u[0], u[-1])):
            for c in mesh.coords_between(direction, kv[0], kv[-1]):
                if mesh.traversal_multiplicity(direction, c, lo, hi) > kv.count(c):
                    return direction, c
        return None

    def insert(self, line: MeshRectangle, record: bool = True) -> int:
        """Insert ``line`` and split until minimal support; returns the number of splits."""
        self.mesh._insert(line, record=record)
        queue = deque(self._candidates(line))
        splits = 0
        while queue:
            key = queue.popleft()
            weight = self.basis.get(key)
            if weight is None:
                continue
            miss = self._missing(key)
            if miss is None:
                continue
            direction, t = miss
            u, v = key
            del self.basis[key]
            if direction == 1:
                left, al, right, ar = split_univariate(u, t)
                children = ((left.knots, v), al), ((right.knots, v), ar)
            else:
                left, al, right, ar = split_univariate(v, t)
                children = ((u, left.knots), al), ((u, right.knots), ar)
            for ckey, alpha in children:
                self.basis[ckey] = self.basis.get(ckey, 0.0) + alpha * weight
                queue.append(ckey)
            splits += 1
        return splits

    def stops(self, direction: int, fixed: float) -> List[float]:
        """Coordinates along the line ``fixed`` where transversal lines cross or end."""
        other = 3 - direction
        dom = self.mesh.domain
        lo, hi = (dom.y0, dom.y1) if direction == 1 else (dom.x0, dom.x1)
        out = {lo, hi}
        for c in self.mesh.coords_between(other, lo, hi):
            for a, b, _ in self.mesh.segments(other, c):
                if a <= fixed <= b:
                    out.add(c)
                    break
        return sorted(out)

    def transversal_stops(self, line: MeshRectangle):
        """Coordinates along ``line`` where an extended endpoint may legally stop."""
        dom = self.mesh.domain
        lo, hi = (dom.y0, dom.y1) if line.direction == 1 else (dom.x0, dom.x1)
        stops = self.stops(line.direction, line.fixed)
        below = [s for s in stops if s < line.a][::-1]
        above = [s for s in stops if s > line.b]
        return below, above, (line.a - lo, hi - line.b)

    def extend_until_split(self, line: MeshRectangle) -> MeshRectangle:
        """Shortest whole-element extension of ``line`` that splits a function.

        Extensions are as symmetric as possible; an odd extra element goes to
        the side nearer the domain boundary.
        """
        if self.would_split(line):
            return line
        below, above, (room_lo, room_hi) = self.transversal_stops(line)
        prefer_low = room_lo <= room_hi
        for total in range(1, len(below) + len(above) + 1):
            options = []
            for lo_steps in range(0, total + 1):
                hi_steps = total - lo_steps
                if lo_steps > len(below) or hi_steps > len(above):
                    continue
                skew = lo_steps - hi_steps
                options.append((abs(skew), 0 if (skew > 0) == prefer_low else 1, lo_steps, hi_steps))
            for _, _, lo_steps, hi_steps in sorted(options):
                a = below[lo_steps - 1] if lo_steps else line.a
                b = above[hi_steps - 1] if hi_steps else line.b
                cand = MeshRectangle(line.direction, line.fixed, a, b, line.multiplicity)
                if self.would_split(cand):
                    return cand
        raise MeshError(f"inadmissible insertion: no extension of {line} splits a B-spline")


class LRSpace:
    """LR B-spline basis over an LR-mesh.

    ``domain`` is the domain of interest Omega; for the ghost variant the mesh
    lives on a larger domain and only functions meeting the interior of
    Omega are kept.
    """

    def __init__(self, mesh: BoxMesh, degree: Tuple[int, int], variant: str,
                 domain: Box, basis: Dict[Key, float], inert: Sequence[MeshRectangle] = (),
                 spec: Optional[HierarchicalSpec] = None):
        self.mesh = mesh
        self.degree = tuple(degree)
        self.variant = variant
        self.domain = domain
        self._basis = dict(basis)
        self.inert_insertions = list(inert)
        self.spec = spec
        self._table = None
        self._list = None

    @property
    def basis(self) -> List[TensorBSpline]:
        if self._list is None:
            self._list = [TensorBSpline(LocalKnotVector(u), LocalKnotVector(v), w)
                          for (u, v), w in sorted(self._basis.items()) if self._meets_domain(u, v)]
        return self._list

    def _meets_domain(self, u, v) -> bool:
        d = self.domain
        return u[0] < d.x1 and d.x0 < u[-1] and v[0] < d.y1 and d.y0 < v[-1]

    def __len__(self) -> int:
        return len(self.basis)

    @property
    def right(self):
        return (self.domain.x1, self.domain.y1) if self.variant == "open" else None

    def function_terms(self) -> List[List[TensorBSpline]]:
        return [[b] for b in self.basis]

    def term_table(self) -> TermTable:
        if self._table is None:
            self._table = TermTable(self.function_terms(), self.right)
        return self._table

    def integration_elements(self) -> List[Box]:
        return [b for b in self.mesh.element_boxes() if self.domain.contains_box(b)]

    def _builder(self) -> _Builder:
        return _Builder(self.mesh.copy(), dict(self._basis))

    def _from_builder(self, builder: _Builder, inert=()) -> "LRSpace":
        return LRSpace(builder.mesh, self.degree, self.variant, self.domain, builder.basis,
                       list(self.inert_insertions) + list(inert), self.spec)

    def __repr__(self) -> str:
        return (f"LRSpace(degree={self.degree}, variant={self.variant!r}, "
                f"functions={len(self)}, elements={len(self.integration_elements())})")


def _tensor_basis(mesh: BoxMesh, degree) -> Dict[Key, float]:
    if mesh.base is None:
        raise MeshError("mesh has no base tensor grid / insertion history")
    gu = mesh.base.global_knots(1)
    gv = mesh.base.global_knots(2)
    p1, p2 = degree
    if mesh.base.boundary_mult[0] > p1 + 1 or mesh.base.boundary_mult[1] > p2 + 1:
        raise MeshError("boundary multiplicity exceeds degree + 1")
    nu, nv = len(gu) - p1 - 1, len(gv) - p2 - 1
    if nu < 1 or nv < 1:
        raise MeshError("tensor mesh too coarse for the degree")
    return {(gu[i:i + p1 + 2], gv[j:j + p2 + 2]): 1.0 for i in range(nu) for j in range(nv)}


def lr_construct(mesh: BoxMesh, degree=(3, 3), variant: str = "open",
                 domain: Optional[Box] = None) -> LRSpace:
    """Replay the insertion history of ``mesh`` from its base tensor mesh."""
    if mesh.base is None:
        raise MeshError("lr_construct needs a mesh with an insertion history")
    degree = tuple(degree)
    work = _mesh_from_grid(mesh.base)
    builder = _Builder(work, _tensor_basis(work, degree))
    inert = []
    for line in mesh.history:
        if builder.insert(line) == 0:
            inert.append(line)
    return LRSpace(builder.mesh, degree, variant, domain or mesh.domain, builder.basis, inert)


def tensor_space(domain: Box, n_x: int, n_y: int, degree=(3, 3), variant: str = "open") -> LRSpace:
    domain = Box(*domain)
    p1, p2 = degree
    if variant == "open":
        mesh = tensor_mesh(domain, n_x, n_y, (p1 + 1, p2 + 1))
        return LRSpace(mesh, degree, variant, domain, _tensor_basis(mesh, degree))
    if variant == "ghost":
        return ghost_wrap(domain, n_x, n_y, degree)
    raise ValueError(f"unknown boundary variant {variant!r}")


def ghost_wrap(domain: Box, n_x: int, n_y: int, degree=(3, 3)) -> LRSpace:
    """Tensor space on Omega widened by ``p`` cells per side with single boundary knots."""
    p1, p2 = degree
    mesh = tensor_mesh(domain, n_x, n_y, 1, extra=(p1, p2))
    return LRSpace(mesh, degree, "ghost", Box(*domain), _tensor_basis(mesh, degree))


def insert_local_line(space: LRSpace, line: MeshRectangle) -> LRSpace:
    builder = space._builder()
    if not builder.would_split(line):
        raise MeshError(f"inadmissible insertion: {line} splits no B-spline")
    builder.insert(line)
    return space._from_builder(builder)


def _region_boxes(region) -> List[Box]:
    if isinstance(region, Box):
        return [region]
    if len(region) == 4 and all(isinstance(v, (int, float)) for v in region):
        return [Box(*region)]
    return [Box(*b) for b in region]


def region_midlines(mesh: BoxMesh, boxes: Sequence[Box]) -> List[MeshRectangle]:
    """Maximal segments made of the midlines of every element inside the region."""
    from .geometry import union_contains

    vert: Dict[float, list] = {}
    horz: Dict[float, list] = {}
    for e in mesh.element_boxes():
        if not any(b.overlaps(e) for b in boxes):
            continue
        if not union_contains(boxes, e):
            raise MeshError(f"region not aligned with the mesh: element {tuple(e)} is cut")
        cx, cy = e.center
        vert.setdefault(cx, []).append((e.y0, e.y1))
        horz.setdefault(cy, []).append((e.x0, e.x1))
    lines = []
    for direction, table in ((1, vert), (2, horz)):
        for c in sorted(table):
            merged = []
            for a, b in sorted(table[c]):
                if merged and a <= merged[-1][1]:
                    merged[-1][1] = max(merged[-1][1], b)
                else:
                    merged.append([a, b])
            lines.extend(MeshRectangle(direction, c, a, b) for a, b in merged)
    return lines


def refine_region(space: LRSpace, region) -> LRSpace:
    """Halve every element in ``region`` in both directions.

    Vertical midlines go in before horizontal ones.  A midline too short to
    split any B-spline is extended by whole elements until it does.
    """
    boxes = _region_boxes(region)
    builder = space._builder()
    for line in region_midlines(builder.mesh, boxes):
        builder.insert(builder.extend_until_split(line))
    return space._from_builder(builder)


def lr_hierarchical(spec: HierarchicalSpec, degree=(3, 3), variant: str = "open") -> LRSpace:
    """LR space on the hierarchical mesh of ``spec``, refining level by level."""
    spec.validate()
    nx, ny = spec.initial_cells
    space = tensor_space(spec.domain, nx, ny, degree, variant)
    for lev in range(2, spec.levels + 1):
        space = refine_region(space, spec.regions[lev - 1])
    space.spec = spec
    return space


# -- dump format ---------------------------------------------------------------------

def _fmt_kv(knots) -> str:
    return " ".join(format_dyadic(t) for t in knots)


def dump_space(space) -> str:
    """One record per function: ``u-knots | v-knots | weight``."""
    lines = []
    for b in space.basis:
        lines.append(f"{_fmt_kv(b.kv_u.knots)} | {_fmt_kv(b.kv_v.knots)} | {float(b.weight)!r}")
    return "\n".join(lines) + "\n"


def load_basis(text: str) -> List[TensorBSpline]:
    out = []
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        u, v, w = (part.strip() for part in raw.split("|"))
        out.append(TensorBSpline(LocalKnotVector([parse_dyadic(t) for t in u.split()]),
                                 LocalKnotVector([parse_dyadic(t) for t in v.split()]),
                                 float(w)))
    return out
