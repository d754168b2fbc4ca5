"""Box meshes with multiplicity, hierarchical meshes and meshline queries.

A :class:`BoxMesh` stores its meshlines in canonical form: for every
direction/coordinate pair a sorted list of disjoint segments, where touching
segments of equal multiplicity are merged.  The box partition (elements) is
kept up to date as lines are inserted.  Direction 1 is a vertical line
``x = fixed``, direction 2 a horizontal line ``y = fixed``.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .geometry import Box, format_dyadic, parse_dyadic, union_contains
from .splinecore import TensorBSpline

__all__ = [
    "MeshError",
    "MeshRectangle",
    "Element",
    "TensorGrid",
    "BoxMesh",
    "HierarchicalSpec",
    "tensor_mesh",
    "insert_meshline",
    "elements",
    "build_hierarchical",
    "hierarchical_lines",
    "traverses_support",
    "has_minimal_support",
    "grid_coords",
    "central_spec",
    "diagonal_spec",
    "dump_mesh",
    "load_mesh",
]


class MeshError(ValueError):
    """Raised when an operation would leave an invalid box mesh."""


@dataclass(frozen=True)
class MeshRectangle:
    """Axis-aligned segment ``x = fixed`` (k=1) or ``y = fixed`` (k=2)."""

    direction: int
    fixed: float
    a: float
    b: float
    multiplicity: int = 1

    def __post_init__(self):
        if self.direction not in (1, 2):
            raise ValueError(f"direction must be 1 or 2, got {self.direction}")
        if not self.a < self.b:
            raise MeshError(f"zero-length or reversed meshline [{self.a}, {self.b}]")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be positive")

    @property
    def length(self) -> float:
        return self.b - self.a

    def endpoints(self):
        if self.direction == 1:
            return (self.fixed, self.a), (self.fixed, self.b)
        return (self.a, self.fixed), (self.b, self.fixed)

    def __str__(self) -> str:
        return " ".join([str(self.direction), format_dyadic(self.fixed),
                         format_dyadic(self.a), format_dyadic(self.b),
                         str(self.multiplicity)])


@dataclass(frozen=True)
class Element:
    rect: Box
    level: int = 1


@dataclass(frozen=True)
class TensorGrid:
    """Initial tensor mesh: breakpoints per direction and boundary multiplicities."""

    xs: Tuple[float, ...]
    ys: Tuple[float, ...]
    boundary_mult: Tuple[int, int] = (1, 1)

    @property
    def domain(self) -> Box:
        return Box(self.xs[0], self.xs[-1], self.ys[0], self.ys[-1])

    def global_knots(self, direction: int) -> Tuple[float, ...]:
        pts = self.xs if direction == 1 else self.ys
        m = self.boundary_mult[direction - 1]
        return (pts[0],) * m + tuple(pts[1:-1]) + (pts[-1],) * m


def grid_coords(lo: float, hi: float, n: int, level: int = 1,
                extra: int = 0) -> Tuple[float, ...]:
    """Breakpoints of a uniform grid, refined ``level - 1`` times.

    Every coordinate is ``lo + (hi - lo) * i / (n * 2**(level-1))``, so the
    same point computed at different levels is bitwise identical.
    ``extra`` adds that many coarse cells beyond each end.
    """
    scale = 1 << (level - 1)
    den = n * scale
    return tuple(lo + (hi - lo) * i / den
                 for i in range(-extra * scale, (n + extra) * scale + 1))


def merged_segments(segs, line: MeshRectangle):
    """Segment list after merging ``line`` into ``segs``; overlaps take the larger multiplicity."""
    pts = sorted({line.a, line.b, *(c for s in segs for c in s[:2])})
    pieces = []
    for lo, hi in zip(pts, pts[1:]):
        mid = 0.5 * (lo + hi)
        mu = 0
        for a, b, m in segs:
            if a <= mid <= b:
                mu = m
                break
        if line.a <= mid <= line.b:
            mu = max(mu, line.multiplicity)
        if mu:
            if pieces and pieces[-1][1] == lo and pieces[-1][2] == mu:
                pieces[-1] = (pieces[-1][0], hi, mu)
            else:
                pieces.append((lo, hi, mu))
    return pieces


def cover_multiplicity(segs, lo: float, hi: float) -> int:
    """Smallest multiplicity over ``[lo, hi]`` of sorted segments, 0 if not covered."""
    pos, mu = lo, None
    for a, b, m in segs:
        if b <= pos:
            continue
        if a > pos:
            return 0
        mu = m if mu is None else min(mu, m)
        pos = b
        if pos >= hi:
            return mu
    return 0


class BoxMesh:
    """Box mesh with multiplicity over a rectangular domain.

    Instances are treated as immutable by the public API; :func:`insert_meshline`
    returns a new mesh.  ``history`` lists the accepted insertions after the
    initial tensor mesh ``base`` (``None`` for meshes read from plain line
    lists, which then cannot be replayed as LR-meshes).
    """

    def __init__(self, domain: Box, base: Optional[TensorGrid] = None):
        self.domain = domain
        self.base = base
        self._segs: Dict[Tuple[int, float], List[Tuple[float, float, int]]] = {}
        self._coords: Dict[int, List[float]] = {1: [], 2: []}
        self._elements: Dict[Box, int] = {}
        self.history: List[MeshRectangle] = []

    # -- construction helpers -------------------------------------------------
    def copy(self) -> "BoxMesh":
        new = BoxMesh(self.domain, self.base)
        new._segs = {k: list(v) for k, v in self._segs.items()}
        new._coords = {k: list(v) for k, v in self._coords.items()}
        new._elements = dict(self._elements)
        new.history = list(self.history)
        return new

    def _merge(self, line: MeshRectangle) -> None:
        key = (line.direction, line.fixed)
        old = self._segs.get(key, [])
        if not old:
            bisect.insort(self._coords[line.direction], line.fixed)
        self._segs[key] = merged_segments(old, line)

    def _check_and_split(self, line: MeshRectangle, split: bool = True) -> None:
        c = line.fixed
        dom = self.domain
        lo, hi = (dom.x0, dom.x1) if line.direction == 1 else (dom.y0, dom.y1)
        tlo, thi = (dom.y0, dom.y1) if line.direction == 1 else (dom.x0, dom.x1)
        if not (lo <= c <= hi and tlo <= line.a and line.b <= thi):
            raise MeshError(f"meshline {line} leaves the domain")
        crossed = []
        for box in self._elements:
            if line.direction == 1:
                inside = box.x0 < c < box.x1
                s0, s1 = box.y0, box.y1
            else:
                inside = box.y0 < c < box.y1
                s0, s1 = box.x0, box.x1
            if not inside or s1 <= line.a or s0 >= line.b:
                continue
            if s0 < line.a or s1 > line.b:
                raise MeshError(f"not a box mesh: {line} ends inside element {tuple(box)}")
            crossed.append(box)
        for point in line.endpoints():
            if not self._on_transversal(line.direction, point):
                raise MeshError(f"not a box mesh: endpoint {point} of {line} is dangling")
        if not split:
            return
        for box in crossed:
            level = self._elements.pop(box)
            if line.direction == 1:
                halves = Box(box.x0, c, box.y0, box.y1), Box(c, box.x1, box.y0, box.y1)
            else:
                halves = Box(box.x0, box.x1, box.y0, c), Box(box.x0, box.x1, c, box.y1)
            for h in halves:
                self._elements[h] = level

    def _on_transversal(self, direction: int, point) -> bool:
        x, y = point
        other = 3 - direction
        fixed, along = (y, x) if direction == 1 else (x, y)
        dom = self.domain
        if direction == 1 and (y == dom.y0 or y == dom.y1):
            return True
        if direction == 2 and (x == dom.x0 or x == dom.x1):
            return True
        for a, b, _ in self._segs.get((other, fixed), ()):
            if a <= along <= b:
                return True
        return False

    def _insert(self, line: MeshRectangle, record: bool = True) -> None:
        self._check_and_split(line)
        self._merge(line)
        if record:
            self.history.append(line)

    # -- queries ----------------------------------------------------------------
    @property
    def lines(self) -> List[MeshRectangle]:
        out = []
        for (k, c) in sorted(self._segs):
            for a, b, m in self._segs[(k, c)]:
                out.append(MeshRectangle(k, c, a, b, m))
        return out

    def segments(self, direction: int, fixed: float):
        return tuple(self._segs.get((direction, fixed), ()))

    def coords_between(self, direction: int, lo: float, hi: float) -> List[float]:
        """Fixed coordinates of direction-``direction`` lines strictly inside ``(lo, hi)``."""
        cs = self._coords[direction]
        i = bisect.bisect_right(cs, lo)
        j = bisect.bisect_left(cs, hi)
        return cs[i:j]

    def traversal_multiplicity(self, direction: int, fixed: float, lo: float, hi: float) -> int:
        """Smallest multiplicity of lines covering ``[lo, hi]`` at ``fixed`` (0 on a gap)."""
        return cover_multiplicity(self._segs.get((direction, fixed), ()), lo, hi)

    def elements(self) -> List[Element]:
        return [Element(b, self._elements[b])
                for b in sorted(self._elements, key=lambda b: (b.x0, b.y0, b.x1, b.y1))]

    @property
    def n_elements(self) -> int:
        return len(self._elements)

    def element_boxes(self) -> List[Box]:
        return [e.rect for e in self.elements()]

    def __eq__(self, other) -> bool:
        return (isinstance(other, BoxMesh) and self.domain == other.domain
                and self._segs == other._segs)

    def __repr__(self) -> str:
        return (f"BoxMesh(domain={tuple(self.domain)}, lines={sum(map(len, self._segs.values()))}, "
                f"elements={len(self._elements)}, history={len(self.history)})")


def tensor_mesh(domain: Box, n_x: int, n_y: int, boundary_mult=1, extra=(0, 0)) -> BoxMesh:
    """Uniform ``n_x`` by ``n_y`` grid on ``domain``.

    Boundary lines carry ``boundary_mult`` (an int or a per-direction pair),
    interior lines multiplicity one.  ``extra`` widens the grid by whole
    cells on every side (used for ghost domains).
    """
    domain = Box(*domain)
    if isinstance(boundary_mult, int):
        boundary_mult = (boundary_mult, boundary_mult)
    xs = grid_coords(domain.x0, domain.x1, n_x, extra=extra[0])
    ys = grid_coords(domain.y0, domain.y1, n_y, extra=extra[1])
    return _mesh_from_grid(TensorGrid(xs, ys, tuple(boundary_mult)))


def _mesh_from_grid(base: TensorGrid) -> BoxMesh:
    xs, ys, mult = base.xs, base.ys, base.boundary_mult
    mesh = BoxMesh(base.domain, base)
    for i, x in enumerate(xs):
        mesh._merge(MeshRectangle(1, x, ys[0], ys[-1], mult[0] if i in (0, len(xs) - 1) else 1))
    for j, y in enumerate(ys):
        mesh._merge(MeshRectangle(2, y, xs[0], xs[-1], mult[1] if j in (0, len(ys) - 1) else 1))
    for x0, x1 in zip(xs, xs[1:]):
        for y0, y1 in zip(ys, ys[1:]):
            mesh._elements[Box(x0, x1, y0, y1)] = 1
    return mesh


def insert_meshline(mesh: BoxMesh, line: MeshRectangle) -> BoxMesh:
    new = mesh.copy()
    new._insert(line)
    return new


def elements(mesh: BoxMesh) -> List[Element]:
    return mesh.elements()


# -- hierarchical meshes ---------------------------------------------------------

@dataclass(frozen=True)
class HierarchicalSpec:
    """Nested regions ``Omega_1 >= ... >= Omega_M`` over dyadic tensor grids.

    ``regions[l]`` is the list of boxes whose union is level ``l + 1``'s
    region; ``regions[0]`` is the whole domain.
    """

    domain: Box
    initial_cells: Tuple[int, int]
    regions: Tuple[Tuple[Box, ...], ...]

    @property
    def levels(self) -> int:
        return len(self.regions)

    def cell_size(self, level: int) -> Tuple[float, float]:
        s = 1 << (level - 1)
        return (self.domain.width / (self.initial_cells[0] * s),
                self.domain.height / (self.initial_cells[1] * s))

    def truncated(self, levels: int) -> "HierarchicalSpec":
        return HierarchicalSpec(self.domain, self.initial_cells, self.regions[:levels])

    def extended(self, cells: Tuple[int, int]) -> "HierarchicalSpec":
        """Same regions on a domain widened by ``cells`` coarse cells per side."""
        d = self.domain
        gx = grid_coords(d.x0, d.x1, self.initial_cells[0], extra=cells[0])
        gy = grid_coords(d.y0, d.y1, self.initial_cells[1], extra=cells[1])
        dom = Box(gx[0], gx[-1], gy[0], gy[-1])
        cells_ext = (self.initial_cells[0] + 2 * cells[0], self.initial_cells[1] + 2 * cells[1])
        return HierarchicalSpec(dom, cells_ext, ((dom,),) + tuple(self.regions[1:]))

    def validate(self) -> None:
        if not self.regions or tuple(self.regions[0]) != (self.domain,):
            raise MeshError("level-1 region must be the whole domain")
        for lev in range(2, self.levels + 1):
            hx, hy = self.cell_size(lev - 1)
            for box in self.regions[lev - 1]:
                if not self.domain.contains_box(box):
                    raise MeshError(f"region {tuple(box)} leaves the domain")
                for v, o, h in ((box.x0, self.domain.x0, hx), (box.x1, self.domain.x0, hx),
                                (box.y0, self.domain.y0, hy), (box.y1, self.domain.y0, hy)):
                    r = (v - o) / h
                    if r != round(r):
                        raise MeshError(f"region {tuple(box)} not aligned with level {lev - 1} meshlines")
                if not union_contains(self.regions[lev - 2], box):
                    raise MeshError(f"level {lev} region {tuple(box)} not nested in level {lev - 1}")


def _region_segments(boxes: Sequence[Box], direction: int, coords: Sequence[float],
                     span: Tuple[float, float]) -> List[MeshRectangle]:
    """Maximal pieces of the lines ``coords`` (direction ``direction``) inside the union."""
    out = []
    for c in coords:
        ivals = []
        for b in boxes:
            if direction == 1 and b.x0 <= c <= b.x1:
                ivals.append((b.y0, b.y1))
            elif direction == 2 and b.y0 <= c <= b.y1:
                ivals.append((b.x0, b.x1))
        ivals.sort()
        merged = []
        for a, b in ivals:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        out.extend(MeshRectangle(direction, c, a, b) for a, b in merged if a < b)
    return out


def hierarchical_lines(spec: HierarchicalSpec, level: int,
                       boundary_mult=(1, 1)) -> List[MeshRectangle]:
    """Level-``level`` tensor lines restricted to that level's region, new ones only."""
    d = spec.domain
    nx, ny = spec.initial_cells
    xs = grid_coords(d.x0, d.x1, nx, level)
    ys = grid_coords(d.y0, d.y1, ny, level)
    if level == 1:
        return ([MeshRectangle(1, x, d.y0, d.y1) for x in xs]
                + [MeshRectangle(2, y, d.x0, d.x1) for y in ys])
    # odd indices are the new midlines of this level
    boxes = spec.regions[level - 1]
    return (_region_segments(boxes, 1, xs[1::2], (d.y0, d.y1))
            + _region_segments(boxes, 2, ys[1::2], (d.x0, d.x1)))


def build_hierarchical(spec: HierarchicalSpec, boundary_mult=1, dyadic: bool = True) -> BoxMesh:
    """Hierarchical mesh of ``spec`` with an LR-legal insertion history.

    Lines are inserted level by level, vertical before horizontal, so every
    intermediate mesh is a box mesh.
    """
    if not dyadic:
        raise NotImplementedError("only dyadic hierarchies are supported")
    spec.validate()
    nx, ny = spec.initial_cells
    mesh = tensor_mesh(spec.domain, nx, ny, boundary_mult)
    for lev in range(2, spec.levels + 1):
        for line in hierarchical_lines(spec, lev):
            mesh._insert(line)
        for box in list(mesh._elements):
            if union_contains(spec.regions[lev - 1], box):
                mesh._elements[box] = lev
    return mesh


def central_spec(levels: int, cells: int = 16, domain: Box = Box(0.0, 1.0, 0.0, 1.0)) -> HierarchicalSpec:
    """Nested central squares, each the middle half of the previous region."""
    regions = [(domain,)]
    box = domain
    for _ in range(2, levels + 1):
        w, h = box.width / 4, box.height / 4
        box = Box(box.x0 + w, box.x1 - w, box.y0 + h, box.y1 - h)
        regions.append((box,))
    spec = HierarchicalSpec(domain, (cells, cells), tuple(regions))
    spec.validate()
    return spec


def diagonal_spec(levels: int, cells: int = 8, band: int = 2,
                  domain: Box = Box(0.0, 1.0, 0.0, 1.0)) -> HierarchicalSpec:
    """Staircase refinement along the main diagonal.

    Level ``l`` refines the level ``l - 1`` cells ``(i, j)`` with ``|i - j| <= band``.
    """
    regions = [(domain,)]
    for lev in range(2, levels + 1):
        n = cells << (lev - 2)
        xs = grid_coords(domain.x0, domain.x1, cells, lev - 1)
        ys = grid_coords(domain.y0, domain.y1, cells, lev - 1)
        boxes = []
        for i in range(n):
            j0, j1 = max(0, i - band), min(n, i + band + 1)
            boxes.append(Box(xs[i], xs[i + 1], ys[j0], ys[j1]))
        regions.append(tuple(boxes))
    spec = HierarchicalSpec(domain, (cells, cells), tuple(regions))
    spec.validate()
    return spec


# -- support queries --------------------------------------------------------------

def traverses_support(line: MeshRectangle, b: TensorBSpline) -> bool:
    """Whether ``line`` splits ``b``: it crosses the whole transversal extent
    strictly inside the support and adds knot multiplicity there."""
    if line.direction == 1:
        kv, (lo, hi) = b.kv_u, (b.kv_v.first, b.kv_v.last)
    else:
        kv, (lo, hi) = b.kv_v, (b.kv_u.first, b.kv_u.last)
    return (kv.first < line.fixed < kv.last and line.a <= lo and line.b >= hi
            and kv.multiplicity(line.fixed) < line.multiplicity)


def missing_knot(b: TensorBSpline, mesh: BoxMesh):
    """First ``(direction, t)`` where a traversing meshline is not (fully) a knot of ``b``."""
    for direction, kv, (lo, hi) in ((1, b.kv_u, (b.kv_v.first, b.kv_v.last)),
                                    (2, b.kv_v, (b.kv_u.first, b.kv_u.last))):
        for c in mesh.coords_between(direction, kv.first, kv.last):
            mu = mesh.traversal_multiplicity(direction, c, lo, hi)
            if mu > kv.multiplicity(c):
                return direction, c
    return None


def has_minimal_support(b: TensorBSpline, mesh: BoxMesh) -> bool:
    """Knot lines of ``b`` are meshlines of ``mesh`` and occur consecutively."""
    for direction, kv, (lo, hi) in ((1, b.kv_u, (b.kv_v.first, b.kv_v.last)),
                                    (2, b.kv_v, (b.kv_u.first, b.kv_u.last))):
        present = set(mesh.coords_between(direction, kv.first, kv.last))
        for t in set(kv.knots):
            mu = mesh.traversal_multiplicity(direction, t, lo, hi)
            need = kv.multiplicity(t)
            if kv.first < t < kv.last:
                if mu != need:
                    return False
                present.discard(t)
            elif mu < need:
                return False
        for c in present:
            if mesh.traversal_multiplicity(direction, c, lo, hi) > 0:
                return False
    return True


# -- serialization ------------------------------------------------------------------

def dump_mesh(mesh: BoxMesh) -> str:
    """Line-oriented text: ``k fixed a b mu`` per mesh-rectangle.

    Header records start with ``#``; replayable meshes also carry their base
    grid and ``+``-prefixed history records.
    """
    d = mesh.domain
    out = ["#domain " + " ".join(format_dyadic(v) for v in d)]
    if mesh.base is not None:
        out.append("#base-x " + " ".join(format_dyadic(v) for v in mesh.base.xs))
        out.append("#base-y " + " ".join(format_dyadic(v) for v in mesh.base.ys))
        out.append("#base-mult %d %d" % mesh.base.boundary_mult)
        out.extend("+ " + str(line) for line in mesh.history)
    out.extend(str(line) for line in mesh.lines)
    return "\n".join(out) + "\n"


def _parse_line(fields) -> MeshRectangle:
    k, c, a, b, m = fields
    return MeshRectangle(int(k), parse_dyadic(c), parse_dyadic(a), parse_dyadic(b), int(m))


def load_mesh(text: str) -> BoxMesh:
    domain = None
    xs = ys = None
    mult = (1, 1)
    history, lines = [], []
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw:
            continue
        head, *rest = raw.split()
        if head == "#domain":
            domain = Box(*map(parse_dyadic, rest))
        elif head == "#base-x":
            xs = tuple(map(parse_dyadic, rest))
        elif head == "#base-y":
            ys = tuple(map(parse_dyadic, rest))
        elif head == "#base-mult":
            mult = (int(rest[0]), int(rest[1]))
        elif head == "+":
            history.append(_parse_line(rest))
        elif head.startswith("#"):
            continue
        else:
            lines.append(_parse_line([head] + rest))
    if domain is None:
        raise MeshError("mesh text lacks a #domain record")
    if xs is not None:
        mesh = _mesh_from_grid(TensorGrid(xs, ys, mult))
        for line in history:
            mesh._insert(line)
        return mesh
    return mesh_from_lines(domain, lines)


def mesh_from_lines(domain: Box, lines: Iterable[MeshRectangle]) -> BoxMesh:
    """Rebuild a mesh (without history) from its mesh-rectangles.

    The partition is recovered by union-find over the arrangement grid: two
    neighbouring arrangement cells belong to the same element unless a
    meshline separates them.
    """
    mesh = BoxMesh(domain)
    for line in lines:
        mesh._merge(line)
    xs = sorted({domain.x0, domain.x1, *mesh._coords[1]})
    ys = sorted({domain.y0, domain.y1, *mesh._coords[2]})
    nx, ny = len(xs) - 1, len(ys) - 1
    parent = list(range(nx * ny))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def covered(direction, fixed, lo, hi):
        return mesh.traversal_multiplicity(direction, fixed, lo, hi) > 0

    for i in range(nx):
        for j in range(ny):
            if i + 1 < nx and not covered(1, xs[i + 1], ys[j], ys[j + 1]):
                parent[find(i * ny + j)] = find((i + 1) * ny + j)
            if j + 1 < ny and not covered(2, ys[j + 1], xs[i], xs[i + 1]):
                parent[find(i * ny + j)] = find(i * ny + j + 1)
    groups: Dict[int, List[Tuple[int, int]]] = {}
    for i in range(nx):
        for j in range(ny):
            groups.setdefault(find(i * ny + j), []).append((i, j))
    for cells in groups.values():
        i0 = min(c[0] for c in cells)
        i1 = max(c[0] for c in cells)
        j0 = min(c[1] for c in cells)
        j1 = max(c[1] for c in cells)
        if len(cells) != (i1 - i0 + 1) * (j1 - j0 + 1):
            raise MeshError("not a box mesh: a region of the partition is not a box")
        mesh._elements[Box(xs[i0], xs[i1 + 1], ys[j0], ys[j1 + 1])] = 1
    return mesh
