"""Deterministic SVG rendering of meshes, overload reports and heatmaps."""
from __future__ import annotations

from typing import List, Sequence, Tuple, Union

from .boxmesh import BoxMesh
from .geometry import Box
from .overload import OverloadReport

SIZE = 512
MARGIN = 8


def _frame(domain: Box):
    scale = SIZE / max(domain.width, domain.height)

    def tx(x):
        return MARGIN + (x - domain.x0) * scale

    def ty(y):
        return MARGIN + (domain.y1 - y) * scale

    return tx, ty


def _header(domain: Box) -> List[str]:
    scale = SIZE / max(domain.width, domain.height)
    w = round(domain.width * scale + 2 * MARGIN, 3)
    h = round(domain.height * scale + 2 * MARGIN, 3)
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:g}" height="{h:g}" '
            f'viewBox="0 0 {w:g} {h:g}">',
            f'<rect x="0" y="0" width="{w:g}" height="{h:g}" fill="white"/>']


def _boxes(domain: Box, cells: Sequence[Tuple[Box, str, float]]) -> List[str]:
    tx, ty = _frame(domain)
    out = []
    for b, color, opacity in cells:
        if opacity <= 0:
            continue
        x, y = tx(b.x0), ty(b.y1)
        out.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{tx(b.x1) - x:.3f}" '
                   f'height="{ty(b.y0) - y:.3f}" fill="{color}" fill-opacity="{opacity:.4f}"/>')
    return out


def _lines(mesh: BoxMesh, domain: Box) -> List[str]:
    tx, ty = _frame(domain)
    out = []
    for ln in mesh.lines:
        if ln.direction == 1:
            x1 = x2 = tx(ln.fixed)
            y1, y2 = ty(ln.a), ty(ln.b)
        else:
            y1 = y2 = ty(ln.fixed)
            x1, x2 = tx(ln.a), tx(ln.b)
        out.append(f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
                   f'stroke="black" stroke-width="{0.6 * ln.multiplicity:.1f}"/>')
    return out


def render_mesh_svg(obj: Union[BoxMesh, OverloadReport, Sequence[Tuple[Box, float]]], path=None,
                    mesh: BoxMesh = None) -> str:
    """Render a mesh, an overload report (red, by excess) or a heatmap (grey).

    ``mesh`` adds meshlines under a report or heatmap.  Returns the SVG text and
    writes it when ``path`` is given.
    """
    if isinstance(obj, BoxMesh):
        mesh = obj
        domain = obj.domain
        body = _lines(obj, domain)
    elif isinstance(obj, OverloadReport):
        domain = mesh.domain if mesh is not None else _hull(obj.elements)
        top = max([int(e) for e in obj.excess] + [1])
        body = _boxes(domain, [(b, "red", max(int(e), 0) / top) for b, e in zip(obj.elements, obj.excess)])
        if mesh is not None:
            body += _lines(mesh, domain)
    else:
        cells = list(obj)
        domain = mesh.domain if mesh is not None else _hull([b for b, _ in cells])
        body = _boxes(domain, [(b, "black", float(v)) for b, v in cells])
        if mesh is not None:
            body += _lines(mesh, domain)
    text = "\n".join(_header(domain) + body + ["</svg>"]) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _hull(boxes: Sequence[Box]) -> Box:
    return Box(min(b.x0 for b in boxes), max(b.x1 for b in boxes),
               min(b.y0 for b in boxes), max(b.y1 for b in boxes))
