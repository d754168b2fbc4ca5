"""Axis-aligned boxes and dyadic number formatting."""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, NamedTuple


class Box(NamedTuple):
    """Closed 2-box ``[x0, x1] x [y0, y1]``."""

    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self):
        return 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)

    def contains_box(self, other: "Box") -> bool:
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def overlaps(self, other: "Box") -> bool:
        """True if the interiors intersect."""
        return (self.x0 < other.x1 and other.x0 < self.x1
                and self.y0 < other.y1 and other.y0 < self.y1)

    def contains_point(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def intersection(self, other: "Box"):
        x0, x1 = max(self.x0, other.x0), min(self.x1, other.x1)
        y0, y1 = max(self.y0, other.y0), min(self.y1, other.y1)
        if x0 < x1 and y0 < y1:
            return Box(x0, x1, y0, y1)
        return None


def format_dyadic(x: float) -> str:
    """Render ``x`` exactly as ``num/2^k`` (or ``num`` when ``k == 0``)."""
    frac = Fraction(x)
    den = frac.denominator
    k = den.bit_length() - 1
    if den != 1 << k:
        raise ValueError(f"{x!r} is not a dyadic rational")
    if k == 0:
        return str(frac.numerator)
    return f"{frac.numerator}/2^{k}"


def parse_dyadic(text: str) -> float:
    text = text.strip()
    if "/2^" in text:
        num, k = text.split("/2^")
        return float(Fraction(int(num), 1 << int(k)))
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def union_contains(boxes: Iterable[Box], box: Box) -> bool:
    """Whether ``box`` lies inside the union of ``boxes`` (up to measure zero)."""
    boxes = [b for b in boxes if b.overlaps(box)]
    if not boxes:
        return False
    xs = sorted({box.x0, box.x1, *(c for b in boxes for c in (b.x0, b.x1) if box.x0 < c < box.x1)})
    ys = sorted({box.y0, box.y1, *(c for b in boxes for c in (b.y0, b.y1) if box.y0 < c < box.y1)})
    for xa, xb in zip(xs, xs[1:]):
        for ya, yb in zip(ys, ys[1:]):
            cx, cy = 0.5 * (xa + xb), 0.5 * (ya + yb)
            if not any(b.contains_point(cx, cy) for b in boxes):
                return False
    return True


def union_overlaps(boxes: Iterable[Box], box: Box) -> bool:
    return any(b.overlaps(box) for b in boxes)
