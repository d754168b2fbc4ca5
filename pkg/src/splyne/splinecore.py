"""Univariate and tensor-product B-splines defined by local knot vectors.

A univariate B-spline of degree ``p`` is fully determined by its ``p + 2``
knots, so no global knot vector is needed.  Evaluation follows the
Cox--de Boor recursion with the convention that terms with a vanishing
denominator are dropped.

Supports are half-open ``[t_1, t_{p+2})``.  Callers that need the closed
right end of a domain pass ``right=`` (the global domain maximum); a point
equal to ``right`` is then assigned to the last non-empty interval.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .geometry import Box

__all__ = [
    "LocalKnotVector",
    "TensorBSpline",
    "eval_univariate",
    "eval_univariate_deriv",
    "split_univariate",
    "eval_tensor",
    "grad_tensor",
]


@dataclass(frozen=True)
class LocalKnotVector:
    """Non-decreasing sequence of ``p + 2`` knots."""

    knots: Tuple[float, ...]

    def __init__(self, knots: Sequence[float]):
        knots = tuple(float(t) for t in knots)
        if len(knots) < 2:
            raise ValueError("a local knot vector needs at least two knots")
        if any(a > b for a, b in zip(knots, knots[1:])):
            raise ValueError(f"knots must be non-decreasing: {knots}")
        if knots[0] == knots[-1]:
            raise ValueError(f"fully degenerate knot vector: {knots}")
        object.__setattr__(self, "knots", knots)

    @property
    def degree(self) -> int:
        return len(self.knots) - 2

    @property
    def first(self) -> float:
        return self.knots[0]

    @property
    def last(self) -> float:
        return self.knots[-1]

    def multiplicity(self, t: float) -> int:
        return self.knots.count(t)

    def __len__(self) -> int:
        return len(self.knots)

    def __iter__(self):
        return iter(self.knots)

    def __getitem__(self, i):
        return self.knots[i]

    def __repr__(self) -> str:
        return f"LocalKnotVector({list(self.knots)})"


def _as_knots(kv) -> Tuple[float, ...]:
    return kv.knots if isinstance(kv, LocalKnotVector) else tuple(kv)


def _cox(knots: Tuple[float, ...], x: float, right: Optional[float]) -> float:
    p = len(knots) - 2
    if p == 0:
        t1, t2 = knots
        if t1 <= x < t2:
            return 1.0
        if right is not None and x == right and t2 == right and t1 < t2:
            return 1.0
        return 0.0
    value = 0.0
    d1 = knots[p] - knots[0]
    if d1 != 0.0:
        value += (x - knots[0]) / d1 * _cox(knots[:-1], x, right)
    d2 = knots[p + 1] - knots[1]
    if d2 != 0.0:
        value += (knots[p + 1] - x) / d2 * _cox(knots[1:], x, right)
    return value


def eval_univariate(kv, x: float, right: Optional[float] = None) -> float:
    """Value of ``B[kv]`` at ``x`` by the two-term recursion."""
    return _cox(_as_knots(kv), float(x), right)


def eval_univariate_deriv(kv, x: float, right: Optional[float] = None) -> float:
    """First derivative of ``B[kv]`` at ``x``.

    Uses ``p * (B[t-]/(t_{p+1}-t_1) - B[t+]/(t_{p+2}-t_2))``; a term with a
    zero denominator is dropped, matching the evaluation rule.
    """
    knots = _as_knots(kv)
    p = len(knots) - 2
    if p == 0:
        raise ValueError("derivative of a degree-0 B-spline is not a function")
    value = 0.0
    d1 = knots[p] - knots[0]
    if d1 != 0.0:
        value += _cox(knots[:-1], float(x), right) / d1
    d2 = knots[p + 1] - knots[1]
    if d2 != 0.0:
        value -= _cox(knots[1:], float(x), right) / d2
    return p * value


def split_univariate(kv, t: float):
    """Insert ``t`` into ``kv`` and return ``(left, alpha_left, right, alpha_right)``.

    ``B[kv] == alpha_left * B[left] + alpha_right * B[right]`` identically.
    """
    knots = _as_knots(kv)
    t = float(t)
    if not knots[0] < t < knots[-1]:
        raise ValueError(f"split point {t} outside the open support ({knots[0]}, {knots[-1]})")
    p = len(knots) - 2
    refined = tuple(sorted(knots + (t,)))
    left = LocalKnotVector(refined[:-1])
    right = LocalKnotVector(refined[1:])
    # alpha = 1 whenever the inserted knot falls past the inner knot.
    if t >= knots[p]:
        alpha_left = 1.0
    else:
        alpha_left = (t - knots[0]) / (knots[p] - knots[0])
    if t <= knots[1]:
        alpha_right = 1.0
    else:
        alpha_right = (knots[p + 1] - t) / (knots[p + 1] - knots[1])
    return left, alpha_left, right, alpha_right


@dataclass(frozen=True)
class TensorBSpline:
    """Scaled tensor-product B-spline ``weight * B[kv_u] (x) B[kv_v]``."""

    kv_u: LocalKnotVector
    kv_v: LocalKnotVector
    weight: float = 1.0

    def __post_init__(self):
        if not isinstance(self.kv_u, LocalKnotVector):
            object.__setattr__(self, "kv_u", LocalKnotVector(self.kv_u))
        if not isinstance(self.kv_v, LocalKnotVector):
            object.__setattr__(self, "kv_v", LocalKnotVector(self.kv_v))
        if not self.weight > 0:
            raise ValueError(f"weights must be positive, got {self.weight}")

    @property
    def key(self) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        """Identity of the function, ignoring its weight."""
        return self.kv_u.knots, self.kv_v.knots

    @property
    def degree(self) -> Tuple[int, int]:
        return self.kv_u.degree, self.kv_v.degree

    @property
    def support(self) -> Box:
        return Box(self.kv_u.first, self.kv_u.last, self.kv_v.first, self.kv_v.last)

    def with_weight(self, weight: float) -> "TensorBSpline":
        return TensorBSpline(self.kv_u, self.kv_v, weight)

    def __call__(self, x: float, y: float, right=None) -> float:
        return eval_tensor(self, x, y, right)


def _split_right(right):
    if right is None:
        return None, None
    return right


def eval_tensor(b: TensorBSpline, x: float, y: float, right=None) -> float:
    rx, ry = _split_right(right)
    return b.weight * eval_univariate(b.kv_u, x, rx) * eval_univariate(b.kv_v, y, ry)


def grad_tensor(b: TensorBSpline, x: float, y: float, right=None) -> Tuple[float, float]:
    rx, ry = _split_right(right)
    if b.kv_u.degree == 0:
        du = 0.0
    else:
        du = eval_univariate_deriv(b.kv_u, x, rx) * eval_univariate(b.kv_v, y, ry)
    if b.kv_v.degree == 0:
        dv = 0.0
    else:
        dv = eval_univariate(b.kv_u, x, rx) * eval_univariate_deriv(b.kv_v, y, ry)
    return b.weight * du, b.weight * dv
