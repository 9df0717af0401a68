"""Exact 2-D geometry over rationals: affine maps, convex clipping, areas.

All coordinates are Fractions, so predicates and areas are exact.  Clip
regions are convex; subject polygons here are always convex as well (cells
start convex and stay convex under affine maps and convex clipping).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

Point = tuple[Fraction, Fraction]


def fr(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def cross(o: Point, a: Point, b: Point) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def polygon_area(poly: Sequence[Point]) -> Fraction:
    """Absolute area of a simple polygon (shoelace)."""
    n = len(poly)
    if n < 3:
        return Fraction(0)
    s = Fraction(0)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2


def triangle_area(a: Point, b: Point, c: Point) -> Fraction:
    return abs(cross(a, b, c)) / 2


def point_in_convex(p: Point, poly: Sequence[Point]) -> bool:
    """Point inside or on the boundary of a convex polygon (any orientation)."""
    n = len(poly)
    sign = 0
    for i in range(n):
        c = cross(poly[i], poly[(i + 1) % n], p)
        if c == 0:
            continue
        s = 1 if c > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def _ensure_ccw(poly: list[Point]) -> list[Point]:
    s = Fraction(0)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return poly if s >= 0 else poly[::-1]


def clip_convex(subject: Sequence[Point], clip: Sequence[Point]) -> list[Point]:
    """Sutherland-Hodgman intersection of two convex polygons, exact.

    Returns the (possibly empty) intersection polygon with duplicate
    vertices removed; degenerate (zero-area) results come back empty.
    """
    output = list(subject)
    clip = _ensure_ccw(list(clip))
    n = len(clip)
    for i in range(n):
        if not output:
            return []
        cp1, cp2 = clip[i], clip[(i + 1) % n]
        input_list = output
        output = []
        prev = input_list[-1]
        prev_side = cross(cp1, cp2, prev)
        for cur in input_list:
            cur_side = cross(cp1, cp2, cur)
            if cur_side >= 0:
                if prev_side < 0:
                    output.append(_line_intersect(cp1, cp2, prev, cur))
                output.append(cur)
            elif prev_side >= 0:
                output.append(_line_intersect(cp1, cp2, prev, cur))
            prev, prev_side = cur, cur_side
    cleaned: list[Point] = []
    for pt in output:
        if not cleaned or pt != cleaned[-1]:
            cleaned.append(pt)
    if len(cleaned) > 1 and cleaned[0] == cleaned[-1]:
        cleaned.pop()
    if len(cleaned) < 3 or polygon_area(cleaned) == 0:
        return []
    return cleaned


def _line_intersect(a: Point, b: Point, p: Point, q: Point) -> Point:
    """Intersection of line (a,b) with segment (p,q); caller guarantees crossing."""
    d1 = cross(a, b, p)
    d2 = cross(a, b, q)
    t = d1 / (d1 - d2)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


@dataclass(frozen=True)
class AffineMap:
    """x -> M x + t with exact rational entries."""

    m: tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]
    t: tuple[Fraction, Fraction]

    @staticmethod
    def identity() -> "AffineMap":
        one, zero = Fraction(1), Fraction(0)
        return AffineMap(((one, zero), (zero, one)), (zero, zero))

    @staticmethod
    def from_triangles(src: Sequence[Point], dst: Sequence[Point]) -> "AffineMap":
        """Unique affine map sending src[i] -> dst[i] for noncollinear src."""
        (x0, y0), (x1, y1), (x2, y2) = src
        det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if det == 0:
            raise ValueError("source triangle is degenerate")
        (u0, v0), (u1, v1), (u2, v2) = dst
        # Solve M [x1-x0, y1-y0] = [u1-u0, v1-v0], same for the second edge.
        a = ((u1 - u0) * (y2 - y0) - (u2 - u0) * (y1 - y0)) / det
        b = ((u2 - u0) * (x1 - x0) - (u1 - u0) * (x2 - x0)) / det
        c = ((v1 - v0) * (y2 - y0) - (v2 - v0) * (y1 - y0)) / det
        d = ((v2 - v0) * (x1 - x0) - (v1 - v0) * (x2 - x0)) / det
        tx = u0 - a * x0 - b * y0
        ty = v0 - c * x0 - d * y0
        return AffineMap(((a, b), (c, d)), (tx, ty))

    def apply(self, p: Point) -> Point:
        (a, b), (c, d) = self.m
        return (a * p[0] + b * p[1] + self.t[0], c * p[0] + d * p[1] + self.t[1])

    def apply_polygon(self, poly: Sequence[Point]) -> list[Point]:
        return [self.apply(p) for p in poly]

    def det(self) -> Fraction:
        (a, b), (c, d) = self.m
        return a * d - b * c

    def inverse(self) -> "AffineMap":
        (a, b), (c, d) = self.m
        det = self.det()
        if det == 0:
            raise ValueError("map is singular")
        ia, ib, ic, id_ = d / det, -b / det, -c / det, a / det
        tx = -(ia * self.t[0] + ib * self.t[1])
        ty = -(ic * self.t[0] + id_ * self.t[1])
        return AffineMap(((ia, ib), (ic, id_)), (tx, ty))

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self o other."""
        (a, b), (c, d) = self.m
        (e, f), (g, h) = other.m
        m = ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))
        t = self.apply(other.t)
        return AffineMap(m, t)

    def operator_norm(self) -> float:
        from .transport import operator_norm_2x2

        return operator_norm_2x2(
            [[float(self.m[0][0]), float(self.m[0][1])],
             [float(self.m[1][0]), float(self.m[1][1])]]
        )


def convex_hull_is_triangle(points: Sequence[Point]) -> bool:
    return len(points) == 3 and cross(points[0], points[1], points[2]) != 0
