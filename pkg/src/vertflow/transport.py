"""Piecewise-affine measure transport on triangles and triangulated surfaces.

An elementary map H(h, eps) on the standard right isosceles triangle V
moves mass across the horizontal median while fixing the boundary; its six
affine pieces have determinants 1/(1-|h|) and 1/(1+|h|).  Recursive
halving of V with one elementary map per sub-triangle pushes any
near-uniform piecewise-constant density to Lebesgue measure; a corridor
stage with one elementary map per shared edge balances the triangles of a
triangulated surface first.

All geometry is exact rational; densities are piecewise constant on
convex rational cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .geometry import (
    AffineMap,
    Point,
    clip_convex,
    cross,
    point_in_convex,
    polygon_area,
    triangle_area,
)

EPS_HAT_LIMIT = Fraction(1, 10**8)


class DensityBoundError(ValueError):
    """A density bound required by the construction is violated."""


class TransportError(RuntimeError):
    pass


def operator_norm_2x2(m) -> float:
    """Closed-form operator norm sqrt((s + sqrt(s^2 - 4 det^2)) / 2) with
    s the sum of squared entries."""
    a, b = float(m[0][0]), float(m[0][1])
    c, d = float(m[1][0]), float(m[1][1])
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    inner = s * s - 4 * det * det
    if inner < 0:  # numerical noise for conformal maps
        inner = 0.0
    return math.sqrt((s + math.sqrt(inner)) / 2)


# ---------------------------------------------------------------------------
# the elementary map


@dataclass(frozen=True)
class AffinePiece:
    source: tuple[Point, Point, Point]
    map: AffineMap
    upper_target: bool  # image lies in the upper half V1

    def target(self) -> list[Point]:
        return self.map.apply_polygon(list(self.source))


@dataclass(frozen=True)
class PiecewiseAffineHomeo:
    """Finitely many affine pieces whose sources tile a region."""

    pieces: tuple[AffinePiece, ...]

    def apply(self, p: Point) -> Point:
        for piece in self.pieces:
            if point_in_convex(p, piece.source):
                return piece.map.apply(p)
        raise ValueError(f"point {p} outside every piece source")

    def inverse(self) -> "PiecewiseAffineHomeo":
        inv = []
        for piece in self.pieces:
            inv.append(
                AffinePiece(
                    source=tuple(piece.target()),
                    map=piece.map.inverse(),
                    upper_target=piece.upper_target,
                )
            )
        return PiecewiseAffineHomeo(tuple(inv))

    def max_piece_norm(self) -> float:
        out = 0.0
        for piece in self.pieces:
            out = max(out, piece.map.operator_norm())
        return out

    def to_json(self) -> list:
        return [
            {
                "source": [[str(x), str(y)] for x, y in piece.source],
                "matrix": [[str(c) for c in row] for row in piece.map.m],
                "translation": [str(c) for c in piece.map.t],
            }
            for piece in self.pieces
        ]


def standard_triangle(a: Fraction) -> tuple[Point, Point, Point]:
    a = Fraction(a)
    return ((Fraction(0), a), (a, Fraction(0)), (Fraction(0), -a))


def elementary_H(h, eps, a=Fraction(1)) -> PiecewiseAffineHomeo:
    """The boundary-fixing map H(h, eps) of V = triangle((0,a),(a,0),(0,-a)).

    For h >= 0 the six pieces C_i are mapped onto hat-C_i with the vertex
    y = (eps a (1-h), h a) sent to (eps a, 0) and (eps a, 0) sent to
    hat-y = (eps a (1 - h/(1+h)), -a h/(1+h)); h < 0 is the reflection
    J H(-h, eps) J across the horizontal axis.  h = 0 is the identity.
    """
    h = Fraction(h)
    eps = Fraction(eps)
    a = Fraction(a)
    if not (-1 < h < 1) or not (0 < eps < 1) or a <= 0:
        raise ValueError("need -1 < h < 1, 0 < eps < 1, a > 0")
    top = (Fraction(0), a)
    right = (a, Fraction(0))
    bottom = (Fraction(0), -a)
    origin = (Fraction(0), Fraction(0))
    if h == 0:
        return PiecewiseAffineHomeo(
            (
                AffinePiece((top, right, origin), AffineMap.identity(), True),
                AffinePiece((origin, right, bottom), AffineMap.identity(), False),
            )
        )
    sign = 1 if h > 0 else -1
    hh = abs(h)
    hat_h = hh / (1 + hh)
    y = (eps * a * (1 - hh), hh * a)
    y_hat = (eps * a * (1 - hat_h), -hat_h * a)
    e = (eps * a, Fraction(0))
    corr = [
        # (source triangle, target triangle), vertexwise, for h > 0
        (((origin, top, y), (origin, top, e)), True),
        (((right, top, y), (right, top, e)), True),
        (((origin, e, y), (origin, y_hat, e)), False),
        (((right, e, y), (right, y_hat, e)), False),
        (((origin, bottom, e), (origin, bottom, y_hat)), False),
        (((right, bottom, e), (right, bottom, y_hat)), False),
    ]

    def refl(p: Point) -> Point:
        return (p[0], -p[1]) if sign < 0 else p

    pieces = []
    for (src, dst), upper in corr:
        src = tuple(refl(p) for p in src)
        dst = tuple(refl(p) for p in dst)
        m = AffineMap.from_triangles(src, dst)
        pieces.append(AffinePiece(src, m, upper if sign > 0 else not upper))
    return PiecewiseAffineHomeo(tuple(pieces))


def lipschitz_gap(h1, h2, eps, a=Fraction(1), samples: int = 12) -> float:
    """Sampled sup distance between H(h1,eps), H(h2,eps) and between their
    inverses; bounded by (20 a / eps) |h2 - h1|."""
    H1 = elementary_H(h1, eps, a)
    H2 = elementary_H(h2, eps, a)
    I1 = H1.inverse()
    I2 = H2.inverse()
    a = Fraction(a)
    pts = []
    n = samples
    for i in range(n + 1):
        for j in range(n + 1 - i):
            # barycentric grid on V
            u, v = Fraction(i, n), Fraction(j, n)
            w = 1 - u - v
            x = u * a
            yy = (w - v) * a
            pts.append((x, yy))
    worst = 0.0

    def dist(p, q):
        return math.hypot(float(p[0] - q[0]), float(p[1] - q[1]))

    for p in pts:
        if not point_in_convex(p, standard_triangle(a)):
            continue
        worst = max(worst, dist(H1.apply(p), H2.apply(p)))
        worst = max(worst, dist(I1.apply(p), I2.apply(p)))
    return worst


# ---------------------------------------------------------------------------
# piecewise-constant densities


@dataclass(frozen=True)
class PCDensity:
    """Positive piecewise-constant density: convex rational cells + values.

    Cells must tile the intended region (verified against a region area);
    the normalization integral-of-density = region area is the caller's
    contract and is checked by ``validate``.
    """

    cells: tuple  # ((polygon tuple, value Fraction), ...)

    @staticmethod
    def build(cells) -> "PCDensity":
        normalized = []
        for poly, value in cells:
            poly = tuple((Fraction(x), Fraction(y)) for x, y in poly)
            normalized.append((poly, Fraction(value)))
        return PCDensity(tuple(normalized))

    @staticmethod
    def uniform(region: Sequence[Point]) -> "PCDensity":
        return PCDensity.build([(tuple(region), Fraction(1))])

    def total_mass(self) -> Fraction:
        return sum(
            (v * polygon_area(poly) for poly, v in self.cells), Fraction(0)
        )

    def total_area(self) -> Fraction:
        return sum((polygon_area(poly) for poly, _ in self.cells), Fraction(0))

    def value_range(self) -> tuple[Fraction, Fraction]:
        vals = [v for _, v in self.cells]
        return min(vals), max(vals)

    def mass_in_convex(self, region: Sequence[Point]) -> Fraction:
        rb = _bbox(region)
        total = Fraction(0)
        for poly, v in self.cells:
            if _bbox_disjoint(_bbox(poly), rb):
                continue
            if all(point_in_convex(p, region) for p in poly):
                total += v * polygon_area(poly)
                continue
            part = clip_convex(poly, region)
            if part:
                total += v * polygon_area(part)
        return total

    def validate(self, region_area: Fraction, s1: Fraction, s2: Fraction) -> None:
        lo, hi = self.value_range()
        if not (s1 < lo and hi < s2):
            raise DensityBoundError(
                f"density range [{lo}, {hi}] outside ({s1}, {s2})"
            )
        if self.total_mass() != region_area:
            raise DensityBoundError(
                "density does not integrate to the region area "
                f"({self.total_mass()} vs {region_area})"
            )

    def restricted_to(self, region: Sequence[Point]) -> "PCDensity":
        parts = []
        for poly, v in self.cells:
            part = clip_convex(poly, region)
            if part:
                parts.append((tuple(part), v))
        return PCDensity(tuple(parts))

    def mapped(self, m: AffineMap) -> "PCDensity":
        det = abs(m.det())
        return PCDensity(
            tuple(
                (tuple(m.apply_polygon(list(poly))), v / det)
                for poly, v in self.cells
            )
        )

    def mapped_keep_values(self, m: AffineMap) -> "PCDensity":
        """Conjugate the region without rescaling values (density relative
        to a target measure that is rescaled alongside)."""
        return PCDensity(
            tuple(
                (tuple(m.apply_polygon(list(poly))), v)
                for poly, v in self.cells
            )
        )


def _bbox(poly):
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return min(xs), min(ys), max(xs), max(ys)


def _bbox_disjoint(a, b) -> bool:
    return a[2] <= b[0] or b[2] <= a[0] or a[3] <= b[1] or b[3] <= a[1]


def rational_sqrt(x: Fraction, scale: int = 10**24) -> Fraction:
    """Rational approximation of sqrt(x) accurate to ~1/scale, exact input."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("negative input")
    num = x.numerator * scale * scale
    den = x.denominator
    return Fraction(math.isqrt(num // den), scale)


# ---------------------------------------------------------------------------
# the half-mass equation on a (conjugated) standard triangle


def find_h(
    density: PCDensity,
    eps_hat: Fraction,
    conjugation: Optional[AffineMap] = None,
    target_upper: Optional[Fraction] = None,
    a: Fraction = Fraction(1),
    residual: Fraction = Fraction(1, 10**15),
    max_iter: int = 200,
    h_bound: Optional[Fraction] = None,
) -> tuple[Fraction, Fraction]:
    """Solve for h: the upper quadrilateral carries the prescribed mass.

    The quadrilateral mass is strictly decreasing in h for positive
    densities, so an Illinois-type bracket search converges; when the
    density is constant on each half of the triangle the mass is piecewise
    linear in h and the exact rational root is returned.

    Returns (h, achieved residual).  The default target is half the
    triangle's Lebesgue measure, per the halving construction.
    """
    eps_hat = Fraction(eps_hat)
    if not (0 < eps_hat < EPS_HAT_LIMIT):
        raise ValueError(f"need 0 < eps_hat < 1e-8, got {eps_hat}")
    if h_bound is None:
        h_bound = eps_hat
    eps_h = rational_sqrt(eps_hat, scale=10**9)
    conj = conjugation or AffineMap.identity()
    leb_v = abs(conj.det()) * a * a
    if target_upper is None:
        target_upper = leb_v / 2
    origin = (Fraction(0), Fraction(0))
    right = (a, Fraction(0))
    upper_half = conj.apply_polygon([(Fraction(0), a), right, origin])
    lower_half = conj.apply_polygon([origin, right, (Fraction(0), -a)])
    base_cache = {}

    def mass_upper(h: Fraction) -> Fraction:
        # y(0) = (eps a, 0) sits on the segment (0,0)-(a,0), so the upper
        # quadrilateral is the upper half minus (h > 0) or plus (h < 0) the
        # triangle ((0,0), (a,0), y(h))
        if "base" not in base_cache:
            base_cache["base"] = density.mass_in_convex(upper_half)
        base_mass = base_cache["base"]
        if h == 0:
            return base_mass
        y = (eps_h * a * (1 - abs(h)), h * a)
        sliver = density.mass_in_convex(
            conj.apply_polygon([origin, right, y])
        )
        return base_mass - sliver if h > 0 else base_mass + sliver

    # exact piecewise-linear shortcut: constant density on each half
    # (quick sound bbox check first, then the clipping-precise one)
    cu = _constant_value_bbox(density, upper_half)
    if cu is None:
        cu = _constant_value_on(density, upper_half)
    cl = _constant_value_bbox(density, lower_half)
    if cl is None:
        cl = _constant_value_on(density, lower_half)
    if cu is not None and cl is not None:
        half = leb_v / 2
        base = cu * half  # mass_upper at h = 0
        if target_upper <= base:
            hh = (base - target_upper) / (cu * half) if cu else None
        else:
            hh = -(target_upper - base) / (cl * half) if cl else None
        if hh is not None and -1 < hh < 1:
            if mass_upper(hh) == target_upper:
                if abs(hh) >= h_bound:
                    raise DensityBoundError(
                        f"|h| = {abs(hh)} violates the bound {h_bound}; "
                        "density outside the construction window"
                    )
                return hh, Fraction(0)
    # bracket: |h_f| < eps_hat under the density bounds
    lo, hi = -eps_hat, eps_hat
    m_lo, m_hi = mass_upper(lo), mass_upper(hi)
    if not (m_hi <= target_upper <= m_lo):
        # widen once before giving up: signals bound violations upstream
        lo, hi = -Fraction(1, 2), Fraction(1, 2)
        m_lo, m_hi = mass_upper(lo), mass_upper(hi)
        if not (m_hi <= target_upper <= m_lo):
            raise DensityBoundError(
                "half-mass equation has no root in (-1/2, 1/2); density "
                "violates the construction bounds"
            )
    cur = Fraction(0)
    m_cur = mass_upper(cur)
    side = 0
    for _ in range(max_iter):
        err = m_cur - target_upper
        if abs(err) <= residual * leb_v:
            if abs(cur) >= h_bound:
                raise DensityBoundError(
                    f"|h| = {abs(cur)} violates the bound {h_bound}; "
                    "density outside the construction window"
                )
            return cur, abs(err)
        if err > 0:
            lo, m_lo = cur, m_cur
            side_new = -1
        else:
            hi, m_hi = cur, m_cur
            side_new = 1
        # Illinois secant with bisection safety
        denom = m_hi - m_lo
        if denom != 0:
            cur_sec = lo + (m_lo - target_upper) * (hi - lo) / (m_lo - m_hi)
        else:
            cur_sec = (lo + hi) / 2
        mid = (lo + hi) / 2
        cur = cur_sec if lo < cur_sec < hi and side != side_new else mid
        side = side_new
        cur = cur.limit_denominator(10**17)
        if not (lo < cur < hi):
            cur = mid
        m_cur = mass_upper(cur)
    raise TransportError("half-mass search did not converge")


def _constant_value_bbox(density: PCDensity, region) -> Optional[Fraction]:
    """Sound quick constancy check: if every cell whose bounding box meets
    the region's shares one value, the density is constant there (cells
    tile a superset of the region).  None means "not provably constant"."""
    rb = _bbox(region)
    seen = None
    for poly, v in density.cells:
        if _bbox_disjoint(_bbox(poly), rb):
            continue
        if seen is None:
            seen = v
        elif seen != v:
            return None
    return seen


def _constant_value_on(density: PCDensity, region) -> Optional[Fraction]:
    """The density's constant value on the region, or None if not constant."""
    area = polygon_area(region)
    rb = _bbox(region)
    seen = None
    covered = Fraction(0)
    for poly, v in density.cells:
        if _bbox_disjoint(_bbox(poly), rb):
            continue
        part = clip_convex(poly, region)
        if part:
            pa = polygon_area(part)
            covered += pa
            if seen is None:
                seen = v
            elif seen != v:
                return None
    if covered != area:
        return None
    return seen


# ---------------------------------------------------------------------------
# bisection transport on a triangle


@dataclass
class StageRecord:
    depth: int
    h_values: list
    max_norm: float
    mass_errors: list  # (node mass - Leb(node)) before the stage, exact


@dataclass
class TriangleTransport:
    """Depth-N composition of per-node elementary maps on the standard V."""

    a: Fraction
    depth: int
    stages: list  # per stage: list of (node triangle, PiecewiseAffineHomeo)
    leaves: list  # (leaf triangle, exact pushforward mass)
    records: list
    final_density: PCDensity

    def apply(self, p: Point) -> Point:
        for stage in self.stages:
            for node, homeo in stage:
                if point_in_convex(p, node):
                    p = homeo.apply(p)
                    break
        return p

    def max_lipschitz(self) -> float:
        out = 0.0
        for rec in self.records:
            out = max(out, rec.max_norm)
        return out

    def to_json(self) -> dict:
        return {
            "a": str(self.a),
            "depth": self.depth,
            "stages": [
                [
                    {"node": [[str(x), str(y)] for x, y in node],
                     "pieces": homeo.to_json()}
                    for node, homeo in stage
                ]
                for stage in self.stages
            ],
        }


def _halves(node):
    """Split a right isosceles node (hyp1, right, hyp2) at the hypotenuse
    midpoint into two congruent right isosceles children."""
    a_pt, r_pt, b_pt = node
    m = ((a_pt[0] + b_pt[0]) / 2, (a_pt[1] + b_pt[1]) / 2)
    return (a_pt, m, r_pt), (r_pt, m, b_pt)


def _node_conjugation(node) -> AffineMap:
    """Affine map from the reference V(1) = ((0,1),(1,0),(0,-1)) onto the
    node (hyp1, right, hyp2); a similarity since both are right isosceles."""
    ref = ((Fraction(0), Fraction(1)), (Fraction(1), Fraction(0)),
           (Fraction(0), Fraction(-1)))
    return AffineMap.from_triangles(ref, node)


def bisection_transport(
    density: PCDensity,
    eps_hat: Fraction,
    depth: int,
    region: Optional[tuple[Point, Point, Point]] = None,
    residual: Fraction = Fraction(1, 10**15),
) -> TriangleTransport:
    """Push the density on the standard triangle to Lebesgue by recursive
    halving; stage n solves the half-mass equation independently on each of
    the 2^(n-1) sub-triangles and applies the elementary map there.

    Stage maps have every piece Lipschitz constant < 5/4, and after stage n
    each depth-n triangle carries mass Leb within the stage residuals.
    """
    eps_hat = Fraction(eps_hat)
    if not (0 < eps_hat < EPS_HAT_LIMIT):
        raise ValueError("need 0 < eps_hat < 1e-8")
    if region is None:
        region = standard_triangle(Fraction(1))
    top, right, bottom = region
    node0 = (top, right, bottom)
    expected = density.total_mass()
    if expected != triangle_area(*node0):
        raise DensityBoundError(
            "density mass must equal the triangle area exactly"
        )
    eps_h = rational_sqrt(eps_hat, scale=10**9)
    lo_bound = (1 - eps_hat) ** (depth + 1)
    hi_bound = (1 + eps_hat) ** (depth + 1)
    nodes = [(node0, density)]
    stages = []
    records = []
    for n in range(1, depth + 1):
        stage = []
        h_values = []
        max_norm = 0.0
        mass_errors = []
        new_nodes = []
        for node, dens in nodes:
            conj = _node_conjugation(node)
            leb_node = abs(conj.det())  # reference Leb(V(1)) = 1
            mass_errors.append(dens.total_mass() - leb_node)
            vlo, vhi = dens.value_range()
            if not (lo_bound < vlo and vhi < hi_bound):
                raise DensityBoundError(
                    f"stage {n}: density escaped the bound window; "
                    "eps_hat too large for this data"
                )
            h, _err = find_h(
                dens, eps_hat, conjugation=conj, residual=residual
            )
            h_values.append(h)
            local = elementary_H(h, eps_h, Fraction(1))
            # conjugate to the node
            conj_inv = conj.inverse()
            pieces = []
            for piece in local.pieces:
                src = tuple(conj.apply_polygon(list(piece.source)))
                m = conj.compose(piece.map).compose(conj_inv)
                pieces.append(AffinePiece(src, m, piece.upper_target))
                max_norm = max(max_norm, piece.map.operator_norm())
            homeo = PiecewiseAffineHomeo(tuple(pieces))
            stage.append((node, homeo))
            upper_child, lower_child = _halves(node)
            upper_cells, lower_cells = [], []
            piece_boxes = [_bbox(piece.source) for piece in homeo.pieces]
            for poly, v in dens.cells:
                pb = _bbox(poly)
                for piece, box in zip(homeo.pieces, piece_boxes):
                    if _bbox_disjoint(pb, box):
                        continue
                    if all(point_in_convex(p, piece.source) for p in poly):
                        part = list(poly)
                    else:
                        part = clip_convex(poly, piece.source)
                    if part:
                        image = piece.map.apply_polygon(part)
                        value = v / abs(piece.map.det())
                        if piece.upper_target:
                            upper_cells.append((tuple(image), value))
                        else:
                            lower_cells.append((tuple(image), value))
            new_nodes.append((upper_child, PCDensity(tuple(upper_cells))))
            new_nodes.append((lower_child, PCDensity(tuple(lower_cells))))
        stages.append(stage)
        records.append(
            StageRecord(depth=n, h_values=h_values, max_norm=max_norm,
                        mass_errors=mass_errors)
        )
        nodes = new_nodes
    leaves = []
    final_cells = []
    for node, dens in nodes:
        leaves.append((node, dens.total_mass()))
        final_cells.extend(dens.cells)
    return TriangleTransport(
        a=Fraction(1), depth=depth, stages=stages, leaves=leaves,
        records=records, final_density=PCDensity(tuple(final_cells)),
    )


# ---------------------------------------------------------------------------
# surface transport


def shared_edge(t1, t2) -> Optional[tuple[Point, Point]]:
    common = [p for p in t1 if p in t2]
    if len(common) == 2:
        return common[0], common[1]
    return None


def adjacency_order(triangles):
    """k(i) < i mapping every triangle (i >= 1) to an earlier edge-neighbour,
    by breadth-first search; errors if the triangulation is disconnected."""
    m = len(triangles)
    k = {}
    seen = {0}
    frontier = [0]
    order = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for j in range(m):
                if j in seen:
                    continue
                if shared_edge(triangles[i], triangles[j]) is not None:
                    seen.add(j)
                    k[j] = i
                    nxt.append(j)
                    order.append(j)
        frontier = nxt
    if len(seen) != m:
        raise TransportError("triangulation is not edge-connected")
    # re-index in BFS order so k(i) < i
    relabel = {old: new for new, old in enumerate(order)}
    return {relabel[j]: relabel[i] for j, i in k.items()}, order


def convex_subtract_triangle(poly, tri) -> list:
    """Exact difference poly \\ tri as disjoint convex pieces."""
    tri = list(tri)
    s = polygon_area(tri)
    if s == 0:
        return [list(poly)]
    # orient tri counterclockwise
    if cross(tri[0], tri[1], tri[2]) < 0:
        tri = tri[::-1]
    pieces = []
    remaining = list(poly)
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        # outside half-plane of edge (a, b): cross(a,b,p) <= 0
        outside = _clip_halfplane(remaining, a, b, keep_left=False)
        if outside:
            pieces.append(outside)
        remaining = _clip_halfplane(remaining, a, b, keep_left=True)
        if not remaining:
            break
    return pieces


def _clip_halfplane(poly, a, b, keep_left: bool):
    if not poly:
        return []
    out = []
    prev = poly[-1]
    prev_side = cross(a, b, prev)
    if not keep_left:
        prev_side = -prev_side
    for cur in poly:
        cur_side = cross(a, b, cur)
        if not keep_left:
            cur_side = -cur_side
        if cur_side >= 0:
            if prev_side < 0:
                out.append(_intersect(a, b, prev, cur))
            out.append(cur)
        elif prev_side >= 0:
            out.append(_intersect(a, b, prev, cur))
        prev, prev_side = cur, cur_side
    cleaned = []
    for p in out:
        if not cleaned or p != cleaned[-1]:
            cleaned.append(p)
    if len(cleaned) > 1 and cleaned[0] == cleaned[-1]:
        cleaned.pop()
    if len(cleaned) < 3 or polygon_area(cleaned) == 0:
        return []
    return cleaned


def _intersect(a, b, p, q):
    d1 = cross(a, b, p)
    d2 = cross(a, b, q)
    t = d1 / (d1 - d2)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


@dataclass
class SurfaceTransport:
    triangles: list
    k_map: dict
    corridors: list  # (index i, W triangle vertices, h_i, homeo)
    v_solution: list
    corridor_masses_exact: bool
    per_triangle_mass_after_G: list  # (mass, Leb) exact Fractions
    stage2: list  # per triangle: TriangleTransport in reference coords
    conjugations: list  # AffineMap: triangle -> reference V(1)
    global_mass_before: Fraction
    global_mass_after: Fraction
    notes: list = field(default_factory=list)

    def leaf_mass_report(self):
        out = []
        for i, tt in enumerate(self.stage2):
            scale = abs(self.conjugations[i].inverse().det())
            for leaf, mass in tt.leaves:
                out.append((i, mass * scale, triangle_area(*leaf) * scale))
        return out


def solve_corridor_system(k_map: dict, rhs: list) -> list:
    """Solve B v = rhs with b_ii = 1, b_{k(j), j} = -1 by substitution in
    decreasing index order (B is unitriangular under k(i) < i)."""
    m = len(rhs)
    v = [Fraction(0)] * (m + 1)
    children = {}
    for j, par in k_map.items():
        children.setdefault(par, []).append(j)
    for i in range(m, 0, -1):
        v[i] = rhs[i - 1] + sum(
            (v[j] for j in children.get(i, [])), Fraction(0)
        )
    return v[1:]


def surface_transport(
    triangles: Sequence,
    density: PCDensity,
    eps_hat: Fraction,
    depth: int = 6,
    corridor_scale: Fraction = Fraction(1, 4),
) -> SurfaceTransport:
    """Two-stage transport on a triangulated region.

    Stage one places an isosceles right corridor triangle W_i on each
    adjacency edge (same nominal size a = corridor_scale * shortest shared
    edge, realized through a rational unit-direction approximation) and
    moves exactly the solved mass v_i across the edge, making every
    triangle's mass exactly Lebesgue when the density is constant near the
    corridors.  Stage two runs the bisection transport inside each
    triangle.
    """
    eps_hat = Fraction(eps_hat)
    triangles = [tuple((Fraction(x), Fraction(y)) for x, y in t) for t in triangles]
    m = len(triangles)
    k_map, order = adjacency_order(triangles)
    triangles = [triangles[i] for i in order]
    notes = []
    leb = [triangle_area(*t) for t in triangles]
    total_leb = sum(leb, Fraction(0))
    global_before = density.total_mass()
    if global_before != total_leb:
        raise DensityBoundError("density mass must equal the region area")
    # density epsilon bound: values within (1/(1+eps), 1/(1-eps)), eps < eps_hat/3
    lo, hi = density.value_range()
    eps_bound = eps_hat / 3
    if not (1 / (1 + eps_bound) < lo and hi < 1 / (1 - eps_bound)):
        raise DensityBoundError(
            f"density range ({lo}, {hi}) outside the eps_hat/3 window"
        )
    mu = [density.mass_in_convex(t) for t in triangles]
    rhs = [leb[i] - mu[i] for i in range(1, m)]
    v = solve_corridor_system(k_map, rhs)
    # corridor geometry
    edges = {}
    min_len2 = None
    for i in range(1, m):
        e = shared_edge(triangles[i], triangles[k_map[i]])
        edges[i] = e
        ln2 = (e[1][0] - e[0][0]) ** 2 + (e[1][1] - e[0][1]) ** 2
        min_len2 = ln2 if min_len2 is None else min(min_len2, ln2)
    a_nominal = corridor_scale * rational_sqrt(min_len2)
    for attempt in range(12):
        ok = True
        corridors_geom = []
        for i in range(1, m):
            p, q = edges[i]
            ln2 = (q[0] - p[0]) ** 2 + (q[1] - p[1]) ** 2
            r = a_nominal / rational_sqrt(ln2)
            w = ((q[0] - p[0]) * r, (q[1] - p[1]) * r)
            nu = (-w[1], w[0])
            mid = ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)
            up = (mid[0] + nu[0], mid[1] + nu[1])
            dn = (mid[0] - nu[0], mid[1] - nu[1])
            # orient nu into U_{k(i)} (upper half belongs to the mass donor)
            if point_in_convex(up, triangles[i]) and point_in_convex(
                dn, triangles[k_map[i]]
            ):
                nu = (-nu[0], -nu[1])
                up, dn = dn, up
            upper_tri = (up, (mid[0] + w[0], mid[1] + w[1]), mid)
            lower_tri = (mid, (mid[0] + w[0], mid[1] + w[1]), dn)
            in_upper = all(
                point_in_convex(pt, triangles[k_map[i]])
                for pt in (up, (mid[0] + w[0], mid[1] + w[1]), mid)
            )
            in_lower = all(
                point_in_convex(pt, triangles[i])
                for pt in (dn, (mid[0] + w[0], mid[1] + w[1]), mid)
            )
            if not (in_upper and in_lower):
                ok = False
                break
            corridors_geom.append((i, mid, w, nu, up, dn))
        if ok:
            # pairwise disjoint corridors
            ws = [
                (c[4], (c[1][0] + c[2][0], c[1][1] + c[2][1]), c[5])
                for c in corridors_geom
            ]
            for x in range(len(ws)):
                for y in range(x + 1, len(ws)):
                    if clip_convex(list(ws[x]), list(ws[y])):
                        ok = False
                        break
                if not ok:
                    break
        if ok:
            break
        a_nominal = a_nominal / 2
    else:
        raise TransportError("could not place disjoint corridor triangles")
    # mass-bound requirement |v_i| < a_i^2 eps_hat / 12
    for idx, (i, mid, w, nu, up, dn) in enumerate(corridors_geom):
        a2 = w[0] * w[0] + w[1] * w[1]
        if not abs(v[i - 1]) < a2 * eps_hat / 12:
            raise DensityBoundError(
                f"|v_{i}| = {abs(v[i - 1])} violates the corridor bound "
                f"a^2 eps_hat / 12 = {a2 * eps_hat / 12}"
            )
    # solve and build the corridor maps
    eps_h = rational_sqrt(eps_hat, scale=10**9)
    corridors = []
    cells = list(density.cells)
    exact_all = True
    for (i, mid, w, nu, up, dn) in corridors_geom:
        # conjugation: reference V(1) -> W_i with (0,1) -> up (donor side),
        # (1,0) -> mid + w, (0,-1) -> dn (receiver side U_i)
        ref = ((Fraction(0), Fraction(1)), (Fraction(1), Fraction(0)),
               (Fraction(0), Fraction(-1)))
        tgt = (up, (mid[0] + w[0], mid[1] + w[1]), dn)
        conj = AffineMap.from_triangles(ref, tgt)
        w_tri = list(tgt)
        mass_w = density.mass_in_convex(w_tri)
        mass_upper_half = density.mass_in_convex([up, (mid[0] + w[0], mid[1] + w[1]), mid])
        target_upper = mass_upper_half - v[i - 1]
        local_density = density.restricted_to(w_tri)
        h, err = find_h(
            local_density, eps_hat, conjugation=conj,
            target_upper=target_upper, h_bound=eps_hat / 3,
        )
        if err != 0:
            exact_all = False
        assert abs(h) < eps_hat / 3
        local = elementary_H(h, eps_h, Fraction(1))
        conj_inv = conj.inverse()
        pieces = []
        for piece in local.pieces:
            src = tuple(conj.apply_polygon(list(piece.source)))
            mmap = conj.compose(piece.map).compose(conj_inv)
            pieces.append(AffinePiece(src, mmap, piece.upper_target))
        homeo = PiecewiseAffineHomeo(tuple(pieces))
        corridors.append((i, tgt, h, homeo))
        # apply to the global cells: inside W via pieces, outside identity
        new_cells = []
        for poly, val in cells:
            inside = clip_convex(poly, w_tri)
            if not inside:
                new_cells.append((poly, val))
                continue
            for piece in homeo.pieces:
                part = clip_convex(poly, piece.source)
                if part:
                    image = piece.map.apply_polygon(part)
                    new_cells.append(
                        (tuple(image), val / abs(piece.map.det()))
                    )
            for rem in convex_subtract_triangle(poly, w_tri):
                new_cells.append((tuple(rem), val))
        cells = new_cells
    after_g = PCDensity(tuple(cells))
    per_mass = []
    for i in range(m):
        per_mass.append((after_g.mass_in_convex(triangles[i]), leb[i]))
    # stage 2: bisection transport per triangle, in reference coordinates
    ref = ((Fraction(0), Fraction(1)), (Fraction(1), Fraction(0)),
           (Fraction(0), Fraction(-1)))
    stage2 = []
    conjugations = []
    for i in range(m):
        to_ref = AffineMap.from_triangles(triangles[i], ref)
        conjugations.append(to_ref)
        local = after_g.restricted_to(triangles[i]).mapped_keep_values(to_ref)
        tt = bisection_transport(local, eps_hat, depth)
        stage2.append(tt)
    global_after = sum((mass for mass, _ in per_mass), Fraction(0))
    return SurfaceTransport(
        triangles=triangles,
        k_map=k_map,
        corridors=corridors,
        v_solution=v,
        corridor_masses_exact=exact_all,
        per_triangle_mass_after_G=per_mass,
        stage2=stage2,
        conjugations=conjugations,
        global_mass_before=global_before,
        global_mass_after=global_after,
        notes=notes,
    )
