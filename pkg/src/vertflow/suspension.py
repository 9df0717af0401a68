"""Suspension data (pi, lambda, tau), polygons, and polygonal Rauzy-Veech induction.

Lengths are exact rationals; tau components are QVectors over a formal
basis, so polygon abscissae are exact rationals while ordinates are exact
symbolic combinations with a certified numeric shadow.  The roof vector is
h = -Omega_pi tau.

The vertical-flow simulator at the bottom closes the loop: for data with
rational tau it verifies, exactly, that the first-return map of the
vertical flow to the base separatrix segment is the IET and that the
return time over the interval of symbol a is h_a.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

import mpmath

from .exact_linalg import (
    DEFAULT_PRECISION,
    QVector,
    certified_sign,
    evaluate_numeric,
)
from .permutations import LabeledPermutation, l_action, rauzy_move, translation_matrix


class ThetaViolation(ValueError):
    """Suspension constraints do not hold (with a first-violation report)."""


class InductionUndefined(ValueError):
    """The two relevant lengths are equal; the induction step is undefined."""


class SaddleConnectionError(ValueError):
    """Two polygon vertex abscissae coincide; vertical saddle connection likely."""


def _parse_basis(spec: Sequence[str], precision: int) -> list:
    vals = []
    with mpmath.workprec(precision):
        for s in spec:
            if s == "1":
                vals.append(mpmath.mpf(1))
            elif s.startswith("sqrt:"):
                vals.append(mpmath.sqrt(int(s.split(":")[1])))
            else:
                vals.append(mpmath.mpf(s))
    return vals


def default_basis_spec(dim: int) -> list[str]:
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
    if dim - 1 > len(primes):
        raise ValueError("basis spec limited to dimension %d" % (len(primes) + 1))
    return ["1"] + ["sqrt:%d" % p for p in primes[: dim - 1]]


@dataclass(frozen=True)
class SuspensionDatum:
    """(pi, lambda, tau) with tau over a formal rationally-independent basis."""

    perm: LabeledPermutation
    lengths: tuple[Fraction, ...]  # aligned with perm.alphabet, >= 0
    tau: tuple[QVector, ...]  # aligned with perm.alphabet
    basis_spec: tuple[str, ...]
    precision: int = DEFAULT_PRECISION

    def __post_init__(self):
        d = self.perm.d
        if len(self.lengths) != d or len(self.tau) != d:
            raise ValueError("lengths and tau must match the alphabet")
        if any(l < 0 for l in self.lengths):
            raise ValueError("lengths must be nonnegative")
        if sum(self.lengths) <= 0:
            raise ValueError("total length must be positive")
        dims = {t.dim for t in self.tau}
        if len(dims) != 1:
            raise ValueError("tau components must share dimension")
        if len(self.basis_spec) != dims.pop():
            raise ValueError("basis spec length must equal tau dimension")

    @staticmethod
    def build(perm, lengths, tau, basis_spec=None, precision=DEFAULT_PRECISION):
        """lengths/tau maps keyed by symbol, or sequences in alphabet order."""
        if isinstance(lengths, dict):
            lengths = [lengths[a] for a in perm.alphabet]
        if isinstance(tau, dict):
            tau = [tau[a] for a in perm.alphabet]
        lengths = tuple(Fraction(x) for x in lengths)
        tau = tuple(
            t if isinstance(t, QVector) else QVector.constant(1, Fraction(t))
            for t in tau
        )
        if basis_spec is None:
            basis_spec = default_basis_spec(tau[0].dim)
        return SuspensionDatum(perm, lengths, tau, tuple(basis_spec), precision)

    def basis_values(self) -> list:
        return _parse_basis(self.basis_spec, self.precision)

    def length(self, symbol: str) -> Fraction:
        return self.lengths[self.perm.alphabet.index(symbol)]

    def tau_of(self, symbol: str) -> QVector:
        return self.tau[self.perm.alphabet.index(symbol)]

    def total_length(self) -> Fraction:
        return sum(self.lengths, Fraction(0))

    def tau_is_rational(self) -> bool:
        return all(t.is_rational() for t in self.tau)

    def to_json(self) -> dict:
        return {
            "perm": self.perm.to_json(),
            "lambda": [str(x) for x in self.lengths],
            "tau": [t.to_json() for t in self.tau],
            "basis": list(self.basis_spec),
        }

    @staticmethod
    def from_json(obj: dict) -> "SuspensionDatum":
        perm = LabeledPermutation.from_json(obj["perm"])
        lengths = [Fraction(s) for s in obj["lambda"]]
        tau = [QVector.from_json(t) for t in obj["tau"]]
        return SuspensionDatum.build(perm, lengths, tau, obj.get("basis"))


# ---------------------------------------------------------------------------
# Theta constraints, roof, area


def validate_theta(
    perm: LabeledPermutation,
    lengths: Sequence[Fraction],
    tau: Sequence[QVector],
    basis_values: Sequence,
    precision: int = DEFAULT_PRECISION,
) -> tuple[bool, Optional[str]]:
    """Check the 2(d-1) partial-sum sign conditions and the zero-length
    adjacency rule.  Returns (ok, first-violation report)."""
    d = perm.d
    zero = QVector.zero(tau[0].dim)
    for row, pi, want in (("top", perm.pi0, 1), ("bottom", perm.pi1, -1)):
        partial = zero
        for k in range(1, d):
            idx = pi.index(k)
            partial = partial + tau[idx]
            sign = certified_sign(partial, basis_values, precision)
            if sign != want:
                return False, (
                    f"{row} partial sum at k={k} has sign {sign}, expected {want}"
                )
    for row, pi in (("top", perm.pi0), ("bottom", perm.pi1)):
        for k in range(1, d):
            i = pi.index(k)
            j = pi.index(k + 1)
            if lengths[i] == 0 and lengths[j] == 0:
                si = certified_sign(tau[i], basis_values, precision)
                sj = certified_sign(tau[j], basis_values, precision)
                if si * sj <= 0:
                    return False, (
                        f"adjacent zero-length symbols at {row} positions "
                        f"{k},{k + 1} have non-matching tau signs"
                    )
    return True, None


def validate_theta_datum(datum: SuspensionDatum) -> tuple[bool, Optional[str]]:
    return validate_theta(
        datum.perm, datum.lengths, datum.tau, datum.basis_values(), datum.precision
    )


def roof_from_tau(
    perm: LabeledPermutation,
    tau: Sequence[QVector],
    basis_values: Optional[Sequence] = None,
    precision: int = DEFAULT_PRECISION,
) -> tuple[QVector, ...]:
    """h = -Omega_pi tau, with the numeric shadow certified positive."""
    om = translation_matrix(perm)
    d = perm.d
    dim = tau[0].dim
    h = []
    for i in range(d):
        acc = QVector.zero(dim)
        for j in range(d):
            if om[i][j]:
                acc = acc + om[i][j] * tau[j]
        h.append(-acc)
    if basis_values is not None:
        for i, comp in enumerate(h):
            if certified_sign(comp, basis_values, precision) <= 0:
                raise ThetaViolation(
                    f"roof component for symbol {perm.alphabet[i]} is not "
                    "positive; suspension constraints violated upstream"
                )
    return tuple(h)


def roof_of(datum: SuspensionDatum) -> tuple[QVector, ...]:
    return roof_from_tau(
        datum.perm, datum.tau, datum.basis_values(), datum.precision
    )


def area(lengths: Sequence[Fraction], roof: Sequence[QVector]) -> QVector:
    """Total suspension mass, sum of lambda_a * h_a, exact."""
    acc = QVector.zero(roof[0].dim)
    for lam, h in zip(lengths, roof):
        if lam:
            acc = acc + lam * h
    return acc


def datum_area(datum: SuspensionDatum) -> QVector:
    return area(datum.lengths, roof_from_tau(datum.perm, datum.tau))


# ---------------------------------------------------------------------------
# polygonal Rauzy-Veech induction


def polygonal_rv_right(datum: SuspensionDatum) -> SuspensionDatum:
    """One right-hand polygonal induction step (pi, lambda, tau)."""
    p = datum.perm
    d = p.d
    i_top = p.pi0.index(d)  # symbol index with pi0 = d
    i_bot = p.pi1.index(d)
    lam_top, lam_bot = datum.lengths[i_top], datum.lengths[i_bot]
    if lam_top == lam_bot:
        raise InductionUndefined(
            "right induction undefined: last top and bottom lengths are equal"
        )
    lengths = list(datum.lengths)
    tau = list(datum.tau)
    if lam_top < lam_bot:
        new_perm = rauzy_move(p, "bottom")
        lengths[i_bot] = lam_bot - lam_top
        tau[i_bot] = tau[i_bot] - tau[i_top]
    else:
        new_perm = rauzy_move(p, "top")
        lengths[i_top] = lam_top - lam_bot
        tau[i_top] = tau[i_top] - tau[i_bot]
    return replace(
        datum, perm=new_perm, lengths=tuple(lengths), tau=tuple(tau)
    )


def mirror(datum: SuspensionDatum) -> SuspensionDatum:
    """Reflection through a vertical axis: positions reversed, tau negated."""
    return replace(
        datum,
        perm=l_action(datum.perm),
        lengths=datum.lengths,
        tau=tuple(-t for t in datum.tau),
    )


def polygonal_rv_left(datum: SuspensionDatum) -> SuspensionDatum:
    """Left-hand induction via mirror conjugation of the right-hand one."""
    p = datum.perm
    i_top = p.pi0.index(1)
    i_bot = p.pi1.index(1)
    if datum.lengths[i_top] == datum.lengths[i_bot]:
        raise InductionUndefined(
            "left induction undefined: first top and bottom lengths are equal"
        )
    return mirror(polygonal_rv_right(mirror(datum)))


def rv_roof_step(
    perm: LabeledPermutation,
    lengths: Sequence[Fraction],
    roof: Sequence[QVector],
) -> tuple[LabeledPermutation, tuple[Fraction, ...], tuple[QVector, ...]]:
    """The same right step in (pi, lambda, h) coordinates: the winner's roof
    becomes the sum of the two last roof values."""
    d = perm.d
    i_top = perm.pi0.index(d)
    i_bot = perm.pi1.index(d)
    lam_top, lam_bot = lengths[i_top], lengths[i_bot]
    if lam_top == lam_bot:
        raise InductionUndefined("right induction undefined (equal lengths)")
    lengths = list(lengths)
    roof = list(roof)
    if lam_top < lam_bot:
        new_perm = rauzy_move(perm, "bottom")
        lengths[i_bot] = lam_bot - lam_top
        roof[i_top] = roof[i_top] + roof[i_bot]
    else:
        new_perm = rauzy_move(perm, "top")
        lengths[i_top] = lam_top - lam_bot
        roof[i_bot] = roof[i_top] + roof[i_bot]
    return new_perm, tuple(lengths), tuple(roof)


def mod_distance(d1: SuspensionDatum, d2: SuspensionDatum) -> float:
    """Sum over symbols of |lambda' - lambda''| + |tau' - tau''| (numeric)."""
    if d1.perm != d2.perm:
        raise ValueError("mod distance requires identical permutations")
    bv = d1.basis_values()
    total = mpmath.mpf(0)
    for i in range(d1.perm.d):
        dl = abs(d1.lengths[i] - d2.lengths[i])
        total += mpmath.mpf(dl.numerator) / mpmath.mpf(dl.denominator)
        total += abs(evaluate_numeric(d1.tau[i] - d2.tau[i], bv))
    return float(total)


# ---------------------------------------------------------------------------
# polygon model


Vertex = tuple[Fraction, QVector]  # (abscissa, symbolic ordinate)


@dataclass(frozen=True)
class PolygonModel:
    """Polygon vertices and their vertical projections.

    Points are (Fraction abscissa, QVector ordinate).  Labels: ("R", i) and
    ("Rp", i) are top/bottom corners, ("S", i)/("Sp", i) the re-glued
    images of the projections ("Q", i)/("Qp", i).
    """

    datum: SuspensionDatum
    points: dict  # label -> Vertex
    order: tuple  # labels of the V-set sorted by increasing abscissa

    def coordinates(self, label) -> Vertex:
        return self.points[label]

    def numeric(self, label) -> tuple[float, float]:
        x, y = self.points[label]
        bv = self.datum.basis_values()
        return float(x), float(evaluate_numeric(y, bv))

    def vertex_roles(self) -> tuple:
        return tuple(lbl[0] for lbl in self.order)


def _path_points(
    perm_row: tuple[int, ...],
    lengths: Sequence[Fraction],
    tau: Sequence[QVector],
) -> list[Vertex]:
    d = len(perm_row)
    dim = tau[0].dim
    pts = [(Fraction(0), QVector.zero(dim))]
    x, y = pts[0]
    for k in range(1, d + 1):
        i = perm_row.index(k)
        x = x + lengths[i]
        y = y + tau[i]
        pts.append((x, y))
    return pts


def _ordinate_on_path(
    pts: list[Vertex],
    perm_row: tuple[int, ...],
    lengths: Sequence[Fraction],
    tau: Sequence[QVector],
    x: Fraction,
) -> tuple[QVector, int]:
    """Ordinate of the path at abscissa x and the (1-based) side index.

    x must lie strictly inside a positive-width side; coinciding with a
    corner abscissa is a saddle-connection condition and is an error.
    """
    for k in range(1, len(pts)):
        x0, y0 = pts[k - 1]
        x1, _ = pts[k]
        if x0 < x < x1:
            i = perm_row.index(k)
            ratio = (x - x0) / lengths[i]
            return y0 + ratio * tau[i], k
        if x == x0 or x == x1:
            raise SaddleConnectionError(
                f"projection abscissa {x} hits a corner; possible vertical "
                "saddle connection"
            )
    raise SaddleConnectionError(f"abscissa {x} outside polygon span")


def polygon_vertices(datum: SuspensionDatum) -> PolygonModel:
    """All R, R', Q, Q', S, S' points with the Re-sorted V ordering.

    Errors when two V-set abscissae coincide (possible vertical saddle
    connection), which includes all data with zero-length symbols.
    """
    p = datum.perm
    d = p.d
    top = _path_points(p.pi0, datum.lengths, datum.tau)
    bot = _path_points(p.pi1, datum.lengths, datum.tau)
    if top[d][0] != bot[d][0] or (top[d][1] - bot[d][1]):
        raise ValueError("polygon does not close; inconsistent data")
    pts: dict = {}
    for i in range(d + 1):
        pts[("R", i)] = top[i]
    for i in range(1, d):
        pts[("Rp", i)] = bot[i]
    for i in range(1, d):
        x = top[i][0]
        y, side = _ordinate_on_path(bot, p.pi1, datum.lengths, datum.tau, x)
        pts[("Q", i)] = (x, y)
        a = p.pi1.index(side)  # symbol index of the bottom side hit
        # identified top side for that symbol starts at R_{pi0(a)-1}
        dx = top[p.pi0[a] - 1][0] - bot[side - 1][0]
        dy = top[p.pi0[a] - 1][1] - bot[side - 1][1]
        pts[("S", i)] = (x + dx, y + dy)
    for i in range(1, d):
        x = bot[i][0]
        y, side = _ordinate_on_path(top, p.pi0, datum.lengths, datum.tau, x)
        pts[("Qp", i)] = (x, y)
        b = p.pi0.index(side)
        dx = bot[p.pi1[b] - 1][0] - top[side - 1][0]
        dy = bot[p.pi1[b] - 1][1] - top[side - 1][1]
        pts[("Sp", i)] = (x + dx, y + dy)
    v_labels = (
        [("R", i) for i in range(d + 1)]
        + [("Rp", i) for i in range(1, d)]
        + [("S", i) for i in range(1, d)]
        + [("Sp", i) for i in range(1, d)]
    )
    abscissae = {}
    for lbl in v_labels:
        x = pts[lbl][0]
        if x in abscissae:
            raise SaddleConnectionError(
                f"vertices {abscissae[x]} and {lbl} share abscissa {x}; "
                "possible vertical saddle connection"
            )
        abscissae[x] = lbl
    order = tuple(sorted(v_labels, key=lambda lbl: pts[lbl][0]))
    return PolygonModel(datum=datum, points=pts, order=order)


def corner_points(datum: SuspensionDatum) -> dict:
    """Just the R / R' corners (no projections, no distinctness demands)."""
    p = datum.perm
    top = _path_points(p.pi0, datum.lengths, datum.tau)
    bot = _path_points(p.pi1, datum.lengths, datum.tau)
    out = {("R", i): top[i] for i in range(p.d + 1)}
    out.update({("Rp", i): bot[i] for i in range(1, p.d)})
    return out


# ---------------------------------------------------------------------------
# triangulation


@dataclass(frozen=True)
class Triangulation:
    model: PolygonModel
    triangles: tuple  # tuples of 3 labels

    def coordinates(self, tri) -> list[Vertex]:
        return [self.model.points[lbl] for lbl in tri]

    def signed_area(self, tri) -> QVector:
        (x0, y0), (x1, y1), (x2, y2) = self.coordinates(tri)
        return (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)

    def combinatorics(self) -> tuple:
        return (tuple(self.model.order), self.triangles)


def triangulate(model: PolygonModel) -> Triangulation:
    """Triangulation into corner caps and trapezoids split by diagonals.

    Vertical segments through every interior corner bound the regions; in
    each region the interior boundary points (the S / S' vertices) are
    fanned against the region diagonal.  Triangle vertices are V-set points
    or their Q-side plane representatives.
    """
    datum = model.datum
    p = datum.perm
    d = p.d
    pts = model.points
    corners = [("R", i) for i in range(d + 1)] + [("Rp", i) for i in range(1, d)]
    corners.sort(key=lambda lbl: pts[lbl][0])

    def proj(lbl):
        kind, i = lbl
        return ("Q", i) if kind == "R" else ("Qp", i)

    def top_bottom(lbl):
        kind, i = lbl
        if kind == "R" and 0 < i < d:
            return lbl, proj(lbl)
        if kind == "Rp":
            return proj(lbl), lbl
        return lbl, lbl  # endpoints

    interior = [
        lbl for lbl in model.order if lbl[0] in ("S", "Sp")
    ]

    triangles = []

    def emit(a, b, c):
        if a == b or b == c or a == c:
            return
        tri = (a, b, c)
        (x0, y0), (x1, y1), (x2, y2) = (pts[a], pts[b], pts[c])
        sgn = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if sgn.is_zero():
            raise ValueError(f"degenerate triangle {tri}")
        triangles.append(tri)

    def cap(apex, far_top, far_bot, tops, bots):
        """Triangulate an end cap: apex with straight sides to the far
        vertical (far_top - far_bot); tops/bots are sorted from the apex.
        The first interior point is the pivot everything else fans around."""
        if not tops and not bots:
            emit(apex, far_top, far_bot)
            return
        first_is_top = bool(tops) and (
            not bots
            or abs(pts[tops[0]][0] - pts[apex][0])
            < abs(pts[bots[0]][0] - pts[apex][0])
        )
        if first_is_top:
            pivot = tops[0]
            bchain = [apex] + bots + [far_bot]
            for u, v in zip(bchain, bchain[1:]):
                emit(pivot, u, v)
            tchain = tops + [far_top]
            for u, v in zip(tchain, tchain[1:]):
                emit(u, v, far_bot)
        else:
            pivot = bots[0]
            tchain = [apex] + tops + [far_top]
            for u, v in zip(tchain, tchain[1:]):
                emit(pivot, u, v)
            bchain = bots + [far_bot]
            for u, v in zip(bchain, bchain[1:]):
                emit(u, v, far_top)

    for t in range(len(corners) - 1):
        lbl_l, lbl_r = corners[t], corners[t + 1]
        x_l, x_r = pts[lbl_l][0], pts[lbl_r][0]
        tl, bl = top_bottom(lbl_l)
        tr, br = top_bottom(lbl_r)
        tops = [lbl for lbl in interior if lbl[0] == "S" and x_l < pts[lbl][0] < x_r]
        bots = [lbl for lbl in interior if lbl[0] == "Sp" and x_l < pts[lbl][0] < x_r]
        tops.sort(key=lambda lbl: pts[lbl][0])
        bots.sort(key=lambda lbl: pts[lbl][0])
        if t == 0:
            cap(lbl_l, tr, br, tops, bots)
            continue
        if t == len(corners) - 2:
            cap(lbl_r, tl, bl, tops[::-1], bots[::-1])
            continue
        # trapezoid: diagonal top-left to bottom-right
        chain = [tl] + tops + [tr]
        for u, v in zip(chain, chain[1:]):
            emit(u, v, br)
        chain = [bl] + bots + [br]
        for u, v in zip(chain, chain[1:]):
            emit(tl, u, v)
    return Triangulation(model=model, triangles=tuple(triangles))


def polygon_area_symbolic(model: PolygonModel) -> QVector:
    """Exact polygon area (equals sum of lambda_a h_a)."""
    datum = model.datum
    d = datum.perm.d
    boundary = [model.points[("R", i)] for i in range(d + 1)]
    boundary += [model.points[("Rp", i)] for i in range(d - 1, 0, -1)]
    dim = datum.tau[0].dim
    s = QVector.zero(dim)
    n = len(boundary)
    for i in range(n):
        x1, y1 = boundary[i]
        x2, y2 = boundary[(i + 1) % n]
        s = s + (x1 * y2 - x2 * y1)
    # top-then-reversed-bottom traversal is clockwise, so negate
    return -1 * s * Fraction(1, 2)


def triangulation_area_symbolic(tri: Triangulation) -> QVector:
    """Sum of absolute triangle areas, signs certified numerically."""
    bv = tri.model.datum.basis_values()
    dim = tri.model.datum.tau[0].dim
    total = QVector.zero(dim)
    for t in tri.triangles:
        a = tri.signed_area(t)
        sgn = certified_sign(a, bv, tri.model.datum.precision)
        total = total + (a if sgn >= 0 else -a) * Fraction(1, 2)
    return total


# ---------------------------------------------------------------------------
# affine comparison matrices between combinatorially equal triangulations


def affine_comparison(
    tri_a: Triangulation, tri_b: Triangulation, index: int
) -> list[list[float]]:
    """Linear part of the map sending triangle #index of tri_a onto the
    same-labelled triangle of tri_b (vertex-to-vertex)."""
    if tri_a.combinatorics() != tri_b.combinatorics():
        raise ValueError("triangulations are not combinatorially identical")
    labels = tri_a.triangles[index]
    bva = tri_a.model.datum.basis_values()
    bvb = tri_b.model.datum.basis_values()

    def num(model, bv, lbl):
        x, y = model.points[lbl]
        return (
            mpmath.mpf(x.numerator) / mpmath.mpf(x.denominator),
            evaluate_numeric(y, bv),
        )

    (xj, yj), (xk, yk), (xl, yl) = (num(tri_a.model, bva, l) for l in labels)
    (uj, vj), (uk, vk), (ul, vl) = (num(tri_b.model, bvb, l) for l in labels)
    rk, ik = xk - xj, yk - yj
    rl, il = xl - xj, yl - yj
    det = rk * il - rl * ik
    b11 = ((uk - uj) * il - (ul - uj) * ik) / det
    b12 = ((ul - uj) * rk - (uk - uj) * rl) / det
    b21 = ((vk - vj) * il - (vl - vj) * ik) / det
    b22 = ((vl - vj) * rk - (vk - vj) * rl) / det
    return [[float(b11), float(b12)], [float(b21), float(b22)]]


# ---------------------------------------------------------------------------
# vertical-flow simulation (rational tau only; everything exact)


class _RationalPolygon:
    def __init__(self, datum: SuspensionDatum):
        if not datum.tau_is_rational():
            raise ValueError("simulation requires rational tau components")
        p = datum.perm
        self.perm = p
        self.d = p.d
        self.lengths = datum.lengths
        self.tau_q = [t.rational_part() for t in datum.tau]
        self.top = self._path(p.pi0)
        self.bot = self._path(p.pi1)
        self.total = datum.total_length()

    def _path(self, row):
        pts = [(Fraction(0), Fraction(0))]
        x, y = pts[0]
        for k in range(1, self.d + 1):
            i = row.index(k)
            x += self.lengths[i]
            y += self.tau_q[i]
            pts.append((x, y))
        return pts

    def side_of(self, row, pts, x: Fraction):
        """(side index k, symbol index) whose open span contains x."""
        for k in range(1, self.d + 1):
            if pts[k - 1][0] < x < pts[k][0]:
                return k, row.index(k)
        raise ValueError(f"abscissa {x} is at a corner or outside")

    def y_on(self, pts, row, x: Fraction) -> Fraction:
        k, i = self.side_of(row, pts, x)
        x0, y0 = pts[k - 1]
        return y0 + (x - x0) * self.tau_q[i] / self.lengths[i]

    def top_y(self, x):
        return self.y_on(self.top, self.perm.pi0, x)

    def bot_y(self, x):
        return self.y_on(self.bot, self.perm.pi1, x)

    def glue_top_to_bottom(self, x: Fraction, y: Fraction):
        """Point on a top side -> its twin on the matching bottom side."""
        k, i = self.side_of(self.perm.pi0, self.top, x)
        kb = self.perm.pi1[i]
        dx = self.bot[kb - 1][0] - self.top[k - 1][0]
        dy = self.bot[kb - 1][1] - self.top[k - 1][1]
        return x + dx, y + dy

    def glue_bottom_to_top(self, x: Fraction, y: Fraction):
        k, i = self.side_of(self.perm.pi1, self.bot, x)
        kt = self.perm.pi0[i]
        dx = self.top[kt - 1][0] - self.bot[k - 1][0]
        dy = self.top[kt - 1][1] - self.bot[k - 1][1]
        return x + dx, y + dy


def _section_segments(poly: _RationalPolygon):
    """The horizontal separatrix of length |lambda| from the base vertex,
    as polygon subsegments [(x0, x1, y, s_offset)]."""
    segs = []
    traversed = Fraction(0)
    x, y = Fraction(0), Fraction(0)
    guard = 0
    while traversed < poly.total:
        guard += 1
        if guard > 16 * poly.d + 16:
            raise RuntimeError("separatrix tracing did not terminate")
        # exit abscissa: smallest corner/crossing abscissa > x at level y
        exit_x = None
        hit = None  # ("top"|"bottom", crossing x)
        for pts, which in ((poly.top, "top"), (poly.bot, "bottom")):
            for k in range(1, poly.d + 1):
                x0, y0 = pts[k - 1]
                x1, y1 = pts[k]
                if x1 <= x:
                    continue
                lo, hi = min(y0, y1), max(y0, y1)
                if not (lo <= y <= hi) or y0 == y1:
                    continue
                cx = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
                if cx > x and (exit_x is None or cx < exit_x):
                    exit_x, hit = cx, which
        if exit_x is None or exit_x > poly.top[-1][0]:
            exit_x, hit = poly.top[-1][0], "end"
        step = min(exit_x - x, poly.total - traversed)
        segs.append((x, x + step, y, traversed))
        traversed += step
        if traversed >= poly.total:
            break
        if hit == "top":
            x, y = poly.glue_top_to_bottom(exit_x, y)
        elif hit == "bottom":
            x, y = poly.glue_bottom_to_top(exit_x, y)
        else:
            raise RuntimeError("separatrix left the polygon at the far vertex")
    return segs


class VerticalFlowSimulator:
    """Simulates the vertical flow on a rational-tau suspension polygon and
    its first-return map to the base separatrix segment."""

    def __init__(self, datum: SuspensionDatum):
        self.poly = _RationalPolygon(datum)
        self.segs = _section_segments(self.poly)

    def section_point(self, s: Fraction):
        s = Fraction(s)
        if not (0 <= s < self.poly.total):
            raise ValueError("section parameter out of range")
        for x0, x1, y0, off in self.segs:
            if off <= s < off + (x1 - x0):
                return x0 + (s - off), y0
        raise RuntimeError("section segments do not cover the parameter")

    def first_return(self, s: Fraction):
        """(s', time), exactly; for Theta-valid data s' = T(s) and
        time = h_{a(s)}."""
        x, y = self.section_point(s)
        poly, segs = self.poly, self.segs
        time = Fraction(0)
        guard = 0
        while True:
            guard += 1
            if guard > 64 * poly.d + 64:
                raise RuntimeError("vertical orbit did not return")
            ceiling = poly.top_y(x)
            best = None
            for x0, x1, ys, off in segs:
                if x0 <= x < x1 and y < ys <= ceiling:
                    if best is None or ys < best[0]:
                        best = (ys, off + (x - x0))
            if best is not None:
                time += best[0] - y
                return best[1], time
            time += ceiling - y
            x, y = poly.glue_top_to_bottom(x, ceiling)


def vertical_return(datum: SuspensionDatum, s: Fraction):
    """First return of the vertical flow to the base separatrix segment.

    Returns (s', time) exactly.  For Theta-valid data this must satisfy
    s' = T(s) (the IET) and time = h_{a(s)}.
    """
    return VerticalFlowSimulator(datum).first_return(s)
