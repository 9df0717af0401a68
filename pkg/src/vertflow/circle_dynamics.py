"""Exact circle-rotation calculus: continued fractions, step functions,
Birkhoff sums, Rokhlin towers, and atomic distributions.

The rotation number is realized as the exact rational p_N/q_N of the
depth-N continued fraction, so every breakpoint, tower endpoint and
Birkhoff identity below is checked in exact rational arithmetic; no
feature ever sits near precision noise.  Step-function values may be
rationals or QVectors (symbolic roof data).
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Optional, Sequence

from .exact_linalg import QVector

RIGIDITY_WINDOW = (Fraction(1, 52), Fraction(1, 25))

#: breakpoint-count guard for materialized step functions
BREAKPOINT_CAP = 2_000_000


class BreakpointOverflow(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# continued fractions


@dataclass(frozen=True)
class ContinuedFraction:
    """alpha = l * [0; a_1, ..., a_N], realized exactly as l * p_N / q_N."""

    quotients: tuple[int, ...]
    l: Fraction = Fraction(1)

    def __post_init__(self):
        if not self.quotients:
            raise ValueError("need at least one partial quotient")
        if any(a <= 0 for a in self.quotients):
            raise ValueError("partial quotients must be positive")
        if self.l <= 0:
            raise ValueError("circle length must be positive")

    @staticmethod
    def from_rational(alpha_over_l: Fraction, l: Fraction = Fraction(1)):
        """Continued fraction [0; a_1, ...] of a rational in (0, 1)."""
        x = Fraction(alpha_over_l)
        if not (0 < x < 1):
            raise ValueError("expect a ratio strictly between 0 and 1")
        quotients = []
        num, den = x.numerator, x.denominator
        # Euclid on den/num
        a, b = den, num
        while b:
            quotients.append(a // b)
            a, b = b, a % b
        return ContinuedFraction(tuple(quotients), Fraction(l))

    @property
    def depth(self) -> int:
        return len(self.quotients)

    def convergents(self) -> list[tuple[int, int]]:
        """(p_n, q_n) for n = 1..N with p_0/q_0 = 0/1."""
        p_prev, q_prev = 1, 0  # (p_{-1}, q_{-1})
        p, q = 0, 1  # (p_0, q_0)
        out = []
        for a in self.quotients:
            p, p_prev = a * p + p_prev, p
            q, q_prev = a * q + q_prev, q
            out.append((p, q))
        return out

    def alpha_unit(self) -> Fraction:
        p, q = self.convergents()[-1]
        return Fraction(p, q)

    def alpha(self) -> Fraction:
        return self.l * self.alpha_unit()

    def denominator(self, n: int) -> int:
        if n == 0:
            return 1
        return self.convergents()[n - 1][1]

    def norm_unit(self, q: int) -> Fraction:
        """||q * alpha_unit|| on the unit circle, exact."""
        if q < 1:
            raise ValueError("q must be >= 1")
        frac = (q * self.alpha_unit()) % 1
        return min(frac, 1 - frac)

    def norm(self, q: int) -> Fraction:
        """||q alpha|| on the circle of length l."""
        return self.l * self.norm_unit(q)


def convergents(quotients: Sequence[int]) -> list[tuple[int, int]]:
    return ContinuedFraction(tuple(int(a) for a in quotients)).convergents()


def distance_to_lattice(q: int, cf: ContinuedFraction) -> Fraction:
    """||q alpha|| scaled to circle length l, exact."""
    return cf.norm(q)


def rigidity_indices(
    cf: ContinuedFraction,
    window: tuple[Fraction, Fraction] = RIGIDITY_WINDOW,
    parity: str = "odd",
) -> list[int]:
    """All n <= N-1 of the given parity with q_n ||q_n alpha|| in the window
    (normalized to the unit circle, hence scale free)."""
    lo, hi = Fraction(window[0]), Fraction(window[1])
    out = []
    conv = cf.convergents()
    for n in range(1, cf.depth):  # n = N excluded: ||q_N alpha|| = 0
        if parity == "odd" and n % 2 == 0:
            continue
        if parity == "even" and n % 2 == 1:
            continue
        q = conv[n - 1][1]
        if lo <= q * cf.norm_unit(q) <= hi:
            out.append(n)
    return out


# ---------------------------------------------------------------------------
# modular orbit hits (exact, O(polylog) per query)


def _min_multiplier(a: int, m: int, lo: int, hi: int) -> Optional[int]:
    """Minimal k >= 0 with (a*k) % m in [lo, hi]; None if impossible.

    Requires 0 <= lo <= hi < m.  Euclid-style recursion on the modulus.
    """
    a %= m
    if lo == 0:
        return 0
    if a == 0:
        return None
    g = gcd(a, m)
    if g > 1:
        lo2 = (lo + g - 1) // g
        hi2 = hi // g
        if lo2 > hi2:
            return None
        return _min_multiplier(a // g, m // g, lo2, hi2)
    k = (lo + a - 1) // a
    if k * a <= hi:
        return k
    # need j >= 1 wraps: a | some value in [j*m + lo, j*m + hi]
    w = hi - lo
    if w >= a - 1:
        j = 1
    else:
        b = (-m) % a
        c = (-lo) % a
        # minimal j >= 1 with (b*j + c) mod a <= w
        j = _min_shifted(b, a, c, w)
        if j is None:
            return None
    return (j * m + lo + a - 1) // a


def _min_shifted(b: int, a: int, c: int, w: int) -> Optional[int]:
    """Minimal j >= 1 with (b*j + c) mod a in [0, w]."""
    # equivalently b*j mod a in [(-c) % a, (w - c) % a] (possibly wrapping)
    lo = (-c) % a
    hi = (w - c) % a
    best = None
    if lo <= hi:
        pieces = [(lo, hi)]
    else:
        pieces = [(lo, a - 1), (0, hi)]
    for plo, phi in pieces:
        j = _min_multiplier_ge1(b, a, plo, phi)
        if j is not None and (best is None or j < best):
            best = j
    return best


def _min_multiplier_ge1(a: int, m: int, lo: int, hi: int) -> Optional[int]:
    """Minimal k >= 1 with (a*k) % m in [lo, hi] (0 <= lo <= hi < m)."""
    a %= m
    if a == 0:
        return 1 if lo == 0 else None
    r1 = a % m
    if lo <= r1 <= hi:
        return 1
    # k = 1 + j where (a*j) % m in [lo - r1, hi - r1] (mod m), j >= 1
    lo2 = (lo - r1) % m
    hi2 = (hi - r1) % m
    best = None
    if lo2 <= hi2:
        pieces = [(lo2, hi2)]
    else:
        pieces = [(lo2, m - 1), (0, hi2)]
    for plo, phi in pieces:
        j = _min_multiplier(a, m, plo, phi)
        if j == 0:
            continue
        if j is not None and (best is None or 1 + j < best):
            best = 1 + j
    return best


def orbit_hits(
    a: int, m: int, lo: int, hi: int, k_max: int, cap: int = 10_000
) -> list[int]:
    """The first min(cap, all) k in [0, k_max), increasing, with
    (a*k) % m in the integer interval [lo, hi].

    lo/hi are reduced mod m; a wrapping interval is split.  Enumeration is
    by repeated minimal-shift queries, O(polylog) each.  Callers that need
    every hit must check len(result) < cap.
    """
    lo %= m
    hi %= m
    if lo > hi:
        out = sorted(
            set(orbit_hits(a, m, lo, m - 1, k_max, cap))
            | set(orbit_hits(a, m, 0, hi, k_max, cap))
        )
        return out[:cap]
    hits: list[int] = []
    k = _min_multiplier(a % m, m, lo, hi)
    while k is not None and k < k_max and len(hits) < cap:
        hits.append(k)
        r = (a * k) % m
        lo2 = (lo - r) % m
        hi2 = (hi - r) % m
        best = None
        if lo2 <= hi2:
            pieces = [(lo2, hi2)]
        else:
            pieces = [(lo2, m - 1), (0, hi2)]
        for plo, phi in pieces:
            j = _min_multiplier_ge1(a % m, m, plo, phi)
            if j is not None and (best is None or j < best):
                best = j
        if best is None:
            break
        k = k + best
    return hits


def _scale_to_integers(*values: Fraction) -> tuple[list[int], int]:
    den = 1
    for v in values:
        den = den * v.denominator // gcd(den, v.denominator)
    return [int(v * den) for v in values], den


def rotation_hits_interval(
    alpha: Fraction,
    l: Fraction,
    lo: Fraction,
    hi: Fraction,
    k_max: int,
    step_sign: int = 1,
    cap: int = 10_000,
) -> list[int]:
    """The first min(cap, all) k in [0, k_max) with
    (step_sign * k * alpha) mod l in [lo, hi), increasing.

    Exact: everything is scaled to a common integer grid.
    """
    vals, _den = _scale_to_integers(alpha % l, l, lo % l, hi % l)
    a_i, l_i, lo_i, hi_i = vals
    if step_sign < 0:
        a_i = (l_i - a_i) % l_i
    # [lo, hi) on integers = [lo_i, hi_i - 1]
    if hi_i == lo_i:
        return []
    return orbit_hits(a_i, l_i, lo_i % l_i, (hi_i - 1) % l_i, k_max, cap=cap)


# ---------------------------------------------------------------------------
# step functions


def _vzero(template):
    return template * 0


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant function on R/lZ.

    Piece i spans [breaks[i], breaks[i+1]) with value values[i]; the last
    piece wraps to [breaks[-1], l) + [0, breaks[0]).  Canonical form merges
    adjacent equal values (including across the seam); a constant keeps a
    single breakpoint at 0.
    """

    l: Fraction
    breaks: tuple[Fraction, ...]
    values: tuple

    @staticmethod
    def make(l, breaks, values) -> "StepFunction":
        l = Fraction(l)
        pairs = sorted(
            (Fraction(b) % l, v) for b, v in zip(breaks, values)
        )
        bs = [b for b, _ in pairs]
        vs = [v for _, v in pairs]
        for i in range(1, len(bs)):
            if bs[i] == bs[i - 1]:
                raise ValueError("duplicate breakpoints")
        return StepFunction._from_sorted(l, bs, vs)

    @staticmethod
    def _from_sorted(l, bs, vs) -> "StepFunction":
        """Canonicalize strictly-increasing breakpoints in [0, l)."""
        keep_b, keep_v = [], []
        n = len(bs)
        for i in range(n):
            prev = (i - 1) % n
            if n > 1 and vs[i] == vs[prev]:
                continue
            keep_b.append(bs[i])
            keep_v.append(vs[i])
        if not keep_b:  # fully constant
            keep_b, keep_v = [bs[0]], [vs[0]]
        return StepFunction(l, tuple(keep_b), tuple(keep_v))

    @staticmethod
    def constant(l, value) -> "StepFunction":
        return StepFunction(Fraction(l), (Fraction(0),), (value,))

    def is_constant(self) -> bool:
        return len(self.breaks) == 1

    def zero_value(self):
        return _vzero(self.values[0])

    def value_at(self, x: Fraction):
        x = Fraction(x) % self.l
        i = bisect_right(self.breaks, x) - 1
        return self.values[i]  # i = -1 wraps to the last piece

    def piece_lengths(self) -> list[Fraction]:
        n = len(self.breaks)
        out = []
        for i in range(n):
            nxt = self.breaks[(i + 1) % n]
            cur = self.breaks[i]
            out.append((nxt - cur) % self.l if n > 1 else self.l)
        return out

    def jumps(self) -> list[tuple[Fraction, object]]:
        """(breakpoint, value jump f(x) - f(x-)) with nonzero jumps only."""
        n = len(self.breaks)
        if n == 1:
            return []
        out = []
        for i in range(n):
            d = self.values[i] - self.values[(i - 1) % n]
            out.append((self.breaks[i], d))
        return out

    def integral(self):
        total = _vzero(self.values[0])
        for v, ln in zip(self.values, self.piece_lengths()):
            total = total + v * ln
        return total

    def __neg__(self) -> "StepFunction":
        return StepFunction(self.l, self.breaks, tuple(-v for v in self.values))

    def shift(self, s: Fraction) -> "StepFunction":
        """x -> f(x + s): breakpoints move to b - s (mod l)."""
        s = Fraction(s) % self.l
        return StepFunction.make(
            self.l, [(b - s) % self.l for b in self.breaks], self.values
        )

    def _binary(self, other: "StepFunction", op) -> "StepFunction":
        if self.l != other.l:
            raise ValueError("circle length mismatch")
        scale = self.l.denominator
        for b in self.breaks + other.breaks:
            scale = scale * b.denominator // gcd(scale, b.denominator)
        a_pos = [int(b * scale) for b in self.breaks]
        b_pos = [int(b * scale) for b in other.breaks]
        merged = sorted(set(a_pos) | set(b_pos))
        ia = ib = -1  # -1 = wrapped final piece, for positions before the first break
        bs, vals = [], []
        for pos in merged:
            while ia + 1 < len(a_pos) and a_pos[ia + 1] <= pos:
                ia += 1
            while ib + 1 < len(b_pos) and b_pos[ib + 1] <= pos:
                ib += 1
            va = self.values[ia]
            vb = other.values[ib]
            bs.append(Fraction(pos, scale))
            vals.append(op(va, vb))
        return StepFunction._from_sorted(self.l, bs, vals)

    def __add__(self, other):
        if isinstance(other, StepFunction):
            return self._binary(other, lambda a, b: a + b)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, StepFunction):
            return self._binary(other, lambda a, b: a - b)
        return NotImplemented

    def scale(self, c) -> "StepFunction":
        return StepFunction(self.l, self.breaks, tuple(v * c for v in self.values))

    def to_json(self) -> dict:
        def enc(v):
            return v.to_json() if isinstance(v, QVector) else str(v)

        return {
            "l": str(self.l),
            "breaks": [str(b) for b in self.breaks],
            "values": [enc(v) for v in self.values],
        }


def _integer_grid(f: StepFunction, alpha: Fraction):
    """(scale, L, A, int breakpoints): everything is placed on a common
    integer lattice so hot sweeps run on plain ints."""
    scale = f.l.denominator
    scale = scale * alpha.denominator // gcd(scale, alpha.denominator)
    for b in f.breaks:
        scale = scale * b.denominator // gcd(scale, b.denominator)
    return (
        scale,
        int(f.l * scale),
        int(alpha * scale),
        [int(b * scale) for b in f.breaks],
    )


def birkhoff_combination(
    f: StepFunction,
    alpha: Fraction,
    terms: Sequence[tuple[int, int]],
    cap: int = BREAKPOINT_CAP,
) -> StepFunction:
    """sum of c * f^(n) over the (n, c) pairs, built in a single sweep.

    Breakpoints of f^(n) are b - i*alpha (i in [0, n)) for n > 0 carrying
    the jump of f at b, and b + j*alpha (j in [1, |n|]) for n < 0 carrying
    the negated jump.
    """
    alpha = Fraction(alpha) % f.l
    jumps = f.jumps()
    n_pos = sum(abs(n) for n, _ in terms)
    if not jumps or not terms:
        val = f.zero_value()
        for n, c in terms:
            if f.is_constant():
                val = val + f.values[0] * (n * c)
        return StepFunction.constant(f.l, val)
    if n_pos * len(jumps) > cap:
        raise BreakpointOverflow(
            f"combination would need {n_pos * len(jumps)} breakpoints (cap {cap})"
        )
    scale, big_l, big_a, int_breaks = _integer_grid(f, alpha)
    acc: dict = {}

    def accumulate(pos, delta):
        if pos in acc:
            acc[pos] = acc[pos] + delta
        else:
            acc[pos] = delta

    int_jumps = [(int(b * scale), d) for b, d in jumps]
    for n, c in terms:
        if n > 0:
            scaled = [(b, d * c) for b, d in int_jumps]
            for i in range(n):
                s = (i * big_a) % big_l
                for b, cd in scaled:
                    accumulate((b - s) % big_l, cd)
        else:
            scaled = [(b, d * (-c)) for b, d in int_jumps]
            for j in range(1, -n + 1):
                s = (j * big_a) % big_l
                for b, cd in scaled:
                    accumulate((b + s) % big_l, cd)
    positions = sorted(acc)
    x0 = positions[0]

    def f_at(ix: int):
        i = bisect_right(int_breaks, ix) - 1
        return f.values[i]

    val = f.zero_value()
    for n, c in terms:
        if n > 0:
            for i in range(n):
                val = val + f_at((x0 + i * big_a) % big_l) * c
        else:
            for j in range(1, -n + 1):
                val = val + f_at((x0 - j * big_a) % big_l) * (-c)
    bs, vs = [Fraction(x0, scale)], [val]
    for pos in positions[1:]:
        val = val + acc[pos]
        bs.append(Fraction(pos, scale))
        vs.append(val)
    return StepFunction._from_sorted(f.l, bs, vs)


def birkhoff_sum(f: StepFunction, alpha: Fraction, n: int, cap: int = BREAKPOINT_CAP) -> StepFunction:
    """Exact Birkhoff sum f^(n) over the rotation by alpha.

    f^(n) = sum_{i=0}^{n-1} f o T^i for n >= 1, 0 for n = 0, and
    -sum_{i=n}^{-1} f o T^i for n <= -1.
    """
    if n == 0:
        return StepFunction.constant(f.l, f.zero_value())
    return birkhoff_combination(f, alpha, [(n, 1)], cap)


def tower_difference(
    f: StepFunction, cf: ContinuedFraction, n: int, cap: int = BREAKPOINT_CAP
) -> StepFunction:
    """sum_j -d_j * indicator(union_{i<q_n} T^{-i}[beta_j, beta_j + ||q_n alpha||))
    built directly from the Rokhlin towers; n must be an odd CF index.

    Equals f^(2 q_n) - 2 f^(q_n) exactly.
    """
    if f.l != cf.l:
        raise ValueError("step function and rotation live on different circles")
    if n % 2 != 1 or n >= cf.depth:
        raise ValueError("tower index must be an odd continued-fraction index < depth")
    q = cf.denominator(n)
    delta = cf.norm(q)
    alpha = cf.alpha()
    jumps = f.jumps()
    if not jumps:
        return StepFunction.constant(f.l, f.zero_value())
    if 2 * q * len(jumps) > cap:
        raise BreakpointOverflow(
            f"tower difference would need {2 * q * len(jumps)} breakpoints"
        )
    scale, big_l, big_a, _ = _integer_grid(f, alpha)
    dd = delta * scale
    scale *= dd.denominator
    big_l *= dd.denominator
    big_a *= dd.denominator
    big_d = int(delta * scale)
    acc: dict = {}

    def add(pos, d) -> None:
        if pos in acc:
            acc[pos] = acc[pos] + d
        else:
            acc[pos] = d

    for beta, d in jumps:
        bi = int(beta * scale)
        for i in range(q):
            left = (bi - i * big_a) % big_l
            add(left, -d)
            add((left + big_d) % big_l, d)
    positions = sorted(acc)
    x0 = positions[0]
    val = f.zero_value()
    for beta, d in jumps:
        bi = int(beta * scale)
        for i in range(q):
            if (x0 + i * big_a - bi) % big_l < big_d:
                val = val + (-d)
    bs = [Fraction(p, scale) for p in positions]
    vs = [val]
    for pos in positions[1:]:
        val = val + acc[pos]
        vs.append(val)
    return StepFunction._from_sorted(f.l, bs, vs)


# ---------------------------------------------------------------------------
# atomic measures


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite list of (location, mass); masses positive, summing to the
    total space measure."""

    atoms: tuple
    total: Fraction

    @staticmethod
    def from_dict(d: dict, total: Fraction) -> "AtomicMeasure":
        items = [(loc, m) for loc, m in d.items() if m != 0]

        def key(item):
            loc = item[0]
            if isinstance(loc, QVector):
                return tuple(loc.coeffs)
            if isinstance(loc, tuple):
                return tuple(
                    tuple(c.coeffs) if isinstance(c, QVector) else (c,)
                    for c in loc
                )
            return (loc,)

        items.sort(key=key)
        return AtomicMeasure(tuple(items), Fraction(total))

    def mass_of(self, location) -> Fraction:
        for loc, m in self.atoms:
            if loc == location:
                return m
        return Fraction(0)

    def locations(self) -> list:
        return [loc for loc, _ in self.atoms]

    def normalized(self) -> list:
        return [(loc, Fraction(m, 1) / self.total) for loc, m in self.atoms]

    def negated(self) -> "AtomicMeasure":
        return AtomicMeasure.from_dict(
            {-loc if not isinstance(loc, tuple) else tuple(-c for c in loc): m
             for loc, m in self.atoms},
            self.total,
        )

    def mass_total(self) -> Fraction:
        return sum((m for _, m in self.atoms), Fraction(0))

    def as_csv_rows(self, basis_values=None) -> list[str]:
        rows = []
        for loc, m in self.atoms:
            locs = loc if isinstance(loc, tuple) else (loc,)
            cells = []
            for c in locs:
                if isinstance(c, QVector):
                    if basis_values is not None:
                        cells.append(repr(float(c.evaluate(basis_values))))
                    else:
                        cells.append('"%s"' % c)
                else:
                    cells.append(str(c))
            cells.append(str(m))
            rows.append(",".join(cells))
        return rows


def distribution(g: StepFunction) -> AtomicMeasure:
    """Pushforward of length measure under g: mass of v = Leb{g = v}."""
    masses: dict = {}
    for v, ln in zip(g.values, g.piece_lengths()):
        masses[v] = masses.get(v, Fraction(0)) + ln
    return AtomicMeasure.from_dict(masses, g.l)


def joint_distribution(g1: StepFunction, g2: StepFunction) -> AtomicMeasure:
    """Pushforward of length measure under x -> (g1(x), g2(x))."""
    if g1.l != g2.l:
        raise ValueError("circle length mismatch")
    bs = sorted(set(g1.breaks) | set(g2.breaks))
    masses: dict = {}
    n = len(bs)
    for i in range(n):
        cur = bs[i]
        nxt = bs[(i + 1) % n]
        ln = (nxt - cur) % g1.l if n > 1 else g1.l
        key = (g1.value_at(cur), g2.value_at(cur))
        masses[key] = masses.get(key, Fraction(0)) + ln
    return AtomicMeasure.from_dict(masses, g1.l)


# ---------------------------------------------------------------------------
# Rokhlin towers V_n, W_n


@dataclass(frozen=True)
class Tower:
    """Union of T^(sign * i)[lo, hi) for i = 0..height-1 over the rotation
    by alpha on R/lZ; represented lazily."""

    l: Fraction
    alpha: Fraction
    lo: Fraction
    hi: Fraction
    height: int
    sign: int = 1

    def width(self) -> Fraction:
        return self.hi - self.lo

    def measure_if_disjoint(self) -> Fraction:
        return self.width() * self.height

    def contains(self, x: Fraction) -> bool:
        """Exact membership via modular orbit hits."""
        x = Fraction(x) % self.l
        # x in T^(s i)[lo, hi) iff (s i alpha) mod l in (x - hi, x - lo]
        lo_t = (x - self.hi) % self.l
        hi_t = (x - self.lo) % self.l
        vals, _ = _scale_to_integers(
            self.alpha % self.l, self.l, lo_t, hi_t
        )
        a_i, l_i, lo_i, hi_i = vals
        if self.sign < 0:
            a_i = (l_i - a_i) % l_i
        # half-open (lo_t, hi_t] -> integer interval [lo_i + 1, hi_i]
        hits = orbit_hits(a_i, l_i, (lo_i + 1) % l_i, hi_i % l_i, self.height, cap=4)
        return bool(hits)

    def rung_of(self, x: Fraction) -> Optional[int]:
        x = Fraction(x) % self.l
        lo_t = (x - self.hi) % self.l
        hi_t = (x - self.lo) % self.l
        vals, _ = _scale_to_integers(self.alpha % self.l, self.l, lo_t, hi_t)
        a_i, l_i, lo_i, hi_i = vals
        if self.sign < 0:
            a_i = (l_i - a_i) % l_i
        hits = orbit_hits(a_i, l_i, (lo_i + 1) % l_i, hi_i % l_i, self.height, cap=4)
        return hits[0] if hits else None

    def intervals(self, cap: int = 200_000) -> list[tuple[Fraction, Fraction]]:
        if self.height > cap:
            raise BreakpointOverflow("tower too tall to materialize")
        out = []
        for i in range(self.height):
            left = (self.lo + self.sign * i * self.alpha) % self.l
            out.append((left, left + self.width()))
        return out

    def rungs_selfdisjoint(self) -> bool:
        """Exact check that the height rungs are pairwise disjoint."""
        # T^(s i)[lo, hi) pairwise disjoint iff no 1 <= k < height with
        # ||k alpha|| < width
        w = self.width()
        vals, _ = _scale_to_integers(self.alpha % self.l, self.l, w, w)
        a_i, l_i, w_i, _ = vals
        if w_i >= 2:
            hits = orbit_hits(a_i, l_i, 1, w_i - 1, self.height, cap=4)
            if any(k >= 1 for k in hits):
                return False
            hits = orbit_hits(a_i, l_i, l_i - w_i + 1, l_i - 1, self.height, cap=4)
            if any(k >= 1 for k in hits):
                return False
        return True


def towers_VW(
    cf: ContinuedFraction, n: int
) -> tuple[Tower, Tower]:
    """The pair of disjoint tower families over bases
    [3 d, D/3) and [2D/3, D - 3 d), d = ||q_n a||, D = ||q_{n-1} a||,
    each of height q_n; requires 12 < D/d < 53."""
    if n < 1 or n >= cf.depth:
        raise ValueError("tower index out of range")
    q = cf.denominator(n)
    q_prev = cf.denominator(n - 1)
    d = cf.norm(q)
    dd = cf.norm(q_prev)
    ratio = dd / d
    if not (12 < ratio < 53):
        raise ValueError(
            f"tower ratio ||q_(n-1) a|| / ||q_n a|| = {float(ratio):.3f} "
            "outside (12, 53)"
        )
    alpha = cf.alpha()
    v = Tower(cf.l, alpha, 3 * d, dd / 3, q, sign=1)
    w = Tower(cf.l, alpha, Fraction(2, 3) * dd, dd - 3 * d, q, sign=1)
    return v, w
