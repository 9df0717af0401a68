"""Exact rational vectors over a formal real basis, and Q-linear algebra.

A ``QVector`` stores rational coefficients against a fixed ordered basis
(b_1, ..., b_m) of real numbers that are assumed rationally independent.
The default realization takes b_1 = 1 and b_j = sqrt(p_j) for the distinct
primes 2, 3, 5, ...; these are rationally independent, so symbolic
independence checks (exact integer linear algebra) and the numeric
embedding agree.

Everything here is pure and value-semantic; all arithmetic is exact
arbitrary-precision rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

Rational = Fraction

#: Working binary precision for numeric shadows (>= 128 bits required).
DEFAULT_PRECISION = 256

_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61]


class DimensionMismatchError(ValueError):
    """Raised when vectors of different dimensions are combined."""


class PrecisionError(ArithmeticError):
    """Raised when a numeric sign cannot be certified at working precision."""


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


@dataclass(frozen=True, eq=False)
class QVector:
    """Vector of rationals interpreted against a fixed formal basis.

    The zero vector represents the real number 0; a vector is nonzero as a
    real number iff some coefficient is nonzero (basis independence).
    """

    coeffs: tuple[Fraction, ...]

    def __init__(self, coeffs: Iterable) -> None:
        object.__setattr__(
            self, "coeffs", tuple(_to_fraction(c) for c in coeffs)
        )
        if not self.coeffs:
            raise ValueError("QVector needs at least one coefficient")

    @staticmethod
    def _raw(coeffs: tuple) -> "QVector":
        """Internal constructor for already-normalized Fraction tuples."""
        v = object.__new__(QVector)
        object.__setattr__(v, "coeffs", coeffs)
        return v

    def __eq__(self, other):
        if isinstance(other, QVector):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        try:
            return object.__getattribute__(self, "_hashcache")
        except AttributeError:
            h = hash(self.coeffs)
            object.__setattr__(self, "_hashcache", h)
            return h

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    @staticmethod
    def unit(dim: int, index: int) -> "QVector":
        return QVector(
            [Fraction(1) if i == index else Fraction(0) for i in range(dim)]
        )

    @staticmethod
    def constant(dim: int, value) -> "QVector":
        """The rational number ``value`` embedded on the first basis element."""
        v = [_to_fraction(value)] + [Fraction(0)] * (dim - 1)
        return QVector(v)

    @staticmethod
    def zero(dim: int) -> "QVector":
        return QVector([Fraction(0)] * dim)

    def _check(self, other: "QVector") -> None:
        if self.dim != other.dim:
            raise DimensionMismatchError(
                f"dimension mismatch: {self.dim} vs {other.dim}"
            )

    def __add__(self, other):
        if isinstance(other, QVector):
            self._check(other)
            return QVector._raw(
                tuple(a + b for a, b in zip(self.coeffs, other.coeffs))
            )
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, QVector):
            self._check(other)
            return QVector._raw(
                tuple(a - b for a, b in zip(self.coeffs, other.coeffs))
            )
        return NotImplemented

    def __neg__(self):
        return QVector._raw(tuple(-a for a in self.coeffs))

    def __mul__(self, scalar):
        if isinstance(scalar, (int, Fraction)):
            s = _to_fraction(scalar)
            return QVector._raw(tuple(a * s for a in self.coeffs))
        return NotImplemented

    __rmul__ = __mul__

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def is_zero(self) -> bool:
        return not self

    def is_rational(self) -> bool:
        """True iff the value lies on the first (rational) basis element."""
        return not any(self.coeffs[1:])

    def rational_part(self) -> Fraction:
        return self.coeffs[0]

    def evaluate(self, basis_values: Sequence) -> mpmath.mpf:
        return evaluate_numeric(self, basis_values)

    def to_json(self) -> dict:
        return {"dim": self.dim, "coeffs": [str(c) for c in self.coeffs]}

    @staticmethod
    def from_json(obj: dict) -> "QVector":
        v = QVector(obj["coeffs"])
        if v.dim != obj.get("dim", v.dim):
            raise ValueError("QVector JSON dim field disagrees with coeffs")
        return v

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.coeffs) + ")"


def default_basis_values(dim: int, precision: int = DEFAULT_PRECISION) -> list:
    """Numeric realization b_1 = 1, b_j = sqrt(p_j) for distinct primes p_j."""
    if dim - 1 > len(_PRIMES):
        raise ValueError(f"default basis limited to dimension {len(_PRIMES) + 1}")
    with mpmath.workprec(precision):
        return [mpmath.mpf(1)] + [mpmath.sqrt(p) for p in _PRIMES[: dim - 1]]


def evaluate_numeric(
    v: QVector, basis_values: Sequence, precision: int = DEFAULT_PRECISION
) -> mpmath.mpf:
    """Sum of ``c_i * basis_i`` at working precision (>= 128 bits)."""
    if len(basis_values) != v.dim:
        raise DimensionMismatchError(
            f"basis has {len(basis_values)} values for dimension {v.dim}"
        )
    with mpmath.workprec(precision):
        total = mpmath.mpf(0)
        for c, b in zip(v.coeffs, basis_values):
            if c:
                total += mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator) * b
        return total


def certified_sign(
    v: QVector, basis_values: Sequence, precision: int = DEFAULT_PRECISION
) -> int:
    """Sign of the real number represented by ``v``, certified.

    An exactly zero vector is 0.  A symbolically nonzero vector evaluates to
    a nonzero real; its sign is accepted only when the numeric magnitude
    clears the precision floor, otherwise a PrecisionError is raised rather
    than silently guessing.
    """
    if v.is_zero():
        return 0
    if v.is_rational():
        p = v.rational_part()
        return (p > 0) - (p < 0)
    with mpmath.workprec(precision):
        val = evaluate_numeric(v, basis_values, precision)
        scale = max(abs(c) for c in v.coeffs)
        floor = mpmath.mpf(scale.numerator) / mpmath.mpf(scale.denominator)
        floor *= mpmath.mpf(2) ** (-(precision // 2))
        if abs(val) <= floor:
            raise PrecisionError(
                f"cannot certify sign of {v} at {precision} bits"
            )
        return 1 if val > 0 else -1


def _integer_rows(vectors: Sequence[QVector]) -> list[list[int]]:
    rows = []
    for v in vectors:
        lcm = 1
        for c in v.coeffs:
            d = c.denominator
            g = _gcd(lcm, d)
            lcm = lcm // g * d
        rows.append([int(c * lcm) for c in v.coeffs])
    return rows


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def rank_over_Q(vectors: Sequence[QVector]) -> int:
    """Dimension of the Q-span, by fraction-free (Bareiss) elimination.

    Rows are scaled to integers (rank invariant), then eliminated with
    Bareiss pivoting so intermediate entries stay division-exact and small.
    """
    vectors = list(vectors)
    if not vectors:
        return 0
    m = vectors[0].dim
    for v in vectors:
        if v.dim != m:
            raise DimensionMismatchError("vectors must share dimension")
    a = _integer_rows(vectors)
    n_rows = len(a)
    rank = 0
    prev_pivot = 1
    row = 0
    for col in range(m):
        pivot_row = None
        for r in range(row, n_rows):
            if a[r][col] != 0:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        a[row], a[pivot_row] = a[pivot_row], a[row]
        pivot = a[row][col]
        for r in range(row + 1, n_rows):
            factor = a[r][col]
            for c in range(col, m):
                a[r][c] = (a[r][c] * pivot - factor * a[row][c]) // prev_pivot
        prev_pivot = pivot
        rank += 1
        row += 1
        if row == n_rows:
            break
    return rank


def rationally_independent(v1: QVector, v2: QVector) -> bool:
    """True iff v1, v2 span a 2-dimensional space over Q."""
    if v1.dim != v2.dim:
        raise DimensionMismatchError("vectors must share dimension")
    return rank_over_Q([v1, v2]) == 2
