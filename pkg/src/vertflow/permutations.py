"""Labeled permutations of interval exchange transformations.

A permutation is a pair (pi0, pi1) of bijections from an alphabet of d
symbols to positions {1..d}: pi0 gives the position before the exchange,
pi1 after.  Symbols are opaque identifiers; Rauzy moves permute positions,
never symbols.

Covers irreducibility/symmetry/degeneracy classification, the translation
matrix, exact IET evaluation, the two Rauzy moves, (extended) Rauzy class
enumeration by BFS, and the acceptable-symbol search used by the
disjointness pipeline.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

DEGENERACY_TAGS = ("deg1", "deg2", "deg3", "deg4")


class ReducibleError(ValueError):
    """Raised when an operation requires an irreducible permutation."""


class ClassSizeError(RuntimeError):
    """Raised when a Rauzy class enumeration exceeds its size cap."""


@dataclass(frozen=True)
class LabeledPermutation:
    """Pair of position bijections over an ordered alphabet."""

    alphabet: tuple[str, ...]
    pi0: tuple[int, ...]  # pi0[i] = position of alphabet[i] before exchange
    pi1: tuple[int, ...]  # pi1[i] = position of alphabet[i] after exchange

    def __post_init__(self):
        d = len(self.alphabet)
        if d < 2:
            raise ValueError("need at least 2 symbols")
        if len(set(self.alphabet)) != d:
            raise ValueError("alphabet symbols must be distinct")
        for pi in (self.pi0, self.pi1):
            if sorted(pi) != list(range(1, d + 1)):
                raise ValueError("pi0/pi1 must be bijections onto 1..d")

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_maps(
        alphabet: Sequence[str], pi0: Mapping[str, int], pi1: Mapping[str, int]
    ) -> "LabeledPermutation":
        alphabet = tuple(str(a) for a in alphabet)
        return LabeledPermutation(
            alphabet,
            tuple(int(pi0[a]) for a in alphabet),
            tuple(int(pi1[a]) for a in alphabet),
        )

    @staticmethod
    def from_rows(top: Sequence[str], bottom: Sequence[str]) -> "LabeledPermutation":
        """From the two symbol rows, top row fixing the alphabet order."""
        alphabet = tuple(str(a) for a in top)
        if sorted(bottom) != sorted(alphabet):
            raise ValueError("rows must contain the same symbols")
        pos1 = {str(a): i + 1 for i, a in enumerate(bottom)}
        return LabeledPermutation(
            alphabet,
            tuple(range(1, len(alphabet) + 1)),
            tuple(pos1[a] for a in alphabet),
        )

    @staticmethod
    def from_sigma(sigma: Sequence[int]) -> "LabeledPermutation":
        """Canonical labeling of a one-row permutation: pi0 = identity,
        symbol at top position j goes to bottom position sigma[j-1]."""
        d = len(sigma)
        alphabet = tuple(str(j) for j in range(1, d + 1))
        return LabeledPermutation(
            alphabet, tuple(range(1, d + 1)), tuple(int(s) for s in sigma)
        )

    @staticmethod
    def parse(text: str) -> "LabeledPermutation":
        """Parse 'top: A B C / bottom: C B A', 'A B C / C B A' or '321'."""
        text = text.strip()
        if "/" in text:
            top_s, bottom_s = text.split("/", 1)
            top_s = top_s.split(":", 1)[-1].strip()
            bottom_s = bottom_s.split(":", 1)[-1].strip()
            top = top_s.split() if " " in top_s else list(top_s)
            bottom = bottom_s.split() if " " in bottom_s else list(bottom_s)
            return LabeledPermutation.from_rows(top, bottom)
        if text.isdigit():
            return LabeledPermutation.from_sigma([int(c) for c in text])
        raise ValueError(f"cannot parse permutation from {text!r}")

    # -- basic views ---------------------------------------------------

    @property
    def d(self) -> int:
        return len(self.alphabet)

    def pos0(self, symbol: str) -> int:
        return self.pi0[self.alphabet.index(symbol)]

    def pos1(self, symbol: str) -> int:
        return self.pi1[self.alphabet.index(symbol)]

    def symbol_at0(self, position: int) -> str:
        return self.alphabet[self.pi0.index(position)]

    def symbol_at1(self, position: int) -> str:
        return self.alphabet[self.pi1.index(position)]

    def sigma(self) -> tuple[int, ...]:
        """The reduced one-row permutation pi1 o pi0^{-1} on positions."""
        out = [0] * self.d
        for i in range(self.d):
            out[self.pi0[i] - 1] = self.pi1[i]
        return tuple(out)

    def top_row(self) -> tuple[str, ...]:
        return tuple(self.symbol_at0(i) for i in range(1, self.d + 1))

    def bottom_row(self) -> tuple[str, ...]:
        return tuple(self.symbol_at1(i) for i in range(1, self.d + 1))

    def to_text(self) -> str:
        return "top: %s / bottom: %s" % (
            " ".join(self.top_row()),
            " ".join(self.bottom_row()),
        )

    def to_json(self) -> dict:
        return {
            "alphabet": list(self.alphabet),
            "pi0": {a: self.pi0[i] for i, a in enumerate(self.alphabet)},
            "pi1": {a: self.pi1[i] for i, a in enumerate(self.alphabet)},
        }

    @staticmethod
    def from_json(obj: dict) -> "LabeledPermutation":
        return LabeledPermutation.from_maps(obj["alphabet"], obj["pi0"], obj["pi1"])

    def relabeled_canonical(self) -> "LabeledPermutation":
        """Same reduced permutation with pi0 = identity on alphabet 1..d."""
        return LabeledPermutation.from_sigma(self.sigma())

    def __str__(self) -> str:
        return self.to_text()


# ---------------------------------------------------------------------------
# classification


def is_irreducible(p: LabeledPermutation) -> bool:
    """No 1 <= k < d with sigma({1..k}) = {1..k}."""
    sigma = p.sigma()
    seen_max = 0
    for k in range(1, p.d):
        seen_max = max(seen_max, sigma[k - 1])
        if seen_max == k:
            return False
    return True


def is_symmetric(p: LabeledPermutation) -> bool:
    """pi1(a) = d + 1 - pi0(a) for every symbol."""
    return all(p.pi1[i] == p.d + 1 - p.pi0[i] for i in range(p.d))


def is_degenerate(p: LabeledPermutation) -> tuple[bool, Optional[str]]:
    """First matching Veech degeneracy condition, in the fixed order deg1..deg4.

    Requires irreducibility; reducible input is an error.
    """
    if not is_irreducible(p):
        raise ReducibleError(f"degeneracy test needs irreducible input: {p}")
    d = p.d
    sigma = p.sigma()  # 1-based values, index j-1 holds sigma(j)

    def s(j: int) -> int:
        return sigma[j - 1]

    sigma_inv = [0] * (d + 1)
    for j in range(1, d + 1):
        sigma_inv[s(j)] = j

    # deg1: sigma(j+1) = sigma(j) + 1 for some 1 <= j < d
    for j in range(1, d):
        if s(j + 1) == s(j) + 1:
            return True, "deg1"
    # deg2: sigma(sigma_inv(d) + 1) = sigma(d) + 1
    if sigma_inv[d] + 1 <= d and s(sigma_inv[d] + 1) == s(d) + 1:
        return True, "deg2"
    # deg3: sigma_inv(1) - 1 = sigma_inv(sigma(1) - 1)
    if s(1) - 1 >= 1 and sigma_inv[1] - 1 == sigma_inv[s(1) - 1]:
        return True, "deg3"
    # deg4: sigma_inv(d) = sigma_inv(1) - 1 and sigma(d) = sigma(1) - 1
    if sigma_inv[d] == sigma_inv[1] - 1 and s(d) == s(1) - 1:
        return True, "deg4"
    return False, None


# ---------------------------------------------------------------------------
# translation matrix and exact IET evaluation


def translation_matrix(p: LabeledPermutation) -> tuple[tuple[int, ...], ...]:
    """Antisymmetric matrix: +1 iff pi0(a) < pi0(b) and pi1(a) > pi1(b)."""
    d = p.d
    out = []
    for i in range(d):
        row = []
        for j in range(d):
            if p.pi0[i] < p.pi0[j] and p.pi1[i] > p.pi1[j]:
                row.append(1)
            elif p.pi0[i] > p.pi0[j] and p.pi1[i] < p.pi1[j]:
                row.append(-1)
            else:
                row.append(0)
        out.append(tuple(row))
    return tuple(out)


def omega_row(p: LabeledPermutation, symbol: str):
    i = p.alphabet.index(symbol)
    return translation_matrix(p)[i]


def iet_apply(
    p: LabeledPermutation, lengths: Mapping[str, Fraction], x: Fraction
) -> Fraction:
    """Exact image of x under the IET: x + sum_b Omega[a][b] lambda_b."""
    x = Fraction(x)
    lam = [Fraction(lengths[a]) for a in p.alphabet]
    if any(v < 0 for v in lam):
        raise ValueError("lengths must be nonnegative")
    total = sum(lam, Fraction(0))
    if not (0 <= x < total):
        raise ValueError(f"point {x} outside [0, {total})")
    # locate the (nonempty) interval containing x, in top order
    start = Fraction(0)
    symbol_index = None
    for pos in range(1, p.d + 1):
        i = p.pi0.index(pos)
        if lam[i] > 0 and start <= x < start + lam[i]:
            symbol_index = i
            break
        start += lam[i]
    if symbol_index is None:
        raise ValueError(f"no interval contains {x}")
    om = translation_matrix(p)[symbol_index]
    return x + sum(om[j] * lam[j] for j in range(p.d))


# ---------------------------------------------------------------------------
# Rauzy moves and classes


def rauzy_move(p: LabeledPermutation, kind: str) -> LabeledPermutation:
    """One Rauzy move on positions.

    'top' is the case lambda_{pi0^{-1}(d)} > lambda_{pi1^{-1}(d)} (pi1
    changes), 'bottom' the opposite case (pi0 changes).  Irreducibility is
    preserved.
    """
    d = p.d
    if kind == "top":
        cut = p.pi1[p.pi0.index(d)]  # pi1(pi0^{-1}(d))
        new_pi1 = []
        for v in p.pi1:
            if v <= cut:
                new_pi1.append(v)
            elif v == d:
                new_pi1.append(cut + 1)
            else:
                new_pi1.append(v + 1)
        return LabeledPermutation(p.alphabet, p.pi0, tuple(new_pi1))
    if kind == "bottom":
        cut = p.pi0[p.pi1.index(d)]  # pi0(pi1^{-1}(d))
        new_pi0 = []
        for v in p.pi0:
            if v <= cut:
                new_pi0.append(v)
            elif v == d:
                new_pi0.append(cut + 1)
            else:
                new_pi0.append(v + 1)
        return LabeledPermutation(p.alphabet, tuple(new_pi0), p.pi1)
    raise ValueError("kind must be 'top' or 'bottom'")


def l_action(p: LabeledPermutation) -> LabeledPermutation:
    """Position reversal l(i) = d + 1 - i applied to both rows."""
    d = p.d
    return LabeledPermutation(
        p.alphabet,
        tuple(d + 1 - v for v in p.pi0),
        tuple(d + 1 - v for v in p.pi1),
    )


def rauzy_class(
    seed: LabeledPermutation,
    extended: bool = False,
    size_limit: int = 10**6,
) -> set[LabeledPermutation]:
    """BFS closure of the seed under both Rauzy moves (and l, if extended)."""
    if not is_irreducible(seed):
        raise ReducibleError("Rauzy classes are defined for irreducible seeds")
    seen = {seed}
    queue = deque([seed])
    while queue:
        cur = queue.popleft()
        nbrs = [rauzy_move(cur, "top"), rauzy_move(cur, "bottom")]
        if extended:
            nbrs.append(l_action(cur))
        for nxt in nbrs:
            if nxt not in seen:
                if len(seen) >= size_limit:
                    raise ClassSizeError(
                        f"class enumeration exceeded cap {size_limit}"
                    )
                seen.add(nxt)
                queue.append(nxt)
    return seen


def reduced_class(
    seed: LabeledPermutation, extended: bool = False, size_limit: int = 10**6
) -> set[tuple[int, ...]]:
    """The reduced (one-row) projections of the class of ``seed``."""
    return {q.sigma() for q in rauzy_class(seed, extended, size_limit)}


def enumerate_reduced_classes(
    d: int,
    extended: bool = False,
    require_nondegenerate: bool = True,
    size_limit: int = 10**6,
) -> list[set[tuple[int, ...]]]:
    """Partition the irreducible (non-degenerate) one-row permutations of
    d symbols into (extended) Rauzy classes."""
    import itertools

    classes: list[set[tuple[int, ...]]] = []
    assigned: set[tuple[int, ...]] = set()
    for perm in itertools.permutations(range(1, d + 1)):
        if perm in assigned:
            continue
        p = LabeledPermutation.from_sigma(perm)
        if not is_irreducible(p):
            continue
        if require_nondegenerate and is_degenerate(p)[0]:
            continue
        cls = reduced_class(p, extended=extended, size_limit=size_limit)
        classes.append(cls)
        assigned |= cls
    return classes


def satisfies_pierost(p: LabeledPermutation) -> bool:
    """sigma(1) = d and sigma(d) = 1."""
    sigma = p.sigma()
    return sigma[0] == p.d and sigma[-1] == 1


def find_pierost(cls: Iterable[LabeledPermutation]) -> LabeledPermutation:
    """Some class member with sigma(1) = d and sigma(d) = 1.

    Every Rauzy class contains one; not finding one signals an enumeration
    bug, so that is an error.
    """
    members = sorted(cls, key=lambda q: q.sigma())
    for q in members:
        if satisfies_pierost(q):
            return q
    raise RuntimeError("no member with sigma(1)=d, sigma(d)=1: class is corrupt")


# ---------------------------------------------------------------------------
# acceptable symbols (disjointness pipeline input search)


def find_acceptable_symbols(
    p: LabeledPermutation,
) -> Optional[tuple[str, str, str, str]]:
    """First witness (a1, a2, g1, g2), in alphabet-lexicographic order, with

        Omega[a1][a2] = Omega[a2][a1] = 0,
        Omega[a1][g2] * Omega[a2][g1] = 0,
        Omega[a1][g1] * Omega[a2][g2] != 0,

    all four symbols distinct and outside {pi0^{-1}(1), pi0^{-1}(d)}.
    Requires a non-degenerate permutation with sigma(1)=d, sigma(d)=1.
    """
    if is_degenerate(p)[0]:
        raise ValueError("acceptable-symbol search needs a non-degenerate input")
    if not satisfies_pierost(p):
        raise ValueError(
            "acceptable-symbol search needs sigma(1)=d and sigma(d)=1"
        )
    om = translation_matrix(p)
    d = p.d
    excluded = {p.pi0.index(1), p.pi0.index(d)}
    candidates = [i for i in range(d) if i not in excluded]
    for i1 in candidates:
        for i2 in candidates:
            if i2 == i1 or om[i1][i2] != 0:
                continue
            for j1 in candidates:
                if j1 in (i1, i2):
                    continue
                for j2 in candidates:
                    if j2 in (i1, i2, j1):
                        continue
                    if om[i1][j2] * om[i2][j1] != 0:
                        continue
                    if om[i1][j1] * om[i2][j2] == 0:
                        continue
                    return (
                        p.alphabet[i1],
                        p.alphabet[i2],
                        p.alphabet[j1],
                        p.alphabet[j2],
                    )
    return None
