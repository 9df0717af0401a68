"""Shared generators for randomized exact tests (seeded, deterministic)."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from vertflow.exact_linalg import QVector
from vertflow.permutations import (
    LabeledPermutation,
    is_irreducible,
    translation_matrix,
)
from vertflow.suspension import SuspensionDatum, validate_theta_datum


def random_irreducible(rng: random.Random, d: int) -> LabeledPermutation:
    while True:
        sigma = list(range(1, d + 1))
        rng.shuffle(sigma)
        p = LabeledPermutation.from_sigma(sigma)
        if is_irreducible(p):
            return p


def random_lengths(rng: random.Random, d: int) -> list[Fraction]:
    return [Fraction(rng.randint(1, 30), rng.randint(1, 30)) for _ in range(d)]


def omega_ones(p: LabeledPermutation) -> list[int]:
    """Omega * (1,...,1): a Theta-valid integer tau for any irreducible p."""
    return [sum(row) for row in translation_matrix(p)]


def random_theta_datum(
    rng: random.Random, d_min: int = 2, d_max: int = 6
) -> SuspensionDatum:
    """Random Theta-valid suspension datum with a rationally-perturbed
    Omega*1 tau over the default formal basis."""
    while True:
        d = rng.randint(d_min, d_max)
        p = random_irreducible(rng, d)
        base = omega_ones(p)
        tau = []
        for i, b in enumerate(base):
            coeffs = [Fraction(0)] * 2
            coeffs[0] = Fraction(b) + Fraction(rng.randint(-40, 40), 100)
            coeffs[1] = Fraction(rng.randint(-5, 5), 1000)
            tau.append(QVector(coeffs))
        datum = SuspensionDatum.build(p, random_lengths(rng, d), tau)
        ok, _ = validate_theta_datum(datum)
        if ok:
            return datum


@pytest.fixture
def rng():
    return random.Random(20240809)
