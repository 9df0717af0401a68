from fractions import Fraction

import pytest

from vertflow.circle_dynamics import (
    AtomicMeasure,
    BreakpointOverflow,
    ContinuedFraction,
    StepFunction,
    Tower,
    birkhoff_combination,
    birkhoff_sum,
    convergents,
    distance_to_lattice,
    distribution,
    joint_distribution,
    orbit_hits,
    rigidity_indices,
    tower_difference,
    towers_VW,
)


GOLDEN = ContinuedFraction(tuple([1] * 40))
ALL25 = ContinuedFraction(tuple([25] * 40))


def random_step_function(rng, l=Fraction(1), max_jumps=5, value_span=6):
    k = rng.randint(1, max_jumps)
    xs = sorted(rng.sample(range(1, 499), k))
    return StepFunction.make(
        l,
        [Fraction(x, 500) * l for x in xs],
        [Fraction(rng.randint(-value_span, value_span), rng.randint(1, 3)) for _ in xs],
    )


# -- continued fractions ------------------------------------------------------


def test_convergents_examples():
    assert [q for _, q in convergents([1, 1, 1, 1, 1])] == [1, 2, 3, 5, 8]
    assert [q for _, q in convergents([25, 25])] == [25, 626]
    assert convergents([7]) == [(1, 7)]
    with pytest.raises(ValueError):
        convergents([3, 0, 2])


def test_distance_examples():
    # golden ratio: ||1 * alpha|| = 1 - alpha ~ 0.3819660...
    d = distance_to_lattice(1, GOLDEN)
    assert abs(float(d) - 0.3819660113) < 1e-9
    # best-approximation identity at convergent denominators
    conv = GOLDEN.convergents()
    alpha = GOLDEN.alpha_unit()
    for p, q in conv[:20]:
        assert distance_to_lattice(q, GOLDEN) == abs(q * alpha - p)
    # the all-25 window example
    w = 25 * distance_to_lattice(25, ALL25)
    assert Fraction(1, 52) < w < Fraction(1, 25)


def test_distance_scales_with_circle():
    cf = ContinuedFraction((3, 2, 4), Fraction(5))
    assert distance_to_lattice(3, cf) == 5 * cf.norm_unit(3)


def test_rigidity_examples():
    assert rigidity_indices(ALL25) == list(range(1, 40, 2))
    assert rigidity_indices(GOLDEN) == []
    assert rigidity_indices(ContinuedFraction(tuple([2] * 40))) == []


def test_from_rational_roundtrip():
    cf = ContinuedFraction.from_rational(ALL25.alpha_unit())
    assert cf.quotients == ALL25.quotients


# -- orbit hits ---------------------------------------------------------------


def test_orbit_hits_brute_force(rng):
    for _ in range(1500):
        m = rng.randint(2, 50)
        a = rng.randint(0, m - 1)
        lo = rng.randint(0, m - 1)
        hi = rng.randint(0, m - 1)
        k_max = rng.randint(1, 30)
        if lo <= hi:
            brute = [k for k in range(k_max) if lo <= (a * k) % m <= hi]
        else:
            brute = [k for k in range(k_max) if (a * k) % m >= lo or (a * k) % m <= hi]
        assert orbit_hits(a, m, lo, hi, k_max) == brute


# -- step functions and Birkhoff sums ----------------------------------------


def test_step_function_basics():
    f = StepFunction.make(1, [0, Fraction(1, 2)], [Fraction(1), Fraction(3)])
    assert f.value_at(Fraction(1, 4)) == 1
    assert f.value_at(Fraction(3, 4)) == 3
    assert f.integral() == 2
    assert f.jumps() == [(Fraction(0), Fraction(-2)), (Fraction(1, 2), Fraction(2))]
    # canonical merge of equal adjacent values
    g = StepFunction.make(1, [0, Fraction(1, 3), Fraction(2, 3)], [2, 2, 2])
    assert g.is_constant()


def test_birkhoff_trivial_cases():
    f = StepFunction.constant(1, Fraction(5, 3))
    alpha = ALL25.alpha()
    assert birkhoff_sum(f, alpha, 7).values == (Fraction(35, 3),)
    z = birkhoff_sum(f, alpha, 0)
    assert z.is_constant() and z.values[0] == 0


def test_birkhoff_negative_one_is_shifted_negation(rng):
    f = random_step_function(rng)
    alpha = ALL25.alpha()
    b = birkhoff_sum(f, alpha, -1)
    for _ in range(30):
        x = Fraction(rng.randint(0, 10**6), 10**6 + 1)
        assert b.value_at(x) == -f.value_at((x - alpha) % 1)


def test_birkhoff_pointwise(rng):
    f = random_step_function(rng)
    alpha = ALL25.alpha()
    for n in (1, 2, 9, -3):
        b = birkhoff_sum(f, alpha, n)
        for _ in range(25):
            x = Fraction(rng.randint(0, 10**6), 10**6 + 1)
            if n >= 0:
                expect = sum(
                    (f.value_at((x + i * alpha) % 1) for i in range(n)), Fraction(0)
                )
            else:
                expect = -sum(
                    (f.value_at((x + i * alpha) % 1) for i in range(n, 0)), Fraction(0)
                )
            assert b.value_at(x) == expect


def test_birkhoff_cocycle_identity(rng):
    alpha = ALL25.alpha()
    for _ in range(6):
        f = random_step_function(rng)
        m = rng.randint(1, 12)
        n = rng.randint(1, 12)
        lhs = birkhoff_sum(f, alpha, m + n)
        rhs = birkhoff_sum(f, alpha, m) + birkhoff_sum(f, alpha, n).shift(m * alpha)
        assert lhs == rhs


def test_birkhoff_overflow_guard():
    f = StepFunction.make(1, [0, Fraction(1, 2)], [1, 2])
    with pytest.raises(BreakpointOverflow):
        birkhoff_sum(f, ALL25.alpha(), 10**7, cap=1000)


# -- tower difference ---------------------------------------------------------


def test_tower_difference_constant_is_zero():
    f = StepFunction.constant(1, Fraction(2))
    g = tower_difference(f, ALL25, 1)
    assert g.is_constant() and g.values[0] == 0


def test_tower_difference_single_jump():
    # one discontinuity: -d * indicator of one tower of measure q ||q a||
    cf = ALL25
    beta = Fraction(1, 3)
    d = Fraction(7, 2)
    # jump at beta has value +d, and a compensating jump at 0
    f = StepFunction.make(1, [0, beta], [Fraction(1), 1 + d])
    g = tower_difference(f, cf, 1)
    dist = distribution(g)
    q = cf.denominator(1)
    delta = cf.norm(q)
    masses = dict(dist.atoms)
    # the beta tower is disjoint from the 0 tower here, masses q*delta each
    assert masses[-d] == q * delta
    assert masses[d] == q * delta  # jump at 0 is -d, tower value +d
    assert masses[Fraction(0)] == 1 - 2 * q * delta


def test_tower_difference_requires_odd_index():
    f = StepFunction.make(1, [0, Fraction(1, 3)], [1, 2])
    with pytest.raises(ValueError):
        tower_difference(f, ALL25, 2)


def test_wartsum_identity_random(rng):
    for _ in range(8):
        quotients = tuple(rng.randint(1, 4) for _ in range(rng.randint(3, 9)))
        cf = ContinuedFraction(quotients)
        f = random_step_function(rng)
        odd = [n for n in range(1, cf.depth, 2) if cf.denominator(n) <= 3000]
        if not odd:
            continue
        n = odd[-1]
        q = cf.denominator(n)
        td = tower_difference(f, cf, n)
        direct = birkhoff_sum(f, cf.alpha(), 2 * q) - birkhoff_sum(
            f, cf.alpha(), q
        ).scale(2)
        assert td == direct


def test_combination_equals_separate(rng):
    f = random_step_function(rng)
    alpha = ALL25.alpha()
    combo = birkhoff_combination(f, alpha, [(-14, 1), (-7, -2)])
    sep = birkhoff_sum(f, alpha, -14) - birkhoff_sum(f, alpha, -7).scale(2)
    assert combo == sep


def test_backward_table_is_negated_forward(rng):
    """Finite-scale reflection: the distribution of
    -(f^(-2q) - 2 f^(-q)) equals the negated distribution of
    f^(2q) - 2 f^(q), via Lebesgue invariance under T^(2q)."""
    for _ in range(4):
        quotients = tuple(rng.randint(1, 4) for _ in range(7))
        cf = ContinuedFraction(quotients)
        odd = [n for n in range(1, cf.depth, 2) if cf.denominator(n) <= 600]
        if not odd:
            continue
        n = odd[-1]
        q = cf.denominator(n)
        f = random_step_function(rng)
        fwd = distribution(
            birkhoff_combination(f, cf.alpha(), [(2 * q, 1), (q, -2)])
        )
        bwd = distribution(
            -birkhoff_combination(f, cf.alpha(), [(-2 * q, 1), (-q, -2)])
        )
        assert bwd.atoms == fwd.negated().atoms


# -- distributions ------------------------------------------------------------


def test_distribution_examples():
    c = StepFunction.constant(Fraction(3), Fraction(7))
    assert distribution(c).atoms == ((Fraction(7), Fraction(3)),)
    ind = StepFunction.make(
        1, [Fraction(1, 5), Fraction(2, 5)], [Fraction(1), Fraction(0)]
    )
    d = dict(distribution(ind).atoms)
    assert d[Fraction(1)] == Fraction(1, 5)
    assert d[Fraction(0)] == Fraction(4, 5)


def test_distribution_masses_sum(rng):
    f = random_step_function(rng)
    dist = distribution(f)
    assert dist.mass_total() == f.l


def test_joint_distribution():
    z = StepFunction.constant(1, Fraction(0))
    j = joint_distribution(z, z)
    assert j.atoms == (((Fraction(0), Fraction(0)), Fraction(1)),)
    g1 = StepFunction.make(1, [0, Fraction(1, 2)], [Fraction(0), Fraction(1)])
    g2 = StepFunction.make(1, [Fraction(1, 4), Fraction(3, 4)], [Fraction(0), Fraction(1)])
    j = joint_distribution(g1, g2)
    masses = dict(j.atoms)
    assert len(masses) == 4 and j.mass_total() == 1
    # marginals recover the scalar distributions
    m1: dict = {}
    m2: dict = {}
    for (v1, v2), m in j.atoms:
        m1[v1] = m1.get(v1, Fraction(0)) + m
        m2[v2] = m2.get(v2, Fraction(0)) + m
    assert m1 == dict(distribution(g1).atoms)
    assert m2 == dict(distribution(g2).atoms)
    with pytest.raises(ValueError):
        joint_distribution(g1, StepFunction.constant(2, Fraction(0)))


# -- towers -------------------------------------------------------------------


def test_towers_vw_example():
    v, w = towers_VW(ALL25, 1)
    q = ALL25.denominator(1)
    delta = ALL25.norm(q)
    delta_prev = ALL25.norm(1)
    assert v.measure_if_disjoint() == q * (delta_prev / 3 - 3 * delta)
    assert v.measure_if_disjoint() > Fraction(1, 53)
    assert v.rungs_selfdisjoint() and w.rungs_selfdisjoint()
    ivs = v.intervals()
    iws = w.intervals()
    assert len(ivs) == len(iws) == q

    def overlap(a, b):
        return not (a[1] <= b[0] or b[1] <= a[0])

    assert not any(overlap(a, b) for a in ivs for b in iws)


def test_tower_membership_and_rungs():
    v, w = towers_VW(ALL25, 1)
    x = v.lo + Fraction(1, 997)
    assert v.contains(x) and v.rung_of(x) == 0
    alpha = ALL25.alpha()
    x7 = (v.lo + 7 * alpha + Fraction(1, 997)) % 1
    assert v.contains(x7) and v.rung_of(x7) == 7
    assert not v.contains(w.lo + Fraction(1, 997))
    assert not w.contains(v.lo)


def test_towers_ratio_guard():
    # all-2 continued fraction: ||q_{n-1}a|| / ||q_n a|| ~ 2.41 < 12
    cf = ContinuedFraction(tuple([2] * 20))
    with pytest.raises(ValueError):
        towers_VW(cf, 1)


def test_atomic_measure_csv_and_normalized():
    meas = AtomicMeasure.from_dict(
        {Fraction(1, 2): Fraction(1, 4), Fraction(0): Fraction(3, 4)}, Fraction(1)
    )
    assert meas.normalized() == [
        (Fraction(0), Fraction(3, 4)),
        (Fraction(1, 2), Fraction(1, 4)),
    ]
    rows = meas.as_csv_rows()
    assert rows == ["0,3/4", "1/2,1/4"]
