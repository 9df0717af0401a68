from fractions import Fraction

import pytest

from vertflow.exact_linalg import QVector
from vertflow.permutations import LabeledPermutation, iet_apply
from vertflow.suspension import (
    InductionUndefined,
    SaddleConnectionError,
    SuspensionDatum,
    VerticalFlowSimulator,
    affine_comparison,
    area,
    corner_points,
    datum_area,
    mirror,
    mod_distance,
    polygon_area_symbolic,
    polygon_vertices,
    polygonal_rv_left,
    polygonal_rv_right,
    roof_from_tau,
    roof_of,
    rv_roof_step,
    triangulate,
    triangulation_area_symbolic,
    validate_theta_datum,
)
from conftest import random_theta_datum, omega_ones


def swap_datum(l1=Fraction(3, 10), l2=Fraction(7, 10), t1=1, t2=-1):
    p = LabeledPermutation.from_sigma([2, 1])
    return SuspensionDatum.build(p, [l1, l2], [t1, t2])


# -- Theta ------------------------------------------------------------------


def test_theta_example_321():
    p = LabeledPermutation.from_sigma([3, 2, 1])
    d = SuspensionDatum.build(p, [1, 1, 1], [1, 1, -3])
    assert validate_theta_datum(d) == (True, None)


def test_theta_first_top_nonpositive():
    p = LabeledPermutation.from_sigma([3, 2, 1])
    d = SuspensionDatum.build(p, [1, 1, 1], [-1, 2, -3])
    ok, report = validate_theta_datum(d)
    assert not ok
    assert "top partial sum at k=1" in report


def test_theta_zero_length_adjacency():
    # zero-length neighbours with opposite tau signs violate the rule
    p = LabeledPermutation.from_sigma([4, 3, 2, 1])
    d = SuspensionDatum.build(
        p, [1, 0, 0, 1], [1, 1, -1, -2]
    )
    ok, report = validate_theta_datum(d)
    assert not ok
    assert "zero-length" in report
    d2 = SuspensionDatum.build(p, [1, 0, 0, 1], [3, 1, 1, -4])
    # same-sign taus on the zero block: adjacency holds
    ok2, _ = validate_theta_datum(d2)
    assert ok2


# -- roof -------------------------------------------------------------------


def test_roof_example_321():
    p = LabeledPermutation.from_sigma([3, 2, 1])
    tau = [QVector.constant(1, x) for x in (1, 1, -3)]
    h = roof_from_tau(p, tau)
    assert [c.rational_part() for c in h] == [2, 4, 2]


def test_roof_swap_formula():
    p = LabeledPermutation.from_sigma([2, 1])
    tau = [QVector.constant(1, 2), QVector.constant(1, Fraction(-1, 2))]
    h = roof_from_tau(p, tau)
    # Omega = [[0,1],[-1,0]]: h = (-tau2, tau1)
    assert h[0].rational_part() == Fraction(1, 2)
    assert h[1].rational_part() == 2


def test_roof_rejects_zero_tau():
    p = LabeledPermutation.from_sigma([2, 1])
    d = SuspensionDatum.build(p, [1, 1], [0, 0])
    ok, _ = validate_theta_datum(d)
    assert not ok


def test_area_example():
    p = LabeledPermutation.from_sigma([3, 2, 1])
    tau = [QVector.constant(1, x) for x in (1, 1, -3)]
    h = roof_from_tau(p, tau)
    assert area([Fraction(1)] * 3, h).rational_part() == 8


# -- induction --------------------------------------------------------------


def test_rv_right_swap_example():
    d = swap_datum(Fraction(1, 3), Fraction(2, 3), 1, -1)
    r = polygonal_rv_right(d)
    assert r.perm.sigma() == (2, 1)
    assert r.lengths == (Fraction(1, 3), Fraction(1, 3))
    assert r.tau[1].rational_part() == -2
    # (pi, lambda, h) form: the winner pi1^{-1}(d) carries the roof sum
    h_before = roof_of(d)
    h_after = roof_of(r)
    assert h_after[0] == h_before[0] + h_before[1]
    _, nl, nh = rv_roof_step(d.perm, d.lengths, h_before)
    assert nl == r.lengths and nh == h_after


def test_rv_right_undefined_on_equal_lengths():
    d = swap_datum(Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(InductionUndefined):
        polygonal_rv_right(d)


def test_rv_area_invariance_and_theta_right(rng):
    for _ in range(25):
        d = random_theta_datum(rng)
        a0 = datum_area(d)
        try:
            r = polygonal_rv_right(d)
        except InductionUndefined:
            continue
        assert datum_area(r) == a0
        assert validate_theta_datum(r)[0]


def test_rv_left_first_return_oracle(rng):
    """The left induction's IET is the first-return map to the left-trimmed
    interval (shifted to 0), exactly."""

    def first_return(p, lam_map, x, keep_lo, keep_hi):
        y = iet_apply(p, lam_map, x)
        guard = 0
        while not (keep_lo <= y < keep_hi):
            y = iet_apply(p, lam_map, y)
            guard += 1
            assert guard < 200
        return y

    checked = 0
    while checked < 12:
        d = random_theta_datum(rng, d_min=3)
        try:
            dl = polygonal_rv_left(d)
        except InductionUndefined:
            continue
        assert datum_area(dl) == datum_area(d)
        p = d.perm
        lam = {a: d.lengths[i] for i, a in enumerate(p.alphabet)}
        lam_l = {a: dl.lengths[i] for i, a in enumerate(dl.perm.alphabet)}
        total = d.total_length()
        cut = total - sum(dl.lengths)
        for _ in range(6):
            x = Fraction(rng.randint(1, 999), 1000) * sum(dl.lengths)
            lhs = iet_apply(dl.perm, lam_l, x)
            rhs = first_return(p, lam, x + cut, cut, total) - cut
            assert lhs == rhs
        checked += 1


def test_mirror_involution(rng):
    d = random_theta_datum(rng)
    assert mirror(mirror(d)) == d


def test_left_right_not_inverse():
    d = swap_datum(Fraction(3, 10), Fraction(7, 10), 1, -1)
    r = polygonal_rv_left(polygonal_rv_right(d))
    assert r != d


# -- polygon and triangulation ---------------------------------------------


def test_polygon_corner_example():
    d = swap_datum(Fraction(1, 3), Fraction(2, 3), 1, -1)
    pts = corner_points(d)
    assert pts[("R", 1)][0] == Fraction(1, 3)
    assert pts[("R", 1)][1].rational_part() == 1
    assert pts[("R", 2)] == (Fraction(1), QVector.constant(1, 0))
    assert pts[("Rp", 1)][0] == Fraction(2, 3)
    assert pts[("Rp", 1)][1].rational_part() == -1
    assert pts[("R", 0)] == (Fraction(0), QVector.constant(1, 0))


def test_polygon_saddle_detection():
    # lambda = (1/3, 2/3) is a rational rotation: S abscissae collide
    d = swap_datum(Fraction(1, 3), Fraction(2, 3), 1, -1)
    with pytest.raises(SaddleConnectionError):
        polygon_vertices(d)


def test_polygon_and_triangulation_torus():
    d = swap_datum()
    model = polygon_vertices(d)
    tri = triangulate(model)
    assert len(tri.triangles) == 6
    # spec: S projects to the IET preimage
    lam = {"1": Fraction(3, 10), "2": Fraction(7, 10)}
    p = d.perm
    assert iet_apply(p, lam, model.points[("S", 1)][0]) == model.points[("R", 1)][0]
    # exact area bookkeeping
    assert polygon_area_symbolic(model) == datum_area(d)
    assert triangulation_area_symbolic(tri) == polygon_area_symbolic(model)


def test_polygon_closure_and_areas_random(rng):
    done = 0
    while done < 8:
        d = random_theta_datum(rng, d_min=3, d_max=5)
        try:
            model = polygon_vertices(d)
        except SaddleConnectionError:
            continue
        tri = triangulate(model)
        assert polygon_area_symbolic(model) == datum_area(d)
        assert triangulation_area_symbolic(tri) == datum_area(d)
        # S abscissae are IET preimages of the R abscissae
        lam = {a: d.lengths[i] for i, a in enumerate(d.perm.alphabet)}
        for i in range(1, d.perm.d):
            s_x = model.points[("S", i)][0]
            r_x = model.points[("R", i)][0]
            assert iet_apply(d.perm, lam, s_x) == r_x
        done += 1


def test_affine_comparison_identity_and_scaling():
    d = swap_datum()
    model = polygon_vertices(d)
    tri = triangulate(model)
    b = affine_comparison(tri, tri, 0)
    assert abs(b[0][0] - 1) < 1e-12 and abs(b[1][1] - 1) < 1e-12
    assert abs(b[0][1]) < 1e-12 and abs(b[1][0]) < 1e-12
    # doubled data: the comparison map is x -> 2x, linear part 2*Id
    d2 = swap_datum(Fraction(3, 5), Fraction(7, 5), 2, -2)
    tri2 = triangulate(polygon_vertices(d2))
    b2 = affine_comparison(tri, tri2, 0)
    assert abs(b2[0][0] - 2) < 1e-12 and abs(b2[1][1] - 2) < 1e-12
    assert abs(b2[0][1]) < 1e-12 and abs(b2[1][0]) < 1e-12


def test_affine_comparison_continuity():
    d = swap_datum()
    tri = triangulate(polygon_vertices(d))
    eps = Fraction(1, 1000)
    d2 = swap_datum(Fraction(3, 10) + eps, Fraction(7, 10) - eps, 1, -1)
    tri2 = triangulate(polygon_vertices(d2))
    for idx in range(len(tri.triangles)):
        b = affine_comparison(tri, tri2, idx)
        assert abs(b[0][0] - 1) < 0.1 and abs(b[1][1] - 1) < 0.1
        assert abs(b[0][1]) < 0.1 and abs(b[1][0]) < 0.1


def test_mod_distance():
    d1 = swap_datum()
    d2 = swap_datum(Fraction(3, 10) + Fraction(1, 2), Fraction(7, 10) - Fraction(1, 2))
    assert mod_distance(d1, d1) == 0
    assert abs(mod_distance(d1, d2) - 1.0) < 1e-12
    assert mod_distance(d1, d2) == mod_distance(d2, d1)
    p_other = LabeledPermutation.from_sigma([3, 2, 1])
    d3 = SuspensionDatum.build(p_other, [1, 1, 1], [1, 1, -3])
    with pytest.raises(ValueError):
        mod_distance(d1, d3)


# -- special-flow consistency -----------------------------------------------


def test_vertical_flow_first_return_matches_iet_and_roof(rng):
    p = LabeledPermutation.from_sigma([3, 2, 1])
    lam = [Fraction(29, 100), Fraction(33, 100), Fraction(38, 100)]
    datum = SuspensionDatum.build(p, lam, [2, 1, -2], basis_spec=["1"])
    assert validate_theta_datum(datum)[0]
    sim = VerticalFlowSimulator(datum)
    roof = [h.rational_part() for h in roof_of(datum)]
    lam_map = {a: datum.lengths[i] for i, a in enumerate(p.alphabet)}
    total = datum.total_length()
    starts = {}
    pos = Fraction(0)
    for k in range(1, p.d + 1):
        a = p.symbol_at0(k)
        starts[a] = pos
        pos += lam_map[a]
    for t in range(200):
        s = Fraction(rng.randint(1, 9972), 9973) * total
        s_next, time = sim.first_return(s)
        assert s_next == iet_apply(p, lam_map, s)
        symbol = None
        for a in p.alphabet:
            if lam_map[a] > 0 and starts[a] <= s < starts[a] + lam_map[a]:
                symbol = a
        assert time == roof[p.alphabet.index(symbol)]
