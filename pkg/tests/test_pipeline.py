from fractions import Fraction

import pytest

from vertflow.circle_dynamics import AtomicMeasure
from vertflow.exact_linalg import QVector, rationally_independent
from vertflow.permutations import LabeledPermutation, omega_row, translation_matrix
from vertflow.pipeline import (
    AtomAnalysis,
    PipelineError,
    RotationSpecialFlow,
    atom_analysis,
    construct_independent_tau,
    default_lambda_hat,
    jump_vectors,
    phi_map,
    psi_map,
    reduce_to_hat,
    run_pipeline,
    to_rotation_flow,
    verdicts,
)
from vertflow.suspension import InductionUndefined

DEMO = LabeledPermutation.from_sigma([6, 3, 2, 5, 4, 1])


def demo_hat(lam_hat=None):
    tau = construct_independent_tau(DEMO)
    lam_hat = lam_hat or [Fraction(5), Fraction(2), Fraction(3), Fraction(1)]
    return reduce_to_hat(DEMO, "2", "4", lam_hat, tau), tau


# -- reduction ----------------------------------------------------------------


def test_hat_permutation_shape():
    hat, _ = demo_hat()
    assert hat.perm.sigma() == (4, 2, 3, 1)
    assert hat.symbols == ("1", "2", "4", "6")
    assert hat.lengths == (5, 2, 3, 1)


def test_hat_roof_comes_from_ambient_omega():
    hat, tau = demo_hat()
    om = translation_matrix(DEMO)
    for sym in hat.symbols:
        i = DEMO.alphabet.index(sym)
        expected = QVector.zero(tau[0].dim)
        for j in range(DEMO.d):
            if om[i][j]:
                expected = expected + om[i][j] * tau[j]
        assert hat.roof_of(sym) == -expected


def test_reduce_rejects_dependent_tau():
    tau = [QVector.constant(6, k + 1) for k in range(6)]
    with pytest.raises(PipelineError):
        reduce_to_hat(DEMO, "2", "4", [1, 1, 2, 3], tau)


def test_reduce_rejects_bad_lengths():
    tau = construct_independent_tau(DEMO)
    with pytest.raises(PipelineError):
        reduce_to_hat(DEMO, "2", "4", [1, 1, 0, 3], tau)


# -- rotation flow ------------------------------------------------------------


def test_phi_psi_example():
    assert phi_map(5, 2, 3, 1) == (4, 1, 2, 3)
    assert psi_map(*phi_map(5, 2, 3, 1)) == (10, 6, 5, 7)


def test_phi_psi_identity_random(rng):
    for _ in range(50):
        x = Fraction(rng.randint(2, 100), rng.randint(1, 9))
        y = Fraction(rng.randint(1, 100), rng.randint(1, 9))
        z = Fraction(rng.randint(1, 100), rng.randint(1, 9))
        v = x * Fraction(rng.randint(1, 99), 100)
        l, alpha, b1, b2 = psi_map(*phi_map(x, y, z, v))
        assert (l, alpha, b1, b2) == (x + y + z, y + z + v, x, x + y)
        # psi codomain: 0 < x - y < z < v < x in the image coordinates
        X, Y, Z, V = psi_map(x - v, v, y, z)
        assert 0 < X - Y < Z < V < X


def test_to_rotation_flow_example():
    hat, _ = demo_hat([Fraction(5), Fraction(2), Fraction(3), Fraction(1)])
    flow = to_rotation_flow(hat)
    assert flow.case == "Xi0"
    assert (flow.l, flow.alpha, flow.beta1, flow.beta2) == (10, 6, 5, 7)
    f = flow.roof_step_function()
    assert f.piece_lengths() == [4, 1, 2, 3]
    # arc values: (h_s1, h_s1 + h_sd, h_a1, h_a2)
    assert flow.arc_values[1] == hat.roof_of("1") + hat.roof_of("6")
    # total roof mass is the suspension area of the surviving symbols
    expected = QVector.zero(flow.arc_values[0].dim)
    for sym, lam in zip(hat.symbols, hat.lengths):
        expected = expected + lam * hat.roof_of(sym)
    assert flow.total_roof_mass() == expected


def test_to_rotation_flow_xi1_mirror():
    hat, _ = demo_hat([Fraction(1), Fraction(2), Fraction(3), Fraction(5)])
    flow = to_rotation_flow(hat)
    assert flow.case == "Xi1"
    # mirrored roles: x' = v = 5, y' = z = 3, z' = y = 2, v' = x = 1
    assert (flow.l, flow.alpha, flow.beta1, flow.beta2) == (10, 6, 5, 8)
    assert flow.arc_values[0] == hat.roof_of("6")


def test_to_rotation_flow_equal_lengths():
    hat, _ = demo_hat([Fraction(2), Fraction(1), Fraction(1), Fraction(2)])
    with pytest.raises(InductionUndefined):
        to_rotation_flow(hat)


def test_jump_vectors_paper_formulas():
    hat, tau = demo_hat()
    flow = to_rotation_flow(hat)
    d1, d2 = jump_vectors(flow)
    om_tau = {}
    for sym in hat.symbols:
        row = omega_row(DEMO, sym)
        acc = QVector.zero(tau[0].dim)
        for j, c in enumerate(row):
            if c:
                acc = acc + c * tau[j]
        om_tau[sym] = acc
    s1, a1, a2, sd = hat.symbols
    assert d1 == -om_tau[a1] + (om_tau[s1] + om_tau[sd])
    assert d2 == -om_tau[a2] + om_tau[a1]
    assert rationally_independent(d1, d2)
    # jump coefficients are integer multiples of the tau coefficients scale
    # zero-sum of all four jumps
    f = flow.roof_step_function()
    total = QVector.zero(d1.dim)
    for _, jump in f.jumps():
        total = total + jump
    assert total.is_zero()


# -- lambda-hat search and atom analysis --------------------------------------


def test_default_lambda_hat_membership():
    lam_hat, trace = default_lambda_hat([25] * 40)
    assert trace["rigidity_index"] == 1 and trace["q"] == 25
    x, y, z, v = lam_hat
    assert all(t > 0 for t in lam_hat) and x > v


def test_atom_analysis_structure_and_masses():
    rep = run_pipeline(DEMO)
    a = rep.analysis
    assert a.status == "ok" and a.method == "sweep"
    d1, d2 = rep.jumps
    zero = d1 * 0
    masses = dict(a.forward.atoms)
    q, eps, trans = a.q, a.epsilon, a.transient_mass
    l = rep.flow.l
    assert masses[-d1] == eps * l
    assert masses[-d2] == eps * l
    assert masses[d1 + d2] == (eps - trans) * l
    # two transient atoms of mass ||q alpha||
    f = rep.flow.roof_step_function()
    jumps = dict(f.jumps())
    d0 = jumps[Fraction(0)]
    dla = jumps[rep.flow.l - rep.flow.alpha]
    assert masses[-d0] == trans * l
    assert masses[-dla] == trans * l
    assert masses[zero] == l - (3 * eps - trans + 2 * trans) * l
    # backward is the exact negation
    assert a.backward.atoms == a.forward.negated().atoms


def test_atom_analysis_inconclusive_membership():
    # beta1 placed in the gap between the V and W bases: inconclusive, not
    # an error
    from vertflow.circle_dynamics import ContinuedFraction, towers_VW

    cf = ContinuedFraction(tuple([25] * 40))
    v_tower, w_tower = towers_VW(cf, 1)
    gap_mid = (v_tower.hi + w_tower.lo) / 2
    alpha = cf.alpha()
    beta1 = (gap_mid + 24 * alpha) % 1
    assert not v_tower.contains(beta1)
    l = Fraction(1)
    beta2 = (beta1 + l) / 2
    lam = [beta1, beta2 - beta1, l - beta2, beta1 - (l - alpha)]
    assert all(t > 0 for t in lam)
    rep = run_pipeline(DEMO, lam_hat=lam)
    assert rep.analysis.status == "inconclusive"
    assert rep.weak_mixing == "inconclusive"
    assert rep.disjointness == "inconclusive"


def test_sweep_and_closed_form_agree():
    rep_s = run_pipeline(DEMO, rigidity_index=1)
    rep_c = run_pipeline(DEMO, rigidity_index=1, sweep_cap=1)
    assert rep_s.analysis.method == "sweep"
    assert rep_c.analysis.method == "closed-form"
    assert rep_s.analysis.forward.atoms == rep_c.analysis.forward.atoms
    assert rep_s.analysis.backward.atoms == rep_c.analysis.backward.atoms


# -- verdicts -----------------------------------------------------------------


def test_verdicts_independent_satisfied():
    rep = run_pipeline(DEMO)
    assert rep.jumps_independent
    assert rep.weak_mixing == "satisfied"
    assert rep.disjointness == "satisfied"


def test_verdicts_dependent_inconclusive():
    rep = run_pipeline(DEMO, tau_dependent_debug=True)
    assert not rep.jumps_independent
    assert rep.weak_mixing == "inconclusive"


def test_verdicts_symmetric_tables_not_satisfied():
    rep = run_pipeline(DEMO)
    flow = rep.flow
    d1, d2 = rep.jumps
    sym_table = AtomicMeasure.from_dict(
        {d1 * 0: Fraction(1, 2), d1: Fraction(1, 4), -d1: Fraction(1, 4)},
        Fraction(1),
    )
    fake = AtomAnalysis(
        status="ok", reason=None, rigidity_index=1, q=25,
        forward=sym_table, backward=sym_table,
        epsilon=Fraction(1, 25), transient_mass=Fraction(1, 625),
    )
    weak, disj, _ = verdicts(flow, (d1, d2), fake)
    assert disj == "not satisfied"


# -- end-to-end ---------------------------------------------------------------


def test_run_pipeline_end_to_end_report():
    rep = run_pipeline(DEMO)
    out = rep.to_json()
    assert out["weak_mixing_criterion"] == "satisfied"
    assert out["disjointness_criterion"] == "satisfied"
    assert out["jumps"]["rationally_independent"] is True
    assert out["analysis"]["membership"]["beta1_in_V"] is True
    assert len(out["analysis"]["forward_atoms"]) == 6


def test_run_pipeline_rejects_symmetric():
    with pytest.raises(PipelineError):
        run_pipeline(LabeledPermutation.from_sigma([6, 5, 4, 3, 2, 1]))


def test_run_pipeline_rejects_non_pierost():
    with pytest.raises(PipelineError):
        run_pipeline(LabeledPermutation.from_sigma([3, 1, 4, 2]))


def test_run_pipeline_equal_lambda_hat_error():
    with pytest.raises(InductionUndefined):
        run_pipeline(DEMO, lam_hat=[Fraction(1, 4)] * 4)


def test_run_pipeline_xi1_case():
    lam_hat, _ = default_lambda_hat([25] * 40)
    x, y, z, v = lam_hat
    rep = run_pipeline(DEMO, lam_hat=[v, z, y, x])
    assert rep.flow.case == "Xi1"
    assert rep.weak_mixing == "satisfied"
    assert rep.disjointness == "satisfied"


def test_closed_form_large_q():
    rep = run_pipeline(DEMO, rigidity_index=5)
    a = rep.analysis
    assert a.method == "closed-form"
    assert a.q == 9828200
    assert rep.weak_mixing == "satisfied"
    assert rep.disjointness == "satisfied"
    masses = dict(a.forward.atoms)
    d1, d2 = rep.jumps
    assert masses[-d1] == a.epsilon * rep.flow.l


def test_construct_independent_tau_properties():
    from vertflow.exact_linalg import rank_over_Q
    from vertflow.suspension import validate_theta, _parse_basis

    zero = {"3", "5"}  # complement of the surviving symbols for the demo
    tau = construct_independent_tau(DEMO, zero_symbols=zero)
    assert rank_over_Q(list(tau)) == DEMO.d
    bv = _parse_basis(tuple(["1"] + ["sqrt:%d" % p for p in (2, 3, 5, 7, 11)]), 256)
    lengths = [
        Fraction(0) if a in zero else Fraction(1) for a in DEMO.alphabet
    ]
    ok, report = validate_theta(DEMO, lengths, tau, bv)
    assert ok, report
