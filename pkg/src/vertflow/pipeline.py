"""Reduction of a d-symbol suspension to a rotation special flow and the
weak-mixing / disjointness-criterion verdicts.

Pipeline: pick acceptable symbols (a1, a2), collapse the suspension with
zero lengths outside {pi0^-1(1), a1, a2, pi0^-1(d)} to a 4-symbol datum,
perform one polygonal induction step to land on a special flow over a
circle rotation with four roof discontinuities, read off the two symbolic
jump vectors, and compare the finite-scale forward/backward distributions
of the centered double-tower Birkhoff differences.

Verdicts state that the checked sufficient conditions are satisfied; they
never claim more than that.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Optional, Sequence

from .circle_dynamics import (
    ContinuedFraction,
    AtomicMeasure,
    StepFunction,
    Tower,
    birkhoff_combination,
    distribution,
    rigidity_indices,
    rotation_hits_interval,
    tower_difference,
    towers_VW,
)
from .exact_linalg import (
    QVector,
    certified_sign,
    evaluate_numeric,
    rank_over_Q,
    rationally_independent,
)
from .permutations import (
    LabeledPermutation,
    find_acceptable_symbols,
    is_degenerate,
    is_symmetric,
    satisfies_pierost,
    translation_matrix,
)
from .suspension import InductionUndefined, _parse_basis, default_basis_spec


class PipelineError(ValueError):
    pass


# ---------------------------------------------------------------------------
# reduction to the 4-symbol datum


@dataclass(frozen=True)
class HatSuspension:
    """4-symbol suspension datum carrying the ambient roof values.

    The roof comes from the full d-symbol translation matrix (the collapsed
    symbols have zero length but still shape the return times), so it is
    stored explicitly instead of being recomputed from the 4x4 matrix.
    """

    perm: LabeledPermutation  # on the 4 surviving symbols
    lengths: tuple[Fraction, Fraction, Fraction, Fraction]
    roof: tuple[QVector, QVector, QVector, QVector]
    symbols: tuple[str, str, str, str]  # (s1, a1, a2, sd)
    basis_spec: tuple[str, ...]

    def length(self, symbol: str) -> Fraction:
        return self.lengths[self.perm.alphabet.index(symbol)]

    def roof_of(self, symbol: str) -> QVector:
        return self.roof[self.perm.alphabet.index(symbol)]


def reduce_to_hat(
    p: LabeledPermutation,
    a1: str,
    a2: str,
    lam_hat: Sequence[Fraction],
    tau: Sequence[QVector],
    basis_spec: Optional[Sequence[str]] = None,
    require_independent: bool = True,
) -> HatSuspension:
    """Collapse to the 4 surviving symbols (s1, a1, a2, sd).

    lam_hat lists the 4 positive lengths in that order; all other symbols
    carry zero length.  tau must be rationally independent over Q (rank d)
    so the jump vectors downstream are guaranteed independent; debug runs
    may waive the check.
    """
    d = p.d
    s1 = p.symbol_at0(1)
    sd = p.symbol_at0(d)
    hat_symbols = (s1, a1, a2, sd)
    if len(set(hat_symbols)) != 4:
        raise PipelineError("the four surviving symbols must be distinct")
    if len(lam_hat) != 4 or any(Fraction(x) <= 0 for x in lam_hat):
        raise PipelineError("lam_hat must be 4 positive rationals")
    if len(tau) != d:
        raise PipelineError("tau must cover the full alphabet")
    if require_independent and rank_over_Q(list(tau)) != d:
        raise PipelineError("tau must be rationally independent (rank d over Q)")
    # ambient roof h = -Omega tau on the surviving symbols
    om = translation_matrix(p)
    dim = tau[0].dim
    roof = []
    for sym in hat_symbols:
        i = p.alphabet.index(sym)
        acc = QVector.zero(dim)
        for j in range(d):
            if om[i][j]:
                acc = acc + om[i][j] * tau[j]
        roof.append(-acc)
    hat_perm = LabeledPermutation.from_maps(
        hat_symbols,
        {s1: 1, a1: 2, a2: 3, sd: 4},
        {s1: 4, a1: 2, a2: 3, sd: 1},
    )
    if basis_spec is None:
        basis_spec = default_basis_spec(dim)
    return HatSuspension(
        perm=hat_perm,
        lengths=tuple(Fraction(x) for x in lam_hat),
        roof=tuple(roof),
        symbols=hat_symbols,
        basis_spec=tuple(basis_spec),
    )


# ---------------------------------------------------------------------------
# rotation special flow


@dataclass(frozen=True)
class RotationSpecialFlow:
    """Special flow over the rotation by alpha on R/lZ under a step roof
    with discontinuities {0, l - alpha, beta1, beta2}."""

    l: Fraction
    alpha: Fraction
    beta1: Fraction
    beta2: Fraction
    arc_values: tuple[QVector, QVector, QVector, QVector]
    basis_spec: tuple[str, ...]
    case: str = "Xi0"

    def __post_init__(self):
        pts = [Fraction(0), self.l - self.alpha, self.beta1, self.beta2]
        if len(set(pts)) != 4:
            raise PipelineError("the four discontinuities must be distinct")
        if not (0 < self.l - self.alpha < self.beta1 < self.beta2 < self.l):
            raise PipelineError(
                "expected 0 < l - alpha < beta1 < beta2 < l; got "
                f"l={self.l}, alpha={self.alpha}, b1={self.beta1}, b2={self.beta2}"
            )
        bv = _parse_basis(self.basis_spec, 256)
        for v in self.arc_values:
            if certified_sign(v, bv) <= 0:
                raise PipelineError("roof must be positive on every arc")

    def discontinuities(self) -> list[Fraction]:
        return [Fraction(0), self.l - self.alpha, self.beta1, self.beta2]

    def roof_step_function(self) -> StepFunction:
        return StepFunction.make(
            self.l,
            [Fraction(0), self.l - self.alpha, self.beta1, self.beta2],
            list(self.arc_values),
        )

    def jump_at(self, x: Fraction) -> QVector:
        f = self.roof_step_function()
        for b, d in f.jumps():
            if b == x % self.l:
                return d
        return self.arc_values[0] * 0

    def total_roof_mass(self) -> QVector:
        return self.roof_step_function().integral()

    def continued_fraction(self) -> ContinuedFraction:
        return ContinuedFraction.from_rational(self.alpha / self.l, self.l)


def phi_map(x, y, z, v):
    """phi(x,y,z,v) = (x-v, v, y, z) on {x > v}."""
    if not x > v:
        raise PipelineError("phi requires x > v")
    return (x - v, v, y, z)


def psi_map(x, y, z, v):
    """psi(x,y,z,v) = (x+y+z+v, y+z+v, x+y, x+y+z)."""
    return (x + y + z + v, y + z + v, x + y, x + y + z)


def to_rotation_flow(hat: HatSuspension) -> RotationSpecialFlow:
    """One polygonal induction step on the 4-symbol special flow.

    With (x, y, z, v) the lengths of (s1, a1, a2, sd): the case x > v uses
    the right-hand step directly; x < v mirrors through the left-hand one
    (the mirrored datum has the same combinatorial shape with the roles of
    (s1, a1, a2, sd) and (sd, a2, a1, s1) swapped).
    """
    s1, a1, a2, sd = hat.symbols
    x, y, z, v = (hat.length(s) for s in (s1, a1, a2, sd))
    if x == v:
        raise InductionUndefined(
            "induction undefined: lambda_hat for pi0^-1(1) and pi0^-1(d) are equal"
        )
    if x > v:
        case = "Xi0"
        h1, h2, h3, h4 = (hat.roof_of(s) for s in (s1, a1, a2, sd))
    else:
        case = "Xi1"
        # mirrored datum: roles reversed
        x, y, z, v = v, z, y, x
        h1, h2, h3, h4 = (hat.roof_of(s) for s in (sd, a2, a1, s1))
    arcs = (h1, h1 + h4, h2, h3)
    l = x + y + z
    alpha = y + z + v
    beta1 = x
    beta2 = x + y
    lengths_check = psi_map(*phi_map(x, y, z, v))
    assert lengths_check == (l, alpha, beta1, beta2)
    return RotationSpecialFlow(
        l=l,
        alpha=alpha,
        beta1=beta1,
        beta2=beta2,
        arc_values=arcs,
        basis_spec=hat.basis_spec,
        case=case,
    )


def jump_vectors(flow: RotationSpecialFlow) -> tuple[QVector, QVector]:
    """(jump at beta1, jump at beta2) as exact symbolic vectors."""
    return flow.jump_at(flow.beta1), flow.jump_at(flow.beta2)


# ---------------------------------------------------------------------------
# atom analysis


@dataclass
class AtomAnalysis:
    status: str  # "ok" | "inconclusive"
    reason: Optional[str]
    rigidity_index: Optional[int]
    q: Optional[int]
    forward: Optional[AtomicMeasure]
    backward: Optional[AtomicMeasure]
    epsilon: Optional[Fraction]  # normalized mass of each tower atom
    transient_mass: Optional[Fraction]  # normalized mass of each transient atom
    method: str = "sweep"
    membership: dict = field(default_factory=dict)


def _tower_pair_intersection(
    t1_base: Fraction, t2_base: Fraction, delta: Fraction,
    alpha: Fraction, l: Fraction, q: int,
) -> Fraction:
    """Exact Leb of the intersection of two height-q backward towers with
    bases [t_base, t_base + delta).

    Rungs are [base - i alpha, + delta); overlapping rung pairs correspond
    to m = i - i' with ||gamma - m alpha|| < delta, gamma = t1 - t2.
    """
    gamma = (t1_base - t2_base) % l
    total = Fraction(0)
    seen = set()
    for sign in (1, -1):
        target_lo = (sign * gamma - delta) % l
        target_hi = (sign * gamma + delta) % l
        hits = rotation_hits_interval(
            alpha, l, target_lo, target_hi, q, step_sign=1
        )
        if len(hits) >= 512:
            raise PipelineError("unexpectedly many tower overlaps")
        for m in hits:
            mm = m if sign == 1 else -m
            if mm in seen:
                continue
            seen.add(mm)
            off = (gamma - mm * alpha) % l
            dist = min(off, l - off)
            if dist < delta:
                total += (q - abs(mm)) * (delta - dist)
    return total


def _closed_form_tables(
    flow: RotationSpecialFlow, cf: ContinuedFraction, n: int
) -> tuple[AtomicMeasure, AtomicMeasure]:
    """Exact forward/backward tables from the tower structure, O(polylog).

    Valid only after verifying that the four towers are pairwise disjoint
    except for the (0, l-alpha) pair, and that each tower's rungs are
    disjoint; both are checked exactly here.
    """
    q = cf.denominator(n)
    delta = cf.norm(q)
    l, alpha = flow.l, flow.alpha
    f = flow.roof_step_function()
    jumps = dict(f.jumps())
    bases = flow.discontinuities()
    for b in bases:
        t = Tower(l, alpha, b, b + delta, q, sign=-1)
        if not t.rungs_selfdisjoint():
            raise PipelineError("tower rungs unexpectedly overlap")
    inter = {}
    for i, j in itertools.combinations(range(4), 2):
        inter[(i, j)] = _tower_pair_intersection(
            bases[i], bases[j], delta, alpha, l, q
        )
    expected_zero = [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    for key in expected_zero:
        if inter[key] != 0:
            raise PipelineError(
                f"towers {key} unexpectedly intersect; closed form invalid"
            )
    m12 = inter[(0, 1)]
    qd = q * delta
    masses = {
        frozenset({0}): qd - m12,
        frozenset({1}): qd - m12,
        frozenset({0, 1}): m12,
        frozenset({2}): qd,
        frozenset({3}): qd,
    }
    table: dict = {}
    assigned = Fraction(0)
    zero = flow.arc_values[0] * 0
    for cell, mass in masses.items():
        if mass == 0:
            continue
        val = zero
        for idx in cell:
            val = val - jumps[bases[idx]]
        table[val] = table.get(val, Fraction(0)) + mass
        assigned += mass
    table[zero] = table.get(zero, Fraction(0)) + (l - assigned)
    forward = AtomicMeasure.from_dict(table, l)
    backward = forward.negated()
    return forward, backward


def atom_analysis(
    flow: RotationSpecialFlow,
    cf_depth: Optional[int] = None,
    rigidity_index: Optional[int] = None,
    sweep_cap: int = 400_000,
) -> AtomAnalysis:
    """Finite-scale forward/backward distributions of the double-tower
    Birkhoff difference f^(2q) - 2 f^(q) at a rigidity index.

    Membership of beta1 in V_n and beta2 in W_n is verified exactly; when
    it fails the result is inconclusive, not an error.  Small q uses the
    materialized sweep with the backward table computed independently from
    the reverse Birkhoff sums; large q uses the exact tower closed form
    (with all disjointness requirements verified, and the backward table
    given by the measure-preserving reflection identity).
    """
    cf = flow.continued_fraction()
    if cf_depth is not None and cf.depth < cf_depth:
        return AtomAnalysis(
            status="inconclusive",
            reason=f"alpha/l has CF depth {cf.depth} < requested {cf_depth}",
            rigidity_index=None, q=None, forward=None, backward=None,
            epsilon=None, transient_mass=None,
        )
    indices = rigidity_indices(cf)
    if rigidity_index is None:
        if not indices:
            return AtomAnalysis(
                status="inconclusive", reason="no rigidity index in the window",
                rigidity_index=None, q=None, forward=None, backward=None,
                epsilon=None, transient_mass=None,
            )
        rigidity_index = indices[0]
    elif rigidity_index not in indices:
        return AtomAnalysis(
            status="inconclusive",
            reason=f"index {rigidity_index} is not a rigidity index",
            rigidity_index=rigidity_index, q=None, forward=None, backward=None,
            epsilon=None, transient_mass=None,
        )
    n = rigidity_index
    v_tower, w_tower = towers_VW(cf, n)
    in_v = v_tower.contains(flow.beta1)
    in_w = w_tower.contains(flow.beta2)
    membership = {
        "beta1_in_V": in_v,
        "beta2_in_W": in_w,
        "beta1_rung": v_tower.rung_of(flow.beta1),
        "beta2_rung": w_tower.rung_of(flow.beta2),
    }
    if not (in_v and in_w):
        return AtomAnalysis(
            status="inconclusive",
            reason="beta1 not in V_n or beta2 not in W_n at this index",
            rigidity_index=n, q=cf.denominator(n), forward=None, backward=None,
            epsilon=None, transient_mass=None, membership=membership,
        )
    q = cf.denominator(n)
    delta = cf.norm(q)
    # rescale to an integer circle so breakpoint arithmetic avoids huge
    # rational reductions; normalized masses are unchanged
    scale = 1
    for x in (flow.l, flow.alpha, flow.beta1, flow.beta2):
        scale = scale * x.denominator // gcd(scale, x.denominator)
    sflow = RotationSpecialFlow(
        l=flow.l * scale, alpha=flow.alpha * scale,
        beta1=flow.beta1 * scale, beta2=flow.beta2 * scale,
        arc_values=flow.arc_values, basis_spec=flow.basis_spec, case=flow.case,
    )
    scf = sflow.continued_fraction()
    f = sflow.roof_step_function()
    if 8 * q <= sweep_cap:
        method = "sweep"
        g = tower_difference(f, scf, n)
        forward_s = distribution(g)
        # Backward side: the inverse-flow criterion measure is the negated
        # pushforward of (f^(-2q) + 2b, f^(-q) + b), so the scalar object is
        # sum_{i=1..q} (f o T^(-q-i) - f o T^(-i)) = -(f^(-2q) - 2 f^(-q)),
        # computed here independently of the forward table.
        alpha_s = scf.alpha()
        g_back = birkhoff_combination(f, alpha_s, [(-2 * q, 1), (-q, -2)])
        backward_s = distribution(-g_back)
    else:
        method = "closed-form"
        forward_s, backward_s = _closed_form_tables(sflow, scf, n)

    def unscale(meas: AtomicMeasure) -> AtomicMeasure:
        if scale == 1:
            return meas
        return AtomicMeasure(
            tuple((loc, Fraction(m, scale)) for loc, m in meas.atoms), flow.l
        )

    return AtomAnalysis(
        status="ok", reason=None, rigidity_index=n, q=q,
        forward=unscale(forward_s), backward=unscale(backward_s),
        epsilon=Fraction(q * delta, 1) / flow.l,
        transient_mass=delta / flow.l,
        method=method, membership=membership,
    )


# ---------------------------------------------------------------------------
# verdicts


@dataclass
class VerdictReport:
    perm: LabeledPermutation
    witness: Optional[tuple[str, str, str, str]]
    flow: Optional[RotationSpecialFlow]
    jumps: Optional[tuple[QVector, QVector]]
    jumps_independent: Optional[bool]
    analysis: Optional[AtomAnalysis]
    weak_mixing: str = "inconclusive"  # satisfied | not satisfied | inconclusive
    disjointness: str = "inconclusive"
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        bv = _parse_basis(self.flow.basis_spec, 256) if self.flow else None

        def numq(v: QVector):
            return float(evaluate_numeric(v, bv))

        def table(meas: AtomicMeasure):
            return [
                {
                    "location": loc.to_json() if isinstance(loc, QVector) else str(loc),
                    "location_numeric": numq(loc) if isinstance(loc, QVector) else float(loc),
                    "mass": str(m),
                    "mass_normalized": float(Fraction(m) / meas.total),
                }
                for loc, m in meas.atoms
            ]

        out = {
            "perm": self.perm.to_json(),
            "witness": list(self.witness) if self.witness else None,
            "weak_mixing_criterion": self.weak_mixing,
            "disjointness_criterion": self.disjointness,
            "notes": list(self.notes),
        }
        if self.flow is not None:
            out["flow"] = {
                "case": self.flow.case,
                "l": str(self.flow.l),
                "alpha": str(self.flow.alpha),
                "beta1": str(self.flow.beta1),
                "beta2": str(self.flow.beta2),
                "arc_values": [v.to_json() for v in self.flow.arc_values],
                "arc_values_numeric": [numq(v) for v in self.flow.arc_values],
            }
        if self.jumps is not None:
            out["jumps"] = {
                "d_beta1": self.jumps[0].to_json(),
                "d_beta2": self.jumps[1].to_json(),
                "d_beta1_numeric": numq(self.jumps[0]),
                "d_beta2_numeric": numq(self.jumps[1]),
                "rationally_independent": self.jumps_independent,
            }
        if self.analysis is not None:
            a = self.analysis
            out["analysis"] = {
                "status": a.status,
                "reason": a.reason,
                "method": a.method,
                "rigidity_index": a.rigidity_index,
                "q": a.q,
                "epsilon": str(a.epsilon) if a.epsilon is not None else None,
                "transient_mass": (
                    str(a.transient_mass) if a.transient_mass is not None else None
                ),
                "membership": a.membership,
                "forward_atoms": table(a.forward) if a.forward else None,
                "backward_atoms": table(a.backward) if a.backward else None,
            }
        return out


def verdicts(
    flow: RotationSpecialFlow,
    jumps: tuple[QVector, QVector],
    analysis: AtomAnalysis,
) -> tuple[str, str, list]:
    """Weak-mixing and disjointness sufficient-condition verdicts.

    Weak mixing: satisfied iff 0 and two exactly rationally independent
    jump values are among the detected forward atoms.  Disjointness:
    satisfied iff the forward and backward atom location sets differ as
    exact symbolic sets.
    """
    notes = []
    if analysis.status != "ok":
        return "inconclusive", "inconclusive", [f"analysis: {analysis.reason}"]
    d1, d2 = jumps
    independent = rationally_independent(d1, d2)
    locations = analysis.forward.locations()
    zero = d1 * 0
    has_zero = any(loc == zero for loc in locations)
    has_d1 = any(loc == -d1 for loc in locations)
    has_d2 = any(loc == -d2 for loc in locations)
    if independent and has_zero and has_d1 and has_d2:
        weak = "satisfied"
    elif not independent:
        weak = "inconclusive"
        notes.append("jump values are rationally dependent; criterion not applicable")
    else:
        weak = "not satisfied"
        notes.append("expected atoms not detected")
    fwd = set(map(_loc_key, analysis.forward.locations()))
    bwd = set(map(_loc_key, analysis.backward.locations()))
    if fwd != bwd:
        disj = "satisfied"
    else:
        disj = "not satisfied"
        notes.append("forward and backward atom sets coincide")
    return weak, disj, notes


def _loc_key(loc):
    return tuple(loc.coeffs) if isinstance(loc, QVector) else loc


# ---------------------------------------------------------------------------
# tau construction and lambda-hat search (deterministic)


def construct_independent_tau(
    p: LabeledPermutation,
    zero_symbols: Optional[set] = None,
    scale_denominator: int = 1000,
) -> tuple[QVector, ...]:
    """A Theta-valid, rationally independent tau over the default basis.

    The rational part r is a small integer vector with strict partial-sum
    signs and matching signs on row-adjacent zero-length symbols;
    independence comes from a 1/scale perturbation along each symbol's own
    basis direction.  ``zero_symbols`` names the symbols that will carry
    zero length (default: none).
    """
    d = p.d
    om = translation_matrix(p)
    base = [sum(row) for row in om]  # Omega * (1,...,1): always Theta-valid
    zero_idx = (
        {p.alphabet.index(s) for s in zero_symbols} if zero_symbols else set()
    )
    adjacency_pairs = []
    for pi in (p.pi0, p.pi1):
        for k in range(1, d):
            i, j = pi.index(k), pi.index(k + 1)
            if i in zero_idx and j in zero_idx:
                adjacency_pairs.append((i, j))

    def prefix_ok(r):
        for pi, want in ((p.pi0, 1), (p.pi1, -1)):
            s = 0
            for k in range(1, d):
                s += r[pi.index(k)]
                if want * s < 1:
                    return False
        return True

    def adjacency_ok(r):
        return all(r[i] * r[j] > 0 for i, j in adjacency_pairs)

    free = sorted(zero_idx)
    option_lists = []
    for i in free:
        opts = [base[i]] if base[i] != 0 else []
        opts += [1, -1, 2, -2]
        option_lists.append(opts)
    chosen = None
    for combo in itertools.product(*option_lists) if free else [()]:
        r = list(base)
        for i, val in zip(free, combo):
            r[i] = val
        if prefix_ok(r) and adjacency_ok(r):
            chosen = tuple(r)
            break
    if chosen is None:
        raise PipelineError("could not construct a Theta-valid rational part")
    eps = Fraction(1, scale_denominator)
    tau = []
    for i in range(d):
        coeffs = [Fraction(0)] * d
        coeffs[0] = Fraction(chosen[i])
        coeffs[i] = coeffs[i] + eps
        tau.append(QVector(coeffs))
    if rank_over_Q(tau) != d:
        raise PipelineError("constructed tau unexpectedly dependent")
    return tuple(tau)


def default_lambda_hat(
    quotients: Sequence[int],
    l: Fraction = Fraction(1),
    rigidity_index: Optional[int] = None,
) -> tuple[tuple[Fraction, ...], dict]:
    """Deterministic lambda_hat whose induced flow has rotation number
    l*[0; quotients], with beta1 in V_n and beta2 in W_n at the chosen
    rigidity index and beta1 > l - alpha (the Xi0 region).

    Betas are midpoints of the first tower rungs that land in the
    admissible windows; the construction trace is returned for the report.
    """
    cf = ContinuedFraction(tuple(quotients), Fraction(l))
    indices = rigidity_indices(cf)
    if not indices:
        raise PipelineError("no rigidity index for the requested quotients")
    n = rigidity_index if rigidity_index is not None else indices[0]
    if n not in indices:
        raise PipelineError(f"{n} is not a rigidity index")
    alpha = cf.alpha()
    q = cf.denominator(n)
    v_tower, w_tower = towers_VW(cf, n)
    mid_v = (v_tower.lo + v_tower.hi) / 2
    mid_w = (w_tower.lo + w_tower.hi) / 2
    # rung i with mid + i alpha in (l - alpha, l)
    hits_v = rotation_hits_interval(
        alpha, l, (l - alpha - mid_v) % l, (l - mid_v) % l, q, cap=64
    )
    hits_v = [i for i in hits_v if (mid_v + i * alpha) % l > (l - alpha)]
    if not hits_v:
        raise PipelineError("no V-rung midpoint in the Xi0 window")
    i1 = hits_v[0]
    beta1 = (mid_v + i1 * alpha) % l
    hits_w = rotation_hits_interval(
        alpha, l, (beta1 - mid_w) % l, (l - mid_w) % l, q, cap=64
    )
    hits_w = [i for i in hits_w if (mid_w + i * alpha) % l > beta1]
    if not hits_w:
        raise PipelineError("no W-rung midpoint between beta1 and l")
    i2 = hits_w[0]
    beta2 = (mid_w + i2 * alpha) % l
    x = beta1
    y = beta2 - beta1
    z = l - beta2
    v = beta1 - (l - alpha)
    assert all(t > 0 for t in (x, y, z, v))
    trace = {
        "rigidity_index": n,
        "q": q,
        "v_rung": i1,
        "w_rung": i2,
        "beta1": str(beta1),
        "beta2": str(beta2),
        "grid": "midpoints of first admissible tower rungs",
    }
    return (x, y, z, v), trace


# ---------------------------------------------------------------------------
# end-to-end


def run_pipeline(
    p: LabeledPermutation,
    tau: Optional[Sequence[QVector]] = None,
    lam_hat: Optional[Sequence[Fraction]] = None,
    cf_quotients: Sequence[int] = (25,) * 40,
    rigidity_index: Optional[int] = None,
    sweep_cap: int = 400_000,
    tau_dependent_debug: bool = False,
) -> VerdictReport:
    """Full deterministic run; every stage validates its own preconditions."""
    notes = []
    if is_symmetric(p):
        raise PipelineError("permutation is symmetric; no acceptable symbols exist")
    deg, tag = is_degenerate(p)
    if deg:
        raise PipelineError(f"permutation is degenerate ({tag})")
    if not satisfies_pierost(p):
        raise PipelineError("permutation must satisfy sigma(1)=d, sigma(d)=1")
    witness = find_acceptable_symbols(p)
    if witness is None:
        raise PipelineError("no acceptable symbols found")
    a1, a2, g1, g2 = witness
    if tau is None:
        surviving = {p.symbol_at0(1), a1, a2, p.symbol_at0(p.d)}
        tau = construct_independent_tau(
            p, zero_symbols=set(p.alphabet) - surviving
        )
        notes.append("tau constructed deterministically (Omega*1 + 1/1000 basis tilt)")
    tau = list(tau)
    if tau_dependent_debug:
        # destroy independence on purpose: project tau onto its rational
        # part, so every jump value is rational and no independent pair
        # of atoms can exist
        dim = tau[0].dim
        tau = [QVector.constant(dim, t.coeffs[0]) for t in tau]
        notes.append("debug: tau projected to rank 1 (all jumps rational)")
    if lam_hat is None:
        lam_hat, trace = default_lambda_hat(cf_quotients, Fraction(1), rigidity_index)
        notes.append(f"lambda_hat search trace: {trace}")
    hat = reduce_to_hat(
        p, a1, a2, lam_hat, tau, require_independent=not tau_dependent_debug
    )
    flow = to_rotation_flow(hat)
    jumps = jump_vectors(flow)
    independent = rationally_independent(*jumps)
    analysis = atom_analysis(
        flow,
        cf_depth=len(cf_quotients),
        rigidity_index=rigidity_index,
        sweep_cap=sweep_cap,
    )
    weak, disj, vnotes = verdicts(flow, jumps, analysis)
    report = VerdictReport(
        perm=p,
        witness=witness,
        flow=flow,
        jumps=jumps,
        jumps_independent=independent,
        analysis=analysis,
        weak_mixing=weak,
        disjointness=disj,
        notes=notes + vnotes,
    )
    return report
