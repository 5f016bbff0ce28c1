import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from fixtures import F_MANIP, F_MANIP_STABLE, I_CONFLICT, I_POP, I_SOUL
from stablefrac.errors import FamilyTooLarge
from stablefrac.fractional import is_stable
from stablefrac.ic_audit import (
    AuditConfig,
    Evaluator,
    FamilyKind,
    MisreportFamily,
    Verdict,
    audit_coalition,
    audit_ic,
    best_response,
    true_utility,
)
from stablefrac.instance import AgentId, Side, generate
from stablefrac.solver import Mechanism, get_mechanism, mechanisms

M0, M1, M2 = (AgentId(Side.MEN, i) for i in range(3))
W0, W1, W2 = (AgentId(Side.WOMEN, i) for i in range(3))
PERM = MisreportFamily.permutations()


def test_family_counts_and_candidates():
    fam = MisreportFamily.grid([1, 2, 3], include_own=False)
    assert fam.count(I_POP, M0) == math.perm(3, 3)
    assert len(list(fam.candidates(I_POP, M0))) == 6
    comb = MisreportFamily.combined([1, 2, 3], include_own=False)
    rows = list(comb.candidates(I_POP, M0))
    assert rows[0] == I_POP.row(M0) and len(rows) == len(set(rows)) == 6
    assert MisreportFamily.grid().values(I_CONFLICT, M0) == tuple(map(Fraction, (1, 2, 3, 4)))
    assert FamilyKind(MisreportFamily.combined().kind.value) is FamilyKind.COMBINED


@pytest.mark.parametrize("mech", mechanisms(), ids=lambda m: m.name)
def test_soul_no_gain(mech):
    for fam in (PERM, MisreportFamily.combined()):
        rep = audit_ic(I_SOUL, mech, fam)
        assert rep.verdict is Verdict.NO_GAIN_FOUND
        assert all(d.at_top for d in rep.deviations)
    for co in itertools.combinations(I_SOUL.agents(), 2):
        assert audit_coalition(I_SOUL, co, mech, PERM).verdict is Verdict.NO_GAIN_FOUND


def test_pop_examples():
    envy = get_mechanism("envy-frac")
    assert audit_ic(I_POP, envy, PERM).verdict is Verdict.NO_GAIN_FOUND
    assert audit_coalition(I_POP, [M1, W2], envy, PERM).verdict is Verdict.NO_GAIN_FOUND


def test_manip_fixture_shape():
    from stablefrac.fractional import convex_combine
    from stablefrac.integral import enumerate_stable

    assert enumerate_stable(F_MANIP) == list(F_MANIP_STABLE)
    a, b = F_MANIP_STABLE
    for t in range(17):
        al = Fraction(t, 16)
        assert is_stable(F_MANIP, convex_combine([(al, a), (1 - al, b)])).stable


@pytest.mark.parametrize("mech", mechanisms(), ids=lambda m: m.name)
def test_manip_every_mechanism_manipulable(mech):
    rep = audit_ic(F_MANIP, mech, MisreportFamily.combined())
    assert rep.verdict is Verdict.MANIPULATION_FOUND
    for d in rep.gainers():
        assert d.gain > 0
        # re-derive the gain from scratch
        reported = F_MANIP.with_row(d.agent, d.report)
        assert true_utility(F_MANIP, d.agent, mech(reported)) == d.deviated_utility


def test_manip_coalition_recorded():
    mech = get_mechanism("gs-men")
    res = audit_coalition(F_MANIP, [M0, W0], mech, MisreportFamily.combined())
    # m0 already holds his top woman under men-proposing GS, so no strict joint gain
    assert res.verdict is Verdict.NO_GAIN_FOUND and res.evaluated == 0
    weak = audit_coalition(F_MANIP, [M0, W0], mech, MisreportFamily.combined(), AuditConfig(weak=True))
    assert weak.evaluated > 0
    assert all(d.gain >= 0 for d in weak.deviations)


def test_truth_anchors_utilities():
    # the mechanism sees the report; the evaluator scores with the truth
    seen = []

    def rule(inst):
        seen.append(inst)
        return get_mechanism("gs-men")(inst)

    mech = Mechanism("spy", rule)
    ev = Evaluator(mech, I_CONFLICT)
    report = (Fraction(100), Fraction(1))
    reported = I_CONFLICT.with_row(W0, report)
    got = ev.utility(reported, W0)
    assert seen[-1] is reported
    assert got == true_utility(I_CONFLICT, W0, rule(reported))
    assert got in {I_CONFLICT.V[0][0], I_CONFLICT.V[1][0]}


def test_family_too_large():
    cfg = AuditConfig(max_candidates=5)
    with pytest.raises(FamilyTooLarge):
        best_response(I_POP, M0, get_mechanism("gs-men"), PERM, cfg)
    with pytest.raises(FamilyTooLarge):
        audit_coalition(I_POP, [M0, M1, M2, W0], get_mechanism("gs-men"), PERM)


def test_evaluator_must_match_truth():
    ev = Evaluator(get_mechanism("gs-men"), I_CONFLICT)
    with pytest.raises(ValueError):
        audit_ic(I_SOUL, ev, PERM)


def test_report_json_has_exact_gains():
    rep = audit_ic(F_MANIP, get_mechanism("gs-men"), MisreportFamily.combined())
    data = rep.to_json()
    assert data["verdict"] == "manipulation-found"
    assert any(Fraction(d["gain"]) > 0 for d in data["deviations"])
    assert "family only" in data["note"]


def test_weak_flag_is_at_least_as_permissive():
    mech = get_mechanism("gs-men")
    strict = audit_coalition(F_MANIP, [M0, W0], mech, PERM)
    weak = audit_coalition(F_MANIP, [M0, W0], mech, PERM, AuditConfig(weak=True))
    if strict.verdict is Verdict.MANIPULATION_FOUND:
        assert weak.verdict is Verdict.MANIPULATION_FOUND


@settings(max_examples=15)
@given(st.integers(2, 4), st.integers(0, 10**5))
def test_cmfp_instances_resist_single_deviations(n, seed):
    inst = generate(n, seed, "cmfp")
    for mech in mechanisms():
        assert audit_ic(inst, mech, PERM).verdict is Verdict.NO_GAIN_FOUND
