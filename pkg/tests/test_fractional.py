from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fixtures import F_UNSTABLE_SUPPORT_COMPONENTS, I_BLOCK, I_CONFLICT, IDENTITY2, SWAP2
from oracles import brute_blocking
from stablefrac.errors import DimensionMismatch, NotDoublyStochastic, WeightInvariantViolated, WeightsNotConvex
from stablefrac.fractional import (
    FractionalMatching,
    bvn_decompose,
    convex_combine,
    is_stable,
    utilities,
)
from stablefrac.instance import MatchingInstance, Side
from stablefrac.integral import IntegralMatching, blocking_pairs, gale_shapley
from strategies import doubly_stochastic, instances, permutations

HALF = Fraction(1, 2)


def half_half():
    return convex_combine([(HALF, IDENTITY2), (HALF, SWAP2)])


def test_utilities_half_half():
    prof = utilities(I_CONFLICT, half_half())
    assert prof.men_utils == prof.women_utils == (Fraction(3, 2),) * 2


def test_utilities_empty_matching():
    prof = utilities(I_CONFLICT, FractionalMatching.zeros(2))
    assert set(prof.men_utils) | set(prof.women_utils) == {0}


def test_stability_examples():
    assert is_stable(I_CONFLICT, half_half()).stable
    rep = is_stable(I_BLOCK, SWAP2.to_fractional())
    assert rep.blocking == ((0, 0),)


def test_weight_invariants():
    with pytest.raises(WeightInvariantViolated):
        utilities(I_CONFLICT, FractionalMatching.from_lists([[1, 1], [0, 0]]))
    with pytest.raises(WeightInvariantViolated):
        utilities(I_CONFLICT, FractionalMatching.from_lists([[2, 0], [0, 0]]))
    with pytest.raises(DimensionMismatch):
        utilities(I_CONFLICT, FractionalMatching.zeros(3))


def test_convex_combine_errors():
    with pytest.raises(WeightsNotConvex):
        convex_combine([(HALF, IDENTITY2)])
    with pytest.raises(WeightsNotConvex):
        convex_combine([])
    with pytest.raises(DimensionMismatch):
        convex_combine([(HALF, IDENTITY2), (HALF, IntegralMatching((0, 1, 2)))])


def test_bvn_examples():
    assert bvn_decompose(half_half()) == [(HALF, IDENTITY2), (HALF, SWAP2)]
    mu = IntegralMatching((2, 0, 1))
    assert bvn_decompose(mu.to_fractional()) == [(Fraction(1), mu)]
    mix = convex_combine(F_UNSTABLE_SUPPORT_COMPONENTS)
    out = bvn_decompose(mix)
    assert len(out) == 3 and convex_combine(out) == mix


def test_bvn_rejects_non_doubly_stochastic():
    with pytest.raises(NotDoublyStochastic):
        bvn_decompose(FractionalMatching.from_lists([[HALF, 0], [0, 1]]))


@given(doubly_stochastic(max_n=6))
def test_bvn_round_trip(mu):
    parts = bvn_decompose(mu)
    assert convex_combine(parts) == mu
    assert len(parts) <= mu.n ** 2 - 2 * mu.n + 2
    assert all(a > 0 for a, _ in parts)


@given(instances(max_n=5), st.data())
def test_stability_matches_oracle(inst, data):
    mu = data.draw(doubly_stochastic(min_n=inst.n, max_n=inst.n))
    assert set(is_stable(inst, mu).blocking) == brute_blocking(inst, mu.weights)


@given(instances(max_n=5), st.data())
def test_integral_agrees_with_blocking_pairs(inst, data):
    mu = data.draw(permutations(inst.n))
    assert set(is_stable(inst, mu.to_fractional()).blocking) == blocking_pairs(inst, mu)


@given(instances(max_n=5))
def test_gs_is_fractionally_stable(inst):
    assert is_stable(inst, gale_shapley(inst, Side.MEN).to_fractional()).stable


@given(instances(max_n=5), st.data(), st.integers(1, 9), st.integers(1, 9))
def test_scaling_one_man_row_preserves_his_blocking_pairs(inst, data, p, q):
    mu = data.draw(doubly_stochastic(min_n=inst.n, max_n=inst.n))
    m = data.draw(st.integers(0, inst.n - 1))
    c = Fraction(p, q)
    U = [list(r) for r in inst.U]
    U[m] = [c * x for x in U[m]]
    scaled = MatchingInstance.from_lists(U, inst.V)
    mine = lambda rep: {pw for pw in rep.blocking if pw[0] == m}  # noqa: E731
    assert mine(is_stable(inst, mu)) == mine(is_stable(scaled, mu))
