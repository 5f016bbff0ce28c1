import pytest
from hypothesis import given

from fixtures import I_BLOCK, I_CONFLICT, I_SOUL, IDENTITY2, SWAP2
from oracles import all_perfect, brute_blocking
from stablefrac.errors import BoundExceeded, InvalidMatching
from stablefrac.instance import Side, generate
from stablefrac.integral import IntegralMatching, blocking_pairs, enumerate_stable, gale_shapley
from strategies import instances


def test_gs_conflict_both_sides():
    assert gale_shapley(I_CONFLICT, Side.MEN) == IDENTITY2
    assert gale_shapley(I_CONFLICT, Side.WOMEN) == SWAP2


def test_gs_soul_either_side():
    assert gale_shapley(I_SOUL, Side.MEN) == gale_shapley(I_SOUL, Side.WOMEN) == IDENTITY2


def test_blocking_examples():
    assert blocking_pairs(I_CONFLICT, IDENTITY2) == set()
    assert blocking_pairs(I_BLOCK, SWAP2) == {(0, 0)}


def test_matching_must_be_injective():
    with pytest.raises(InvalidMatching):
        IntegralMatching((0, 0))


def test_enumerate_examples():
    assert enumerate_stable(I_CONFLICT) == [IDENTITY2, SWAP2]
    assert enumerate_stable(I_SOUL) == [IDENTITY2]
    assert enumerate_stable(I_BLOCK) == [IDENTITY2]


def test_enumerate_bound():
    with pytest.raises(BoundExceeded):
        enumerate_stable(generate(9, 0))


def test_partial_matching_unmatched_value_zero():
    mu = IntegralMatching((0, None))
    assert blocking_pairs(I_SOUL, mu) == {(1, 1)}


@given(instances(max_n=6))
def test_gs_stable_and_proposer_optimal(inst):
    stable = enumerate_stable(inst)
    assert stable
    for side in Side:
        mu = gale_shapley(inst, side)
        assert not blocking_pairs(inst, mu)
        assert mu in stable
    men = gale_shapley(inst, Side.MEN)
    women = gale_shapley(inst, Side.WOMEN)
    for other in stable:
        for m in range(inst.n):
            assert inst.U[m][men.pairing[m]] >= inst.U[m][other.pairing[m]]
        hm, ho = women.husbands(), other.husbands()
        for w in range(inst.n):
            assert inst.V[hm[w]][w] >= inst.V[ho[w]][w]


@given(instances(max_n=5))
def test_enumerate_matches_brute_force(inst):
    want = [mu for mu in all_perfect(inst.n) if not brute_blocking(inst, mu.to_fractional().weights)]
    assert enumerate_stable(inst) == sorted(want, key=lambda m: m.pairing)
