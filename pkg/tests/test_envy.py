import pytest
from hypothesis import given

from fixtures import F_PATH, I_CONFLICT, IDENTITY2, SWAP2
from stablefrac import envy
from stablefrac.envy import EnvyGraph, RotationKind
from stablefrac.errors import CycleEncountered, InvalidRotation
from stablefrac.fractional import utilities
from stablefrac.cmfp import mfp_pairs
from stablefrac.instance import Side
from stablefrac.integral import IntegralMatching, gale_shapley
from strategies import instances


def chain():
    return EnvyGraph(Side.MEN, ((1,), (2,), ()))


def test_build_examples():
    assert envy.build(I_CONFLICT, IDENTITY2, Side.WOMEN).edges() == [(0, 1), (1, 0)]
    assert envy.build(I_CONFLICT, IDENTITY2, Side.MEN).is_empty()


def test_first_choices_give_empty_graph():
    for side in Side:
        assert envy.build(I_CONFLICT, SWAP2, Side.WOMEN).is_empty()
        assert envy.build(I_CONFLICT, IDENTITY2, Side.MEN).is_empty()


def test_find_cycle_examples():
    assert envy.find_cycle(envy.build(I_CONFLICT, IDENTITY2, Side.WOMEN)) == [0, 1]
    assert envy.find_cycle(EnvyGraph(Side.MEN, ((), ()))) is None
    assert envy.find_cycle(chain()) is None


def test_path_to_sink_examples():
    assert envy.path_to_sink(chain(), 0) == [0, 1, 2]
    assert envy.path_to_sink(chain(), 2) == [2]
    with pytest.raises(CycleEncountered):
        envy.path_to_sink(EnvyGraph(Side.MEN, ((1,), (0,))), 0)


def test_f_path_first_men_path_ends_at_top_choice():
    base = gale_shapley(F_PATH, Side.MEN)
    g_w = envy.build(F_PATH, base, Side.WOMEN)
    g_m = envy.build(F_PATH, base, Side.MEN)
    assert envy.find_cycle(g_w) is None and envy.find_cycle(g_m) is None
    start = base.partner(Side.WOMEN, g_w.sinks()[0])
    sink = envy.path_to_sink(g_m, start)[-1]
    assert base.pairing[sink] == max(range(3), key=F_PATH.U[sink].__getitem__)


def test_rotate_examples():
    rot = envy.rotate(I_CONFLICT, IDENTITY2, [0, 1], RotationKind.CYCLE, Side.WOMEN)
    assert rot.produced == SWAP2
    assert envy.rotate(I_CONFLICT, IDENTITY2, [], RotationKind.CYCLE, Side.MEN).produced == IDENTITY2
    with pytest.raises(InvalidRotation):
        envy.rotate(I_CONFLICT, IDENTITY2, [0, 1], RotationKind.CYCLE, Side.MEN)


def test_path_rotations_shift_partners():
    from stablefrac.solver import solve

    trace = solve(F_PATH)
    assert trace.rotations
    for rot in trace.rotations:
        assert rot.kind is RotationKind.PATH
        old = trace.base.pairing if rot.side is Side.MEN else trace.base.husbands()
        new = rot.produced.pairing if rot.side is Side.MEN else rot.produced.husbands()
        nodes = rot.nodes
        for t, a in enumerate(nodes):
            assert new[a] == old[nodes[(t + 1) % len(nodes)]]
        assert all(new[a] == old[a] for a in range(3) if a not in nodes)


@given(instances(max_n=6))
def test_edge_soundness_and_cycle_monotone(inst):
    base = gale_shapley(inst, Side.MEN)
    prof = utilities(inst, base.to_fractional())
    for side in Side:
        g = envy.build(inst, base, side)
        own = prof.men_utils if side is Side.MEN else prof.women_utils
        partner = base.pairing if side is Side.MEN else base.husbands()
        for a in range(inst.n):
            for b in range(inst.n):
                val = inst.U[a][partner[b]] if side is Side.MEN else inst.V[partner[b]][a]
                assert (b in g.adjacency[a]) == (a != b and val > own[a])
        cycle = envy.find_cycle(g)
        if cycle:
            new = envy.rotate(inst, base, cycle, RotationKind.CYCLE, side).produced
            after = utilities(inst, new.to_fractional())
            after = after.men_utils if side is Side.MEN else after.women_utils
            for a in range(inst.n):
                assert after[a] > own[a] if a in cycle else after[a] == own[a]
    if not mfp_pairs(inst):
        assert not all(envy.build(inst, base, s).is_empty() for s in Side)
