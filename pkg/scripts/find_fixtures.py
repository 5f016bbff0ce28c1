"""Seeded searches for the frozen test fixtures.

Each search is deterministic; its result is pasted into tests/fixtures.py.
Re-run with ``python3 scripts/find_fixtures.py [name ...]`` to reproduce.
"""
from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
from fractions import Fraction

from stablefrac import envy
from stablefrac.cmfp import cmfp_matching
from stablefrac.errors import WeightLpAnomaly
from stablefrac.fractional import FractionalMatching, bvn_decompose, convex_combine, is_stable
from stablefrac.ic_audit import MisreportFamily, Verdict, audit_ic
from stablefrac.instance import MatchingInstance, Side, generate
from stablefrac.integral import IntegralMatching, blocking_pairs, enumerate_stable, gale_shapley
from stablefrac.solver import Branch, mechanisms, solve

ALPHA_GRID = [Fraction(i, 16) for i in range(17)]


def random_instance(n: int, top: int, rng: random.Random) -> MatchingInstance:
    """Strict integer valuations in 1..top; women's values are strict per column."""
    U = [rng.sample(range(1, top + 1), n) for _ in range(n)]
    cols = [rng.sample(range(1, top + 1), n) for _ in range(n)]
    V = [[cols[w][m] for w in range(n)] for m in range(n)]
    return MatchingInstance.from_lists(U, V)


def perfect(n: int) -> list[IntegralMatching]:
    return [IntegralMatching(p) for p in itertools.permutations(range(n))]


def mix(a: IntegralMatching, b: IntegralMatching, alpha: Fraction) -> FractionalMatching:
    return convex_combine([(alpha, a), (1 - alpha, b)], a.n)


def find_blocked_mix(seed: int = 1):
    """Two stable integral matchings whose alpha-mix is blocked for some alpha."""
    rng = random.Random(seed)
    for trial in itertools.count():
        inst = random_instance(3, 6, rng)
        stable = enumerate_stable(inst)
        for a, b in itertools.combinations(stable, 2):
            for alpha in ALPHA_GRID[1:-1]:
                rep = is_stable(inst, mix(a, b, alpha))
                if not rep.stable:
                    return {"instance": inst.to_json(), "a": a.to_json(), "b": b.to_json(),
                            "alpha": str(alpha), "blocking": [list(p) for p in rep.blocking], "trial": trial}


def find_frac_only(seed: int = 0):
    """Unique stable integral matching, yet the solver returns a non-integral stable matching."""
    for s in itertools.count(seed):
        inst = generate(3, s, "no-mfp")
        if len(enumerate_stable(inst)) != 1:
            continue
        try:
            trace = solve(inst)
        except WeightLpAnomaly:
            continue
        return {"instance": inst.to_json(), "seed": s, "matching": trace.composed.to_json()}


def find_unstable_support(seed: int = 3):
    """Unique stable integral matching and a stable mix 1/6, 1/3, 1/2 of three unstable ones."""
    rng = random.Random(seed)
    weights = (Fraction(1, 6), Fraction(1, 3), Fraction(1, 2))
    mats = perfect(3)
    for trial in itertools.count():
        inst = random_instance(3, 6, rng)
        if len(enumerate_stable(inst)) != 1:
            continue
        unstable = [mu for mu in mats if blocking_pairs(inst, mu)]
        for trio in itertools.permutations(unstable, 3):
            mu = convex_combine(list(zip(weights, trio)), 3)
            if not is_stable(inst, mu).stable:
                continue
            parts = bvn_decompose(mu)
            if sorted(a for a, _ in parts) == sorted(weights) and all(blocking_pairs(inst, m) for _, m in parts):
                return {"instance": inst.to_json(), "trial": trial,
                        "components": [[str(a), m.to_json()] for a, m in zip(weights, trio)]}


def find_path(seed: int = 0):
    """No mutual-first pairs and both envy graphs acyclic under men-proposing GS."""
    for n in (3, 4, 5):
        for s in range(seed, seed + 5000):
            inst = generate(n, s, "no-mfp")
            base = gale_shapley(inst, Side.MEN)
            if any(envy.find_cycle(envy.build(inst, base, side)) for side in Side):
                continue
            try:
                trace = solve(inst)
            except WeightLpAnomaly:
                continue
            if trace.branch is Branch.PATH and len(trace.rotations) >= 2:
                return {"instance": inst.to_json(), "n": n, "seed": s}
    return None


def find_manip(seed: int = 5):
    """n=3, exactly the two stable matchings {(0,1),(1,0),(2,2)} and {(0,0),(1,1),(2,2)},
    every mix on the 1/16 grid stable, and every mechanism manipulable under Combined."""
    rng = random.Random(seed)
    want = {(1, 0, 2), (0, 1, 2)}
    a, b = IntegralMatching((1, 0, 2)), IntegralMatching((0, 1, 2))
    for trial in itertools.count():
        inst = random_instance(3, 5, rng)
        if {m.pairing for m in enumerate_stable(inst)} != want:
            continue
        if not all(is_stable(inst, mix(a, b, al)).stable for al in ALPHA_GRID):
            continue
        fam = MisreportFamily.combined()
        if all(audit_ic(inst, mech, fam).verdict is Verdict.MANIPULATION_FOUND for mech in mechanisms()):
            return {"instance": inst.to_json(), "trial": trial}


def find_counter():
    """Smallest seeded non-CMFP instance whose only stable matching is integral."""
    for s in itertools.count():
        inst = generate(3, s, "uniform")
        if cmfp_matching(inst).is_perfect:
            continue
        try:
            solve(inst)
        except WeightLpAnomaly:
            return {"instance": inst.to_json(), "seed": s, "stable": [m.to_json() for m in enumerate_stable(inst)]}


SEARCHES = {
    "blocked-mix": find_blocked_mix,
    "frac-only": find_frac_only,
    "unstable-support": find_unstable_support,
    "path": find_path,
    "manip": find_manip,
    "counter": find_counter,
}


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("names", nargs="*", help=f"subset of {', '.join(SEARCHES)}")
    args = p.parse_args(argv)
    unknown = set(args.names) - set(SEARCHES)
    if unknown:
        p.error(f"unknown fixtures {sorted(unknown)}")
    for name in args.names or SEARCHES:
        found = SEARCHES[name]()
        print(json.dumps({name: found}))
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
