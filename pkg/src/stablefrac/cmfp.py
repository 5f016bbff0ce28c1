"""Iterated mutual-first-preference extraction and the CMFP classification."""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .instance import MatchingInstance
from .integral import IntegralMatching


class Classification(enum.Enum):
    IN_CMFP = "in-cmfp"
    NOT_IN_CMFP = "not-in-cmfp"


@dataclass(frozen=True)
class CmfpResult:
    """Forced pairs (original indices), the residual instance and the round trace.

    ``residual`` agent ``k`` is original man ``men[k]`` / woman ``women[k]``.
    Rounds are numbered from 1.
    """

    forced: IntegralMatching
    residual: MatchingInstance
    men: tuple[int, ...]
    women: tuple[int, ...]
    rounds: tuple[tuple[int, int, int], ...]

    @property
    def is_perfect(self) -> bool:
        return self.forced.is_perfect

    def to_json(self) -> dict:
        return {
            "cmfp": self.is_perfect,
            "forced": self.forced.to_json(),
            "rounds": [list(r) for r in self.rounds],
            "residual_men": list(self.men),
            "residual_women": list(self.women),
        }


def mfp_pairs(instance: MatchingInstance) -> set[tuple[int, int]]:
    n = instance.n
    U, V = instance.U, instance.V
    out = set()
    for m in range(n):
        w = max(range(n), key=U[m].__getitem__)
        if max(range(n), key=lambda i: V[i][w]) == m:
            out.add((m, w))
    return out


def cmfp_matching(instance: MatchingInstance) -> CmfpResult:
    """Remove mutual-first pairs until none remain; lowest man index goes first."""
    n = instance.n
    men_prefs = instance.men_prefs()
    women_prefs = instance.women_prefs()
    alive_m = [True] * n
    alive_w = [True] * n
    ptr_m = [0] * n
    ptr_w = [0] * n

    def top_w(m: int) -> int:
        while not alive_w[men_prefs[m][ptr_m[m]]]:
            ptr_m[m] += 1
        return men_prefs[m][ptr_m[m]]

    def top_m(w: int) -> int:
        while not alive_m[women_prefs[w][ptr_w[w]]]:
            ptr_w[w] += 1
        return women_prefs[w][ptr_w[w]]

    pairs: list[tuple[int, int]] = []
    rounds: list[tuple[int, int, int]] = []
    while True:
        pick = None
        for m in range(n):
            if alive_m[m]:
                w = top_w(m)
                if top_m(w) == m:
                    pick = (m, w)
                    break
        if pick is None:
            break
        m, w = pick
        alive_m[m] = alive_w[w] = False
        pairs.append(pick)
        rounds.append((m, w, len(rounds) + 1))
    men = tuple(i for i in range(n) if alive_m[i])
    women = tuple(j for j in range(n) if alive_w[j])
    return CmfpResult(
        forced=IntegralMatching.from_pairs(n, pairs),
        residual=instance.sub_instance(men, women),
        men=men,
        women=women,
        rounds=tuple(rounds),
    )


def classify(instance: MatchingInstance) -> Classification:
    if cmfp_matching(instance).is_perfect:
        return Classification.IN_CMFP
    return Classification.NOT_IN_CMFP


def unique_sfm(instance: MatchingInstance):
    """``(True, matching)`` on CMFP instances, whose stable fractional matching is
    unique; otherwise ``(False, w)`` with ``w`` a stable matching that is not integral.

    Uniqueness can also hold outside CMFP; then no such ``w`` exists and the
    solver's ``WeightLpAnomaly`` propagates.
    """
    res = cmfp_matching(instance)
    if res.is_perfect:
        return True, res.forced.to_fractional()
    from .solver import solve

    return False, solve(instance).composed
