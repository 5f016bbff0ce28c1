"""Integral matchings, deferred acceptance and blocking pairs."""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import BoundExceeded, InvalidMatching
from .instance import MatchingInstance, Side

ENUMERATE_BOUND = 8


_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class IntegralMatching:
    """``pairing[i]`` is the woman matched to man ``i``, or ``None``."""

    pairing: tuple[int | None, ...]

    def __post_init__(self):
        taken = [w for w in self.pairing if w is not None]
        if len(taken) != len(set(taken)):
            raise InvalidMatching(f"woman matched twice in {self.pairing}")

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "IntegralMatching":
        pairing: list[int | None] = [None] * n
        for m, w in pairs:
            if pairing[m] is not None:
                raise InvalidMatching(f"man {m} matched twice")
            pairing[m] = w
        return cls(tuple(pairing))

    @property
    def n(self) -> int:
        return len(self.pairing)

    @property
    def is_perfect(self) -> bool:
        return all(w is not None for w in self.pairing)

    def pairs(self) -> list[tuple[int, int]]:
        return [(m, w) for m, w in enumerate(self.pairing) if w is not None]

    def husbands(self) -> list[int | None]:
        out: list[int | None] = [None] * self.n
        for m, w in self.pairs():
            out[w] = m
        return out

    def partner(self, side: Side, index: int) -> int | None:
        if side is Side.MEN:
            return self.pairing[index]
        return self.husbands()[index]

    def to_json(self) -> list[list[int]]:
        return [[m, w] for m, w in self.pairs()]

    def to_fractional(self):
        from .fractional import FractionalMatching

        n = self.n
        W = [[_ZERO] * n for _ in range(n)]
        for m, w in self.pairs():
            W[m][w] = _ONE
        return FractionalMatching(tuple(map(tuple, W)))


def _deferred_acceptance(prefs: Sequence[Sequence[int]], receiver_prefs: Sequence[Sequence[int]]) -> list[int]:
    """Proposers walk down ``prefs``; receivers keep whoever ranks first in theirs."""
    # rank_of[r][p] = position of p in r's order; lower is better
    rank_of = [[0] * len(order) for order in receiver_prefs]
    for r, order in enumerate(receiver_prefs):
        for pos, p in enumerate(order):
            rank_of[r][p] = pos
    n = len(prefs)
    nxt = [0] * n
    held: list[int | None] = [None] * n
    free = list(range(n))
    while free:
        # lowest-index free proposer moves first
        p = heapq.heappop(free)
        r = prefs[p][nxt[p]]
        nxt[p] += 1
        cur = held[r]
        if cur is None:
            held[r] = p
        elif rank_of[r][p] < rank_of[r][cur]:
            held[r] = p
            heapq.heappush(free, cur)
        else:
            heapq.heappush(free, p)
    match = [0] * n
    for r, p in enumerate(held):
        match[p] = r
    return match


def gale_shapley(instance: MatchingInstance, proposers: Side = Side.MEN) -> IntegralMatching:
    """Proposer-optimal stable matching."""
    men, women = instance.preferences()
    if proposers is Side.MEN:
        match = _deferred_acceptance(men, women)
        return IntegralMatching(tuple(match))
    match = _deferred_acceptance(women, men)
    return IntegralMatching.from_pairs(instance.n, ((m, w) for w, m in enumerate(match)))


def blocking_pairs(instance: MatchingInstance, matching: IntegralMatching) -> set[tuple[int, int]]:
    """Pairs where both agents strictly prefer each other; unmatched agents hold 0."""
    n = instance.n
    if matching.n != n:
        raise InvalidMatching(f"matching has {matching.n} men, instance has {n}")
    U, V = instance.U, instance.V
    zero = Fraction(0)
    husband = matching.husbands()
    u = [zero if w is None else U[m][w] for m, w in enumerate(matching.pairing)]
    v = [zero if m is None else V[m][w] for w, m in enumerate(husband)]
    return {(m, w) for m in range(n) for w in range(n) if U[m][w] > u[m] and V[m][w] > v[w]}


def enumerate_stable(instance: MatchingInstance, bound: int = ENUMERATE_BOUND) -> list[IntegralMatching]:
    """All stable perfect matchings, lexicographic in ``pairing`` (brute force over n!)."""
    if instance.n > bound:
        raise BoundExceeded(f"n={instance.n} exceeds enumeration bound {bound}")
    out = []
    for perm in itertools.permutations(range(instance.n)):
        mu = IntegralMatching(perm)
        if not blocking_pairs(instance, mu):
            out.append(mu)
    return out


def matching_from_json(n: int, data) -> IntegralMatching:
    from .errors import ParseError

    try:
        pairs = [(int(m), int(w)) for m, w in data]
    except (TypeError, ValueError) as exc:
        raise ParseError("integral matching must be a list of [man, woman] pairs") from exc
    for m, w in pairs:
        if not (0 <= m < n and 0 <= w < n):
            raise ParseError(f"pair {[m, w]} out of range for n={n}")
    return IntegralMatching.from_pairs(n, pairs)
