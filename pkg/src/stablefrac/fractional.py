"""Fractional matchings: utilities, the stability verifier and Birkhoff-von Neumann decomposition."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import (
    DimensionMismatch,
    NotDoublyStochastic,
    ParseError,
    WeightInvariantViolated,
    WeightsNotConvex,
)
from .instance import MatchingInstance, to_rational
from .integral import IntegralMatching

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class FractionalMatching:
    """``weights[i][j]`` is the weight on edge (man i, woman j)."""

    weights: tuple[tuple[Fraction, ...], ...]

    @property
    def n(self) -> int:
        return len(self.weights)

    @classmethod
    def from_lists(cls, rows) -> "FractionalMatching":
        return cls(tuple(tuple(to_rational(x) for x in row) for row in rows))

    @classmethod
    def zeros(cls, n: int) -> "FractionalMatching":
        return cls(tuple((ZERO,) * n for _ in range(n)))

    def row_sums(self) -> list[Fraction]:
        return [sum(row, ZERO) for row in self.weights]

    def col_sums(self) -> list[Fraction]:
        n = self.n
        return [sum((self.weights[i][j] for i in range(n)), ZERO) for j in range(n)]

    @property
    def is_perfect(self) -> bool:
        return all(s == ONE for s in self.row_sums()) and all(s == ONE for s in self.col_sums())

    @property
    def is_integral(self) -> bool:
        return all(x == ZERO or x == ONE for row in self.weights for x in row)

    def fractional_edges(self) -> list[tuple[int, int]]:
        """Edges whose weight lies strictly between 0 and 1."""
        return [
            (i, j)
            for i, row in enumerate(self.weights)
            for j, x in enumerate(row)
            if ZERO < x < ONE
        ]

    def to_json(self) -> list[list[str]]:
        return [[str(x) for x in row] for row in self.weights]


def matching_from_json(data) -> FractionalMatching:
    if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
        raise ParseError("fractional matching must be an n x n array")
    mu = FractionalMatching.from_lists(data)
    if any(len(row) != mu.n for row in mu.weights):
        raise ParseError("fractional matching must be square")
    return mu


def check_weights(mu: FractionalMatching, n: int | None = None) -> None:
    if n is not None and mu.n != n:
        raise DimensionMismatch(f"matching is {mu.n}x{mu.n}, expected {n}x{n}")
    if any(len(row) != mu.n for row in mu.weights):
        raise DimensionMismatch("weight matrix is not square")
    for i, row in enumerate(mu.weights):
        for j, x in enumerate(row):
            if not ZERO <= x <= ONE:
                raise WeightInvariantViolated(f"weight [{i}][{j}] = {x} outside [0, 1]")
    for i, s in enumerate(mu.row_sums()):
        if s > ONE:
            raise WeightInvariantViolated(f"man {i} has total weight {s} > 1")
    for j, s in enumerate(mu.col_sums()):
        if s > ONE:
            raise WeightInvariantViolated(f"woman {j} has total weight {s} > 1")


@dataclass(frozen=True)
class UtilityProfile:
    men_utils: tuple[Fraction, ...]
    women_utils: tuple[Fraction, ...]


def _utilities(instance: MatchingInstance, weights) -> UtilityProfile:
    n = instance.n
    U, V = instance.U, instance.V
    u = [ZERO] * n
    v = [ZERO] * n
    for i, row in enumerate(weights):
        for j, x in enumerate(row):
            if not x:
                continue
            if x == ONE:
                a, b = U[i][j], V[i][j]
            else:
                a, b = x * U[i][j], x * V[i][j]
            u[i] = a if u[i] is ZERO else u[i] + a
            v[j] = b if v[j] is ZERO else v[j] + b
    return UtilityProfile(tuple(u), tuple(v))


def utilities(instance: MatchingInstance, mu: FractionalMatching) -> UtilityProfile:
    check_weights(mu, instance.n)
    return _utilities(instance, mu.weights)


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    blocking: tuple[tuple[int, int], ...]

    def to_json(self) -> dict:
        return {"stable": self.stable, "blocking": [list(p) for p in self.blocking]}


def is_stable(instance: MatchingInstance, mu: FractionalMatching) -> StabilityReport:
    check_weights(mu, instance.n)
    return _stability(instance, mu.weights)


def _stability(instance: MatchingInstance, weights) -> StabilityReport:
    # callers vouch for the weights
    prof = _utilities(instance, weights)
    u, v = prof.men_utils, prof.women_utils
    U, V = instance.U, instance.V
    n = instance.n
    blocking = tuple(
        (m, w)
        for m in range(n)
        for w in range(n)
        if U[m][w] > u[m] and V[m][w] > v[w]
    )
    return StabilityReport(not blocking, blocking)


def convex_combine(
    components: Sequence[tuple[Fraction, IntegralMatching]], n: int | None = None
) -> FractionalMatching:
    if not components:
        raise WeightsNotConvex("empty combination")
    sizes = {mu.n for _, mu in components}
    if len(sizes) != 1 or (n is not None and sizes != {n}):
        raise DimensionMismatch(f"component sizes {sorted(sizes)} disagree")
    (n,) = sizes
    weights = [Fraction(a) for a, _ in components]
    if any(a < 0 for a in weights) or sum(weights, ZERO) != ONE:
        raise WeightsNotConvex(f"weights {weights} are not a convex combination")
    W = [[ZERO] * n for _ in range(n)]
    for a, mu in zip(weights, (mu for _, mu in components)):
        if not mu.is_perfect:
            raise DimensionMismatch("convex_combine needs perfect matchings")
        for m, w in mu.pairs():
            W[m][w] += a
    return FractionalMatching(tuple(map(tuple, W)))


def _perfect_matching(support: list[list[int]]) -> list[int] | None:
    """Any perfect matching of the support graph (Kuhn's augmenting paths)."""
    n = len(support)
    husband: list[int | None] = [None] * n

    def augment(m: int, seen: set[int]) -> bool:
        for w in support[m]:
            if w in seen:
                continue
            seen.add(w)
            if husband[w] is None or augment(husband[w], seen):
                husband[w] = m
                return True
        return False

    for m in range(n):
        if not augment(m, set()):
            return None
    wife = [0] * n
    for w, m in enumerate(husband):
        wife[m] = w
    return wife


def lex_min_perfect_matching(support: list[list[int]]) -> list[int] | None:
    """Lexicographically least perfect matching (by man 0's woman, then man 1's, ...)."""
    support = [sorted(s) for s in support]
    wife = _perfect_matching(support)
    if wife is None:
        return None
    n = len(support)
    husband = [0] * n
    for m, w in enumerate(wife):
        husband[w] = m
    fixed = [False] * n
    for i in range(n):
        for w in support[i]:
            if w == wife[i]:
                break
            if fixed[husband[w]]:
                continue
            path = _alternating_path(support, wife, husband, fixed, husband[w], w, wife[i], i)
            if path is not None:
                # men along the path take the next woman; i takes w
                for m, nw in path:
                    wife[m] = nw
                    husband[nw] = m
                wife[i] = w
                husband[w] = i
                break
        fixed[i] = True
    return wife


def _alternating_path(support, wife, husband, fixed, start, banned, target, owner):
    """Re-match ``start`` away from ``banned`` so that ``target`` becomes free for ``owner``."""
    parent: dict[int, tuple[int, int] | None] = {start: None}
    stack = [start]
    while stack:
        m = stack.pop()
        for x in support[m]:
            if x == banned:
                continue
            if x == target:
                path = [(m, x)]
                while parent[m] is not None:
                    pm, px = parent[m]
                    path.append((pm, px))
                    m = pm
                return path
            nm = husband[x]
            if fixed[nm] or nm == owner or nm in parent:
                continue
            parent[nm] = (m, x)
            stack.append(nm)
    return None


def bvn_decompose(mu: FractionalMatching) -> list[tuple[Fraction, IntegralMatching]]:
    """Birkhoff-von Neumann decomposition by bottleneck subtraction.

    Each step takes the lexicographically least perfect matching on the positive
    support and removes it with its smallest weight. Output is sorted by pairing.
    """
    n = mu.n
    if any(len(row) != n for row in mu.weights):
        raise NotDoublyStochastic("weight matrix is not square")
    if any(x < 0 for row in mu.weights for x in row) or not mu.is_perfect:
        raise NotDoublyStochastic("matrix is not doubly stochastic")
    R = [list(row) for row in mu.weights]
    out: list[tuple[Fraction, IntegralMatching]] = []
    remaining = ONE
    while remaining > 0:
        support = [[j for j in range(n) if R[i][j] > 0] for i in range(n)]
        wife = lex_min_perfect_matching(support)
        if wife is None:  # pragma: no cover - excluded by Birkhoff's theorem
            raise NotDoublyStochastic("support has no perfect matching")
        a = min(R[i][wife[i]] for i in range(n))
        for i in range(n):
            R[i][wife[i]] -= a
        remaining -= a
        out.append((a, IntegralMatching(tuple(wife))))
    out.sort(key=lambda c: c[1].pairing)
    return out
