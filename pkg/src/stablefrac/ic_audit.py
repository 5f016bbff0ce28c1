"""Brute-force manipulation audits: best responses and coalition deviations over finite report families.

An audit holds every agent but the deviators truthful, runs a mechanism on each
reported instance and scores the outcome with the deviators' TRUE valuations.
A "no gain" verdict is a certificate relative to the searched family only.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import FamilyTooLarge
from .fractional import FractionalMatching, _utilities
from .instance import AgentId, MatchingInstance, Side, format_rational, preference_order
from .solver import Mechanism

ZERO = Fraction(0)

DEFAULT_MAX_CANDIDATES = 10**6
DEFAULT_MAX_COALITION = 3


class FamilyKind(enum.Enum):
    ROW_PERMUTATIONS = "perm"
    VALUE_GRID = "grid"
    COMBINED = "combined"


class Verdict(enum.Enum):
    NO_GAIN_FOUND = "no-gain-found"
    MANIPULATION_FOUND = "manipulation-found"


@dataclass(frozen=True)
class MisreportFamily:
    """Finite set of reports an agent may submit in place of its true valuations.

    ``grid_values=None`` means the integers ``1..2n``; ``include_own`` adds the
    agent's true values to the grid. ``COMBINED`` is the union of both families.
    """

    kind: FamilyKind
    grid_values: tuple[Fraction, ...] | None = None
    include_own: bool = True

    @classmethod
    def permutations(cls) -> "MisreportFamily":
        return cls(FamilyKind.ROW_PERMUTATIONS)

    @classmethod
    def grid(cls, values: Sequence | None = None, include_own: bool = True) -> "MisreportFamily":
        vals = None if values is None else tuple(sorted({Fraction(v) for v in values}))
        return cls(FamilyKind.VALUE_GRID, vals, include_own)

    @classmethod
    def combined(cls, values: Sequence | None = None, include_own: bool = True) -> "MisreportFamily":
        vals = None if values is None else tuple(sorted({Fraction(v) for v in values}))
        return cls(FamilyKind.COMBINED, vals, include_own)

    @property
    def description(self) -> str:
        if self.kind is FamilyKind.ROW_PERMUTATIONS:
            return "all permutations of the true valuation row"
        vals = "1..2n" if self.grid_values is None else ",".join(format_rational(v) for v in self.grid_values)
        own = " plus own values" if self.include_own else ""
        what = f"strict rows over {{{vals}}}{own}"
        if self.kind is FamilyKind.COMBINED:
            return f"row permutations and {what}"
        return what

    def values(self, instance: MatchingInstance, agent: AgentId) -> tuple[Fraction, ...]:
        vals = set(range(1, 2 * instance.n + 1)) if self.grid_values is None else set(self.grid_values)
        if self.include_own:
            vals |= set(instance.row(agent))
        return tuple(sorted(Fraction(v) for v in vals))

    def count(self, instance: MatchingInstance, agent: AgentId) -> int:
        """Upper bound on the number of candidates (exact unless the families overlap)."""
        n = instance.n
        total = 0
        if self.kind in (FamilyKind.ROW_PERMUTATIONS, FamilyKind.COMBINED):
            total += math.factorial(n)
        if self.kind in (FamilyKind.VALUE_GRID, FamilyKind.COMBINED):
            total += math.perm(len(self.values(instance, agent)), n)
        return total

    def candidates(self, instance: MatchingInstance, agent: AgentId) -> Iterator[tuple[Fraction, ...]]:
        """Distinct strict reports, true row first when it belongs to the family."""
        n = instance.n
        seen: set[tuple[Fraction, ...]] = set()
        if self.kind in (FamilyKind.ROW_PERMUTATIONS, FamilyKind.COMBINED):
            for row in itertools.permutations(instance.row(agent)):
                if row not in seen:
                    seen.add(row)
                    yield row
        if self.kind in (FamilyKind.VALUE_GRID, FamilyKind.COMBINED):
            for row in itertools.permutations(self.values(instance, agent), n):
                if row not in seen:
                    seen.add(row)
                    yield row


@dataclass(frozen=True)
class AuditConfig:
    max_candidates: int = DEFAULT_MAX_CANDIDATES
    max_coalition: int = DEFAULT_MAX_COALITION
    # coalition deviations count when nobody loses and somebody gains
    weak: bool = False


@dataclass(frozen=True)
class Deviation:
    agent: AgentId
    report: tuple[Fraction, ...]
    truthful_utility: Fraction
    deviated_utility: Fraction
    # True when the search was skipped because the agent already holds its top value
    at_top: bool = False

    @property
    def gain(self) -> Fraction:
        return self.deviated_utility - self.truthful_utility

    def to_json(self) -> dict:
        return {
            "agent": str(self.agent),
            "report": [format_rational(x) for x in self.report],
            "truthful_utility": str(self.truthful_utility),
            "deviated_utility": str(self.deviated_utility),
            "gain": str(self.gain),
            "at_top": self.at_top,
        }


@dataclass(frozen=True)
class CoalitionResult:
    members: tuple[AgentId, ...]
    verdict: Verdict
    # best qualifying joint deviation, one entry per member; empty on NoGainFound
    deviations: tuple[Deviation, ...] = ()
    evaluated: int = 0

    def to_json(self) -> dict:
        return {
            "coalition": [str(a) for a in self.members],
            "verdict": self.verdict.value,
            "joint_deviation": [d.to_json() for d in self.deviations],
            "evaluated": self.evaluated,
        }


@dataclass(frozen=True)
class AuditReport:
    mechanism: str
    family: MisreportFamily
    deviations: tuple[Deviation, ...]
    coalitions: tuple[CoalitionResult, ...] = ()

    @property
    def verdict(self) -> Verdict:
        if any(d.gain > 0 for d in self.deviations):
            return Verdict.MANIPULATION_FOUND
        if any(c.verdict is Verdict.MANIPULATION_FOUND for c in self.coalitions):
            return Verdict.MANIPULATION_FOUND
        return Verdict.NO_GAIN_FOUND

    def gainers(self) -> list[Deviation]:
        return [d for d in self.deviations if d.gain > 0]

    def to_json(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "family": {"kind": self.family.kind.value, "description": self.family.description},
            "verdict": self.verdict.value,
            "deviations": [d.to_json() for d in self.deviations],
            "coalitions": [c.to_json() for c in self.coalitions],
            "note": "exhaustive over the listed family only, not over all cardinal reports",
        }


@dataclass
class Evaluator:
    """Memoised mechanism calls, scored against the true instance.

    The cache is keyed by ``mechanism.cache_key`` and stores the outcome together
    with every agent's TRUE utility under it; the mechanism itself only ever sees
    the reported instance.
    """

    mechanism: Mechanism
    truth: MatchingInstance
    cache: dict = field(default_factory=dict)
    calls: int = 0

    def _entry(self, reported: MatchingInstance):
        self.calls += 1
        k = self.mechanism.cache_key(reported)
        hit = self.cache.get(k)
        if hit is None:
            mu = self.mechanism(reported)
            prof = _utilities(self.truth, mu.weights)
            hit = self.cache[k] = (mu, prof.men_utils, prof.women_utils)
        return hit

    def outcome(self, reported: MatchingInstance) -> FractionalMatching:
        return self._entry(reported)[0]

    def utilities(self, reported: MatchingInstance, agents: Sequence[AgentId]) -> list[Fraction]:
        _, u, v = self._entry(reported)
        return [u[a.index] if a.side is Side.MEN else v[a.index] for a in agents]

    def utility(self, reported: MatchingInstance, agent: AgentId) -> Fraction:
        _, u, v = self._entry(reported)
        return u[agent.index] if agent.side is Side.MEN else v[agent.index]


def true_utility(instance: MatchingInstance, agent: AgentId, mu: FractionalMatching) -> Fraction:
    """``agent``'s utility under its true valuations in ``instance``."""
    prof = _utilities(instance, mu.weights)
    return prof.men_utils[agent.index] if agent.side is Side.MEN else prof.women_utils[agent.index]


def _evaluator(instance: MatchingInstance, mechanism: Mechanism | Evaluator) -> Evaluator:
    if isinstance(mechanism, Evaluator):
        if mechanism.truth != instance:
            raise ValueError("evaluator was built for a different true instance")
        return mechanism
    return Evaluator(mechanism, instance)


def _reports(instance: MatchingInstance, agent: AgentId, family: MisreportFamily, ordinal: bool):
    """Candidates of ``family``; for an ordinal mechanism, one per preference order."""
    if not ordinal:
        yield from family.candidates(instance, agent)
        return
    seen = set()
    for row in family.candidates(instance, agent):
        order = tuple(preference_order(row))
        if order not in seen:
            seen.add(order)
            yield row


def _at_top(instance: MatchingInstance, agent: AgentId, utility: Fraction) -> bool:
    # utilities are weighted averages of values, so nothing beats the top value
    return utility >= max(instance.row(agent))


def best_response(
    instance: MatchingInstance,
    agent: AgentId,
    mechanism: Mechanism | Evaluator,
    family: MisreportFamily,
    config: AuditConfig = AuditConfig(),
) -> Deviation:
    """Report in ``family`` maximising the agent's true utility, others truthful.

    Ties keep the earliest candidate, so a truthful row in the family wins ties.
    """
    count = family.count(instance, agent)
    if count > config.max_candidates:
        raise FamilyTooLarge(f"{count} candidate reports for {agent} exceed {config.max_candidates}")
    ev = _evaluator(instance, mechanism)
    truthful = ev.utility(instance, agent)
    if _at_top(instance, agent, truthful):
        return Deviation(agent, instance.row(agent), truthful, truthful, at_top=True)
    best: Deviation | None = None
    for row in _reports(instance, agent, family, ev.mechanism.ordinal):
        got = ev.utility(instance.with_row(agent, row), agent)
        if best is None or got > best.deviated_utility:
            best = Deviation(agent, row, truthful, got)
    assert best is not None
    return best


def audit_ic(
    instance: MatchingInstance,
    mechanism: Mechanism | Evaluator,
    family: MisreportFamily,
    config: AuditConfig = AuditConfig(),
    coalitions: Sequence[Sequence[AgentId]] = (),
) -> AuditReport:
    """Best response of every agent, plus the requested coalition searches."""
    ev = _evaluator(instance, mechanism)
    devs = tuple(best_response(instance, a, ev, family, config) for a in instance.agents())
    cos = tuple(audit_coalition(instance, c, ev, family, config) for c in coalitions)
    return AuditReport(ev.mechanism.name, family, devs, cos)


def _qualifies(got: Sequence[Fraction], truthful: Sequence[Fraction], weak: bool) -> bool:
    pairs = list(zip(got, truthful))
    if weak:
        return all(g >= t for g, t in pairs) and any(g > t for g, t in pairs)
    return all(g > t for g, t in pairs)


def audit_coalition(
    instance: MatchingInstance,
    coalition: Sequence[AgentId],
    mechanism: Mechanism | Evaluator,
    family: MisreportFamily,
    config: AuditConfig = AuditConfig(),
) -> CoalitionResult:
    """Search joint reports of ``coalition``; the best qualifying one maximises total gain."""
    members = tuple(dict.fromkeys(coalition))
    if len(members) > config.max_coalition:
        raise FamilyTooLarge(f"coalition of {len(members)} exceeds bound {config.max_coalition}")
    total = math.prod(family.count(instance, a) for a in members)
    if total > config.max_candidates:
        raise FamilyTooLarge(f"{total} joint reports exceed {config.max_candidates}")
    ev = _evaluator(instance, mechanism)
    truthful = [ev.utility(instance, a) for a in members]
    if not config.weak and any(_at_top(instance, a, t) for a, t in zip(members, truthful)):
        # a member at its top value cannot strictly gain
        return CoalitionResult(members, Verdict.NO_GAIN_FOUND, (), 0)
    pools = [list(_reports(instance, a, family, ev.mechanism.ordinal)) for a in members]
    best = None
    evaluated = 0

    def walk(depth: int, reported: MatchingInstance, rows: tuple):
        nonlocal best, evaluated
        if depth < len(members):
            for row in pools[depth]:
                walk(depth + 1, reported.with_row(members[depth], row), rows + (row,))
            return
        evaluated += 1
        got = ev.utilities(reported, members)
        if not _qualifies(got, truthful, config.weak):
            return
        score = sum((g - t for g, t in zip(got, truthful)), ZERO)
        if best is None or score > best[0]:
            best = (score, rows, got)

    walk(0, instance, ())
    if best is None:
        return CoalitionResult(members, Verdict.NO_GAIN_FOUND, (), evaluated)
    _, rows, got = best
    devs = tuple(Deviation(a, r, t, g) for a, r, t, g in zip(members, rows, truthful, got))
    return CoalitionResult(members, Verdict.MANIPULATION_FOUND, devs, evaluated)
