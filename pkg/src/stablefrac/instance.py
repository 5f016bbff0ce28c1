"""Matching instances: exact valuation tables, validation, JSON I/O and seeded generators.

Valuations are :class:`fractions.Fraction` throughout. ``U[i][j]`` is man ``i``'s
value for woman ``j`` and ``V[i][j]`` is woman ``j``'s value for man ``i`` (both
matrices are indexed ``[man][woman]``).
"""
from __future__ import annotations

import enum
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

from .errors import DimensionMismatch, GenerationExhausted, ParseError, ValidationError

Rational = Fraction
Matrix = tuple[tuple[Fraction, ...], ...]

# NoMfp resamples at most this many times before giving up.
NO_MFP_RETRIES = 1000


class Side(enum.Enum):
    MEN = "men"
    WOMEN = "women"

    @property
    def other(self) -> "Side":
        return Side.WOMEN if self is Side.MEN else Side.MEN

    @property
    def prefix(self) -> str:
        return "m" if self is Side.MEN else "w"


class AgentId(NamedTuple):
    side: Side
    index: int

    def __str__(self) -> str:
        return f"{self.side.prefix}{self.index}"


class GenMode(enum.Enum):
    UNIFORM = "uniform"
    NO_MFP = "no-mfp"
    CMFP = "cmfp"


def to_rational(value) -> Fraction:
    """Exact conversion of an int, Fraction, decimal string or ``"p/q"`` string."""
    if isinstance(value, bool):
        raise ParseError(f"boolean is not a valuation: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"cannot parse {value!r} as a rational") from exc
    if isinstance(value, float):
        raise ParseError(f"float {value!r} is not exact; pass it as a decimal string")
    raise ParseError(f"unsupported valuation type {type(value).__name__}")


def format_rational(q: Fraction):
    """Canonical JSON form: plain int when integral, else ``"p/q"``."""
    if q.denominator == 1:
        return q.numerator
    return f"{q.numerator}/{q.denominator}"


def preference_order(values: Sequence[Fraction]) -> list[int]:
    """Indices by decreasing value; exact integer keys keep the sort cheap."""
    scale = math.lcm(*(q.denominator for q in values))
    keys = [q.numerator * (scale // q.denominator) for q in values]
    return sorted(range(len(keys)), key=keys.__getitem__, reverse=True)


def _as_matrix(rows) -> Matrix:
    return tuple(tuple(to_rational(x) for x in row) for row in rows)


@dataclass(frozen=True)
class MatchingInstance:
    n: int
    U: Matrix
    V: Matrix
    # preference orders, computed on first use; excluded from equality and hashing
    _prefs: tuple | None = field(default=None, init=False, repr=False, compare=False, hash=False)
    _hash: int | None = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __hash__(self) -> int:
        # instances key the audit memo tables; hashing Fractions is not cheap
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((self.n, self.U, self.V)))
        return self._hash

    @classmethod
    def from_lists(cls, U, V) -> "MatchingInstance":
        U_ = _as_matrix(U)
        V_ = _as_matrix(V)
        return cls(len(U_), U_, V_)

    def value(self, agent: AgentId, partner: int) -> Fraction:
        """Value ``agent`` assigns to being matched with ``partner`` of the other side."""
        if agent.side is Side.MEN:
            return self.U[agent.index][partner]
        return self.V[partner][agent.index]

    def row(self, agent: AgentId) -> tuple[Fraction, ...]:
        """The agent's valuation sequence over the other side."""
        if agent.side is Side.MEN:
            return self.U[agent.index]
        return tuple(self.V[i][agent.index] for i in range(self.n))

    def with_row(self, agent: AgentId, values: Sequence[Fraction]) -> "MatchingInstance":
        """Copy of the instance where ``agent`` reports ``values`` instead."""
        values = tuple(values)
        k = agent.index
        if agent.side is Side.MEN:
            U = self.U[:k] + (values,) + self.U[k + 1 :]
            out = MatchingInstance(self.n, U, self.V)
        else:
            V = tuple(row[:k] + (values[i],) + row[k + 1 :] for i, row in enumerate(self.V))
            out = MatchingInstance(self.n, self.U, V)
        if self._prefs is not None:
            # only the reporting agent's order can change
            men, women = self._prefs
            order = (tuple(preference_order(values)),)
            if agent.side is Side.MEN:
                men = men[:k] + order + men[k + 1 :]
            else:
                women = women[:k] + order + women[k + 1 :]
            object.__setattr__(out, "_prefs", (men, women))
        return out

    def sub_instance(self, men: Sequence[int], women: Sequence[int]) -> "MatchingInstance":
        """Restriction to the given agents; new index ``k`` maps to ``men[k]`` / ``women[k]``."""
        U = tuple(tuple(self.U[i][j] for j in women) for i in men)
        V = tuple(tuple(self.V[i][j] for j in women) for i in men)
        return MatchingInstance(len(men), U, V)

    def agents(self) -> list[AgentId]:
        return [AgentId(Side.MEN, i) for i in range(self.n)] + [
            AgentId(Side.WOMEN, j) for j in range(self.n)
        ]

    def preferences(self) -> tuple[tuple[tuple[int, ...], ...], tuple[tuple[int, ...], ...]]:
        """``(men's orders, women's orders)``, most preferred first; the ordinal profile."""
        if self._prefs is None:
            men = tuple(tuple(preference_order(row)) for row in self.U)
            women = tuple(tuple(preference_order([row[j] for row in self.V])) for j in range(self.n))
            object.__setattr__(self, "_prefs", (men, women))
        return self._prefs

    def men_prefs(self) -> tuple[tuple[int, ...], ...]:
        """Each man's women, most preferred first."""
        return self.preferences()[0]

    def women_prefs(self) -> tuple[tuple[int, ...], ...]:
        return self.preferences()[1]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "U": [[format_rational(x) for x in row] for row in self.U],
            "V": [[format_rational(x) for x in row] for row in self.V],
        }


@dataclass(frozen=True)
class Violation:
    kind: str
    matrix: str
    where: str
    index: int
    value: Fraction | None = None

    def __str__(self) -> str:
        v = "" if self.value is None else f" (value {format_rational(self.value)})"
        return f"{self.kind}: {self.where} {self.index} of {self.matrix}{v}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(instance: MatchingInstance) -> ValidationReport:
    n = instance.n
    for name, M in (("U", instance.U), ("V", instance.V)):
        if len(M) != n or any(len(row) != n for row in M):
            raise DimensionMismatch(f"{name} is not {n}x{n}")
    out: list[Violation] = []
    for name, M in (("U", instance.U), ("V", instance.V)):
        for i in range(n):
            for j in range(n):
                if M[i][j] < 0:
                    out.append(Violation("negative", name, f"entry [{i}][{j}]", i, M[i][j]))
    for i, row in enumerate(instance.U):
        for dup in _duplicates(row):
            out.append(Violation("duplicate", "U", "row", i, dup))
    for j in range(n):
        for dup in _duplicates([instance.V[i][j] for i in range(n)]):
            out.append(Violation("duplicate", "V", "column", j, dup))
    return ValidationReport(tuple(out))


def _duplicates(values) -> list[Fraction]:
    seen, dups = set(), []
    for v in values:
        if v in seen and v not in dups:
            dups.append(v)
        seen.add(v)
    return dups


def parse_instance(text: bytes | str) -> MatchingInstance:
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return instance_from_json(data)


def instance_from_json(data) -> MatchingInstance:
    if not isinstance(data, dict) or not {"n", "U", "V"} <= data.keys():
        raise ParseError("instance must be an object with fields n, U, V")
    n = data["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ParseError(f"n must be a positive integer, got {n!r}")
    for name in ("U", "V"):
        M = data[name]
        if not isinstance(M, list) or not all(isinstance(r, list) for r in M):
            raise ParseError(f"{name} must be an array of arrays")
    inst = MatchingInstance(n, _as_matrix(data["U"]), _as_matrix(data["V"]))
    report = validate(inst)
    if not report.ok:
        raise ValidationError(report)
    return inst


def serialize(instance: MatchingInstance) -> str:
    return json.dumps(instance.to_json())


def generate(n: int, seed: int, mode: GenMode | str = GenMode.UNIFORM) -> MatchingInstance:
    """Seeded random instance; deterministic in ``(n, seed, mode)``.

    Valuations are distinct integers in ``[1, 10n]`` per man row and per woman column.
    ``CMFP`` mode plants a random cascade order: at round ``t`` the planted pair
    values each other above every partner not yet removed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mode = GenMode(mode)
    rng = random.Random(f"stablefrac:{mode.value}:{n}:{seed}")
    if mode is GenMode.UNIFORM:
        return _uniform(n, rng)
    if mode is GenMode.NO_MFP:
        from .cmfp import mfp_pairs

        for _ in range(NO_MFP_RETRIES):
            inst = _uniform(n, rng)
            if not mfp_pairs(inst):
                return inst
        raise GenerationExhausted(f"no MFP-free instance after {NO_MFP_RETRIES} draws (n={n})")
    return _planted_cmfp(n, rng)


def _uniform(n: int, rng: random.Random) -> MatchingInstance:
    hi = 10 * n
    U = [rng.sample(range(1, hi + 1), n) for _ in range(n)]
    cols = [rng.sample(range(1, hi + 1), n) for _ in range(n)]
    V = [[cols[j][i] for j in range(n)] for i in range(n)]
    return MatchingInstance.from_lists(U, V)


def _planted_cmfp(n: int, rng: random.Random) -> MatchingInstance:
    hi = 10 * n
    men = rng.sample(range(n), n)
    women = rng.sample(range(n), n)
    U = [[0] * n for _ in range(n)]
    V = [[0] * n for _ in range(n)]
    for t in range(n):
        m, w = men[t], women[t]
        row = rng.sample(range(1, hi + 1), n)
        later = women[t:]
        best = max(later, key=row.__getitem__)
        row[w], row[best] = row[best], row[w]
        U[m] = row
        col = rng.sample(range(1, hi + 1), n)
        later = men[t:]
        best = max(later, key=col.__getitem__)
        col[m], col[best] = col[best], col[m]
        for i in range(n):
            V[i][w] = col[i]
    return MatchingInstance.from_lists(U, V)
