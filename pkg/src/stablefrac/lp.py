"""Exact rational linear programming: a dense two-phase tableau simplex with Bland's rule.

All variables are implicitly nonnegative. Intended for the small weight programs
built by the solver (a few dozen variables), where exactness matters more than speed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import NumericBlowup
from .instance import format_rational

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_MAX_BITS = 65536


class Relation(enum.Enum):
    GE = ">="
    LE = "<="
    EQ = "="


class Sense(enum.Enum):
    MIN = "min"
    MAX = "max"


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[Fraction, ...]
    relation: Relation
    rhs: Fraction
    label: str = ""

    @classmethod
    def make(cls, coeffs, relation: Relation | str, rhs, label: str = "") -> "Constraint":
        return cls(tuple(Fraction(c) for c in coeffs), Relation(relation), Fraction(rhs), label)

    def holds(self, x: Sequence[Fraction]) -> bool:
        lhs = sum((c * v for c, v in zip(self.coeffs, x)), ZERO)
        if self.relation is Relation.GE:
            return lhs >= self.rhs
        if self.relation is Relation.LE:
            return lhs <= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class LinearProgram:
    num_vars: int
    constraints: tuple[Constraint, ...]
    objective: tuple[Fraction, ...] = ()
    sense: Sense = Sense.MIN
    names: tuple[str, ...] = ()

    def __post_init__(self):
        for c in self.constraints:
            if len(c.coeffs) != self.num_vars:
                raise ValueError(f"constraint {c.label or c} has {len(c.coeffs)} coefficients, expected {self.num_vars}")
        if self.objective and len(self.objective) != self.num_vars:
            raise ValueError("objective length does not match num_vars")

    def var_names(self) -> list[str]:
        return list(self.names) if self.names else [f"x{i + 1}" for i in range(self.num_vars)]

    def with_objective(self, coeffs, sense: Sense = Sense.MIN) -> "LinearProgram":
        return LinearProgram(self.num_vars, self.constraints, tuple(Fraction(c) for c in coeffs), sense, self.names)

    def dump(self) -> str:
        """Plain-text debug form, one constraint per line."""
        names = self.var_names()
        lines = []
        if self.objective:
            lines.append(f"{self.sense.value}: {_linear(self.objective, names)}")
        for c in self.constraints:
            tag = f"  # {c.label}" if c.label else ""
            lines.append(f"{_linear(c.coeffs, names)} {c.relation.value} {format_rational(c.rhs)}{tag}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "variables": self.var_names(),
            "objective": {"sense": self.sense.value, "coeffs": [str(c) for c in self.objective]},
            "constraints": [
                {"coeffs": [str(a) for a in c.coeffs], "relation": c.relation.value, "rhs": str(c.rhs), "label": c.label}
                for c in self.constraints
            ],
        }


def _linear(coeffs, names) -> str:
    terms = []
    for c, name in zip(coeffs, names):
        if c == 0:
            continue
        mag = abs(c)
        body = name if mag == 1 else f"{format_rational(mag)} {name}"
        terms.append(("- " if c < 0 else "+ ") + body)
    if not terms:
        return "0"
    s = " ".join(terms)
    return s[2:] if s.startswith("+ ") else "-" + s[1:]


@dataclass(frozen=True)
class LpSolution:
    status: Status
    values: tuple[Fraction, ...] = ()
    objective_value: Fraction | None = None
    pivots: int = 0


@dataclass
class _Tableau:
    """Integer tableau in the fraction-free (Edmonds/Bareiss) form.

    Every entry is an integer and the true tableau is ``entry / det``; pivoting
    keeps all divisions exact, so no rational normalisation is ever needed.
    """

    rows: list[list[int]]
    rhs: list[int]
    basis: list[int]
    max_bits: int
    det: int = 1
    pivots: int = 0
    cost: list[int] = field(default_factory=list)
    cost_rhs: int = 0
    cost_scale: int = 1
    # off when a Hadamard bound already keeps every entry under max_bits
    guarded: bool = True

    def price(self, c: Sequence[Fraction]) -> None:
        """Reduced costs for objective ``min c.x`` under the current basis."""
        width = len(self.rows[0]) if self.rows else len(c)
        c = [Fraction(c[j]) if j < len(c) else ZERO for j in range(width)]
        scale = math.lcm(*(x.denominator for x in c))
        ci = [x.numerator * (scale // x.denominator) for x in c]
        d = self.det
        cost = [x * d for x in ci]
        cost_rhs = 0
        for r, b in enumerate(self.basis):
            cb = ci[b]
            if cb:
                row = self.rows[r]
                for j in range(width):
                    if row[j]:
                        cost[j] -= cb * row[j]
                cost_rhs -= cb * self.rhs[r]
        self.cost, self.cost_rhs, self.cost_scale = cost, cost_rhs, scale

    def value(self) -> Fraction:
        """Current objective value ``c.x`` of the priced objective."""
        return Fraction(-self.cost_rhs, self.det * self.cost_scale)

    def pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        p, d = row[col], self.det
        b = self.rhs[r]
        rows, rhs = self.rows, self.rhs
        for i, other in enumerate(rows):
            if i == r:
                continue
            f = other[col]
            if f:
                rows[i] = [(p * x - f * y) // d for x, y in zip(other, row)]
                rhs[i] = (p * rhs[i] - f * b) // d
            elif p != d:
                rows[i] = [p * x // d for x in other]
                rhs[i] = p * rhs[i] // d
        f = self.cost[col]
        self.cost = [(p * x - f * y) // d for x, y in zip(self.cost, row)]
        self.cost_rhs = (p * self.cost_rhs - f * b) // d
        self.det = p
        if p < 0:
            # negative pivots only occur when driving artificials out; flip every
            # sign so the common denominator stays positive
            self.rows = [[-x for x in other] for other in self.rows]
            self.rhs = [-x for x in self.rhs]
            self.cost = [-x for x in self.cost]
            self.cost_rhs = -self.cost_rhs
            self.det = -p
        self.basis[r] = col
        self.pivots += 1
        if self.guarded:
            # a pivot rewrites every row; a full sweep is periodic, the cheap rows always
            self._guard((row, self.rhs, self.cost) if self.pivots % 64 else (*self.rows, self.rhs, self.cost))

    def _guard(self, seqs) -> None:
        bound = self.max_bits
        if self.det.bit_length() > bound:
            raise NumericBlowup(f"tableau determinant exceeds {bound} bits")
        for seq in seqs:
            for x in seq:
                if x.bit_length() > bound:
                    raise NumericBlowup(f"tableau entry exceeds {bound} bits")

    def run(self, allowed: int) -> Status:
        """Minimise with Bland's rule over the first ``allowed`` columns."""
        while True:
            col = next((j for j in range(allowed) if self.cost[j] < 0), None)
            if col is None:
                return Status.OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                a = row[col]
                if a > 0:
                    # ratio rhs/a, compared exactly; ties go to the lowest basic index
                    if best is None:
                        best = (self.rhs[i], a, i)
                        continue
                    br, ba, bi = best
                    lhs, rhs = self.rhs[i] * ba, br * a
                    if lhs < rhs or (lhs == rhs and self.basis[i] < self.basis[bi]):
                        best = (self.rhs[i], a, i)
            if best is None:
                return Status.UNBOUNDED
            self.pivot(best[2], col)


def _integer_row(coeffs: Sequence[Fraction], rhs: Fraction) -> tuple[list[int], int]:
    scale = math.lcm(rhs.denominator, *(c.denominator for c in coeffs))
    return [c.numerator * (scale // c.denominator) for c in coeffs], rhs.numerator * (scale // rhs.denominator)


def _hadamard_bits(rows: Sequence[Sequence[int]]) -> int:
    """Bit length bounding every minor of ``rows``; each Bareiss entry is one."""
    bits = 0
    for row in rows:
        sq = sum(x * x for x in row)
        if sq > 1:
            bits += (math.isqrt(sq) + 1).bit_length()
    return bits


def _crash(tab: "_Tableau", start: Sequence[int], eq_rows: set[int], surplus: dict[int, int], first_art: int) -> bool:
    """Pivot ``start`` into equality rows and surpluses into the remaining ``>=``
    rows; True when the result is a feasible basis, so phase one can be skipped."""
    for col in start:
        r = next((i for i in eq_rows if tab.basis[i] >= first_art and tab.rows[i][col]), None)
        if r is None:
            return False
        tab.pivot(r, col)
    for r, col in surplus.items():
        if tab.basis[r] >= first_art and tab.rows[r][col]:
            tab.pivot(r, col)
    return all(b >= 0 for b in tab.rhs) and all(
        tab.rhs[r] == 0 for r, b in enumerate(tab.basis) if b >= first_art
    )


def solve(lp: LinearProgram, max_bits: int = DEFAULT_MAX_BITS, start: Sequence[int] = ()) -> LpSolution:
    """Exact vertex-optimal solution (two-phase simplex, Bland's anti-cycling rule).

    ``start`` optionally names structural columns of a known feasible basis (with
    the surpluses of the remaining ``>=`` rows); phase one is skipped when they
    do form one, and the usual two phases run otherwise.
    """
    k = lp.num_vars
    norm = []
    for c in lp.constraints:
        coeffs, rel, rhs = list(c.coeffs), c.relation, c.rhs
        if rhs < 0:
            coeffs = [-a for a in coeffs]
            rhs = -rhs
            rel = {Relation.GE: Relation.LE, Relation.LE: Relation.GE, Relation.EQ: Relation.EQ}[rel]
        norm.append((coeffs, rel, rhs))
    n_slack = sum(1 for _, rel, _ in norm if rel is not Relation.EQ)
    n_art = sum(1 for _, rel, _ in norm if rel is not Relation.LE)
    width = k + n_slack + n_art
    rows, rhs, basis = [], [], []
    s_col, a_col = k, k + n_slack
    art_cols = []
    eq_rows: set[int] = set()
    surplus: dict[int, int] = {}
    for coeffs, rel, b in norm:
        if rel is Relation.EQ:
            eq_rows.add(len(rows))
        elif rel is Relation.GE:
            surplus[len(rows)] = s_col
        ints, bi = _integer_row(coeffs, b)
        row = ints + [0] * (n_slack + n_art)
        if rel is Relation.LE:
            row[s_col] = 1
            basis.append(s_col)
            s_col += 1
        else:
            if rel is Relation.GE:
                row[s_col] = -1
                s_col += 1
            row[a_col] = 1
            basis.append(a_col)
            art_cols.append(a_col)
            a_col += 1
        rows.append(row)
        rhs.append(bi)
    # rows are scaled to integers while slack/artificial columns keep a unit
    # entry, which only rescales those auxiliary variables
    c = list(lp.objective) if lp.objective else [ZERO] * k
    if lp.sense is Sense.MAX:
        c = [-x for x in c]
    scale = math.lcm(*(x.denominator for x in c), 1)
    # bordered matrix: rows with their rhs, plus both phases' cost rows
    bordered = [row + [b] for row, b in zip(rows, rhs)]
    bordered.append([x.numerator * (scale // x.denominator) for x in c])
    bordered.append([1] * n_art)
    bound = _hadamard_bits(bordered)
    tab = _Tableau(rows, rhs, basis, max_bits, cost=[0] * width, guarded=bound > max_bits)

    if art_cols:
        first_art = k + n_slack
        crashed = False
        if start:
            saved = ([r[:] for r in rows], rhs[:], basis[:])
            crashed = _crash(tab, start, eq_rows, surplus, first_art)
            if not crashed:
                tab = _Tableau(*saved, max_bits, cost=[0] * width, guarded=tab.guarded)
        if not crashed:
            tab.price([ZERO] * (k + n_slack) + [ONE] * n_art)
            tab.run(width)
            if tab.cost_rhs != 0 and tab.value() > 0:
                return LpSolution(Status.INFEASIBLE, pivots=tab.pivots)
        r = 0
        while r < len(tab.rows):
            if tab.basis[r] >= first_art:
                col = next((j for j in range(first_art) if tab.rows[r][j]), None)
                if col is None:
                    # redundant equality row
                    del tab.rows[r], tab.rhs[r], tab.basis[r]
                    continue
                tab.pivot(r, col)
            r += 1
        tab.rows = [row[:first_art] for row in tab.rows]
        width = first_art

    tab.price(c + [ZERO] * (width - k))
    status = tab.run(width)
    if status is Status.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, pivots=tab.pivots)
    x = [ZERO] * width
    for r, b in enumerate(tab.basis):
        x[b] = Fraction(tab.rhs[r], tab.det)
    values = tuple(x[:k])
    obj = sum((a * v for a, v in zip(lp.objective, values)), ZERO) if lp.objective else ZERO
    return LpSolution(Status.OPTIMAL, values, obj, tab.pivots)


def _minmax_pair(constraints: Sequence[Constraint]) -> LpSolution:
    """Closed form for two weights on the simplex: every row bounds ``x1`` alone
    once ``x2 = 1 - x1``, and the unique optimum is the point nearest 1/2."""
    lo, hi = ZERO, ONE
    for c in constraints:
        a, b = c.coeffs
        slope, rhs = a - b, c.rhs - b
        if slope == 0:
            ok = {Relation.GE: 0 >= rhs, Relation.LE: 0 <= rhs, Relation.EQ: rhs == 0}[c.relation]
            if not ok:
                return LpSolution(Status.INFEASIBLE)
            continue
        bound = rhs / slope
        rel = c.relation
        if slope < 0 and rel is not Relation.EQ:
            rel = Relation.LE if rel is Relation.GE else Relation.GE
        if rel in (Relation.GE, Relation.EQ):
            lo = max(lo, bound)
        if rel in (Relation.LE, Relation.EQ):
            hi = min(hi, bound)
    if lo > hi:
        return LpSolution(Status.INFEASIBLE)
    x1 = min(max(Fraction(1, 2), lo), hi)
    return LpSolution(Status.OPTIMAL, (x1, 1 - x1), max(x1, 1 - x1))


def _is_sum(c: Constraint) -> bool:
    return c.relation is Relation.EQ and c.rhs == ONE and all(a == ONE for a in c.coeffs)


def simplex_constraint(k: int) -> Constraint:
    return Constraint((ONE,) * k, Relation.EQ, ONE, "sum")


def solve_minmax_weight(
    k: int, constraints: Sequence[Constraint], max_bits: int = DEFAULT_MAX_BITS
) -> LpSolution:
    """Minimise ``t`` subject to ``x_i <= t`` and the given constraints on ``x``.

    Returns the ``x`` part as ``values`` and ``t`` as ``objective_value``.
    """
    if k == 2 and any(_is_sum(c) for c in constraints):
        return _minmax_pair(constraints)
    cons = [Constraint(c.coeffs + (ZERO,), c.relation, c.rhs, c.label) for c in constraints]
    for i in range(k):
        coeffs = [ZERO] * (k + 1)
        coeffs[i] = ONE
        coeffs[k] = -ONE
        cons.append(Constraint(tuple(coeffs), Relation.LE, ZERO, f"cap x{i + 1}"))
    names = tuple(f"x{i + 1}" for i in range(k)) + ("t",)
    lp = LinearProgram(k + 1, tuple(cons), (ZERO,) * k + (ONE,), Sense.MIN, names)
    sol = solve(lp, max_bits)
    if sol.status is not Status.OPTIMAL:
        return sol
    return LpSolution(sol.status, sol.values[:k], sol.values[k], sol.pivots)
