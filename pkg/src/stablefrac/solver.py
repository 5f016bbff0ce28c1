"""Stable fractional matchings that are not integral, built from envy-graph rotations.

Pipeline: peel off mutual-first pairs, run men-proposing deferred acceptance on the
residual, rotate partners along an envy cycle (or a chain of envy paths when both
envy graphs are acyclic), then weight the resulting integral matchings with an
exact LP so that no blocking pair appears.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Sequence

from . import envy
from .cmfp import CmfpResult, cmfp_matching
from .errors import InternalInstabilityBug, WeightLpAnomaly
from .fractional import FractionalMatching, _stability, bvn_decompose
from .instance import AgentId, MatchingInstance, Side
from .integral import IntegralMatching, gale_shapley
from .lp import (
    Constraint,
    LinearProgram,
    LpSolution,
    Relation,
    Sense,
    Status,
    simplex_constraint,
    solve_minmax_weight,
)
from . import lp as lp_core

ZERO = Fraction(0)
ONE = Fraction(1)

# LP nodes the tangent search may visit before giving up
MAX_SIDE_ASSIGNMENTS = 4096


class Branch(enum.Enum):
    CMFP = "cmfp"
    CYCLE = "cycle"
    PATH = "path"


class WeightModel(enum.Enum):
    ALPHA = "alpha"
    PAIRWISE = "pairwise"
    TANGENT = "tangent"


def _utility_rows(instance: MatchingInstance, mu: IntegralMatching):
    U, V = instance.U, instance.V
    husband = mu.husbands()
    u = [U[m][w] for m, w in enumerate(mu.pairing)]
    v = [V[m][w] for w, m in enumerate(husband)]
    return u, v


def _alphas(instance: MatchingInstance, mu: IntegralMatching):
    """Best value each agent can get from someone who strictly prefers them to their lot."""
    n = instance.n
    U, V = instance.U, instance.V
    u, v = _utility_rows(instance, mu)
    am = [max((U[m][w] for w in range(n) if V[m][w] > v[w]), default=ZERO) for m in range(n)]
    aw = [max((V[m][w] for m in range(n) if U[m][w] > u[m]), default=ZERO) for w in range(n)]
    return am, aw


def alpha(instance: MatchingInstance, agent: AgentId, mu: IntegralMatching) -> Fraction:
    am, aw = _alphas(instance, mu)
    return am[agent.index] if agent.side is Side.MEN else aw[agent.index]


def build_weight_lp(instance: MatchingInstance, matchings: Sequence[IntegralMatching]) -> LinearProgram:
    """Weights over ``matchings``: every agent's expected value must reach its largest alpha."""
    n, k = instance.n, len(matchings)
    rows = [_utility_rows(instance, mu) for mu in matchings]
    alphas = [_alphas(instance, mu) for mu in matchings]
    cons = [simplex_constraint(k)]
    for m in range(n):
        rhs = max(a[0][m] for a in alphas)
        cons.append(Constraint(tuple(r[0][m] for r in rows), Relation.GE, rhs, f"m{m}"))
    for w in range(n):
        rhs = max(a[1][w] for a in alphas)
        cons.append(Constraint(tuple(r[1][w] for r in rows), Relation.GE, rhs, f"w{w}"))
    return LinearProgram(k, tuple(cons))


def _pairwise_constraints(instance: MatchingInstance, matchings: Sequence[IntegralMatching]) -> LinearProgram:
    """Per-pair sufficient conditions for stability of every combination they admit.

    A pair that can block some combination must be kept satisfied on one side: the
    side with slack under the stable base matching, or the man's side for base
    partners, which have no slack on either.
    """
    n, k = instance.n, len(matchings)
    U, V = instance.U, instance.V
    rows = [_utility_rows(instance, mu) for mu in matchings]
    um = [[r[0][m] for r in rows] for m in range(n)]
    vw = [[r[1][w] for r in rows] for w in range(n)]
    thr_m: list[Fraction | None] = [None] * n
    thr_w: list[Fraction | None] = [None] * n
    for m in range(n):
        for w in range(n):
            ms = [x - U[m][w] for x in um[m]]
            ws = [x - V[m][w] for x in vw[w]]
            if min(ms) >= 0 or min(ws) >= 0:
                continue
            if ms[0] > 0 and ws[0] > 0:
                man = sum(s >= 0 for s in ms) >= sum(s >= 0 for s in ws)
            elif ms[0] > 0 or ws[0] > 0:
                man = ms[0] > 0
            else:
                man = True
            if man:
                thr_m[m] = U[m][w] if thr_m[m] is None else max(thr_m[m], U[m][w])
            else:
                thr_w[w] = V[m][w] if thr_w[w] is None else max(thr_w[w], V[m][w])
    cons = [simplex_constraint(k)]
    for m in range(n):
        if thr_m[m] is not None:
            cons.append(Constraint(tuple(um[m]), Relation.GE, thr_m[m], f"m{m}"))
    for w in range(n):
        if thr_w[w] is not None:
            cons.append(Constraint(tuple(vw[w]), Relation.GE, thr_w[w], f"w{w}"))
    return LinearProgram(k, tuple(cons))


def _drop_implied(constraints: Sequence[Constraint]) -> list[Constraint]:
    """Remove ``>=`` rows that every point of the weight simplex satisfies."""
    return [
        c for c in constraints
        if not (c.relation is Relation.GE and c.label and min(c.coeffs) >= c.rhs)
    ]


def _minmax(lp: LinearProgram) -> LpSolution:
    return solve_minmax_weight(lp.num_vars, _drop_implied(lp.constraints))


def _good(sol: LpSolution) -> bool:
    return sol.status is Status.OPTIMAL and sol.objective_value < 1


@dataclass(frozen=True)
class SolveTrace:
    cmfp: CmfpResult
    branch: Branch
    base: IntegralMatching | None
    rotations: tuple[envy.Rotation, ...]
    improved: tuple[AgentId, ...]
    weight_model: WeightModel | None
    constraints: LinearProgram | None
    weights: tuple[Fraction, ...]
    composed: FractionalMatching
    # residual-level (weight, matching) pairs actually combined; differs from
    # the rotation matchings only under the tangent model
    support: tuple[tuple[Fraction, IntegralMatching], ...] = ()

    @property
    def matchings(self) -> list[IntegralMatching]:
        if self.base is None:
            return []
        return [self.base] + [r.produced for r in self.rotations]

    @property
    def k(self) -> int:
        return len(self.matchings)

    def to_json(self) -> dict:
        res = self.cmfp
        return {
            "branch": self.branch.value,
            "forced": res.forced.to_json(),
            "rounds": [list(r) for r in res.rounds],
            "residual_men": list(res.men),
            "residual_women": list(res.women),
            "base": None if self.base is None else self.base.to_json(),
            "rotations": [r.to_json() for r in self.rotations],
            "improved": [str(a) for a in self.improved],
            "weight_model": None if self.weight_model is None else self.weight_model.value,
            "lp": None if self.constraints is None else self.constraints.dump().splitlines(),
            "weights": [str(x) for x in self.weights],
            "support": [[str(a), mu.to_json()] for a, mu in self.support],
        }


def _rotations(residual: MatchingInstance, base: IntegralMatching):
    g_w = envy.build(residual, base, Side.WOMEN)
    g_m = envy.build(residual, base, Side.MEN)
    for side, graph in ((Side.WOMEN, g_w), (Side.MEN, g_m)):
        cycle = envy.find_cycle(graph)
        if cycle is not None:
            rot = envy.rotate(residual, base, cycle, envy.RotationKind.CYCLE, side)
            return Branch.CYCLE, [rot], ()

    graphs = {Side.MEN: g_m, Side.WOMEN: g_w}
    sinks = g_w.sinks()
    if not sinks:  # pragma: no cover - acyclic graphs always have a sink
        raise InternalInstabilityBug("acyclic women's envy graph without a sink")
    improved: list[AgentId] = []
    seen: set[AgentId] = set()
    side = Side.MEN
    node = base.partner(Side.WOMEN, sinks[0])
    limit = 2 * residual.n
    rots = []
    while AgentId(side, node) not in seen:
        path = envy.path_to_sink(graphs[side], node)
        if len(path) < 2:
            raise InternalInstabilityBug(f"{side.prefix}{node} starts an empty envy path")
        rots.append(envy.rotate(residual, base, path, envy.RotationKind.PATH, side))
        for a in path[:-1]:
            agent = AgentId(side, a)
            if agent not in seen:
                seen.add(agent)
                improved.append(agent)
        node = base.partner(side, path[-1])
        side = side.other
        if len(rots) > limit:  # pragma: no cover - each path improves a new agent
            raise InternalInstabilityBug("envy path chain did not close")
    return Branch.PATH, rots, tuple(improved)


def _weigh(residual: MatchingInstance, matchings: list[IntegralMatching]):
    lp = build_weight_lp(residual, matchings)
    sol = _minmax(lp)
    if _good(sol):
        return WeightModel.ALPHA, lp, sol
    lp = _pairwise_constraints(residual, matchings)
    sol = _minmax(lp)
    if _good(sol):
        return WeightModel.PAIRWISE, lp, sol
    return None


def _direction_lp(n: int, base: IntegralMatching, rows: list[Constraint]) -> LinearProgram:
    """Doubly stochastic ``X`` (row-major) maximising the mass placed off ``base``."""
    cons = []
    for m in range(n):
        c = [ZERO] * (n * n)
        for w in range(n):
            c[m * n + w] = ONE
        cons.append(Constraint(tuple(c), Relation.EQ, ONE, f"row m{m}"))
    for w in range(n):
        c = [ZERO] * (n * n)
        for m in range(n):
            c[m * n + w] = ONE
        cons.append(Constraint(tuple(c), Relation.EQ, ONE, f"col w{w}"))
    obj = [ONE] * (n * n)
    for m, w in base.pairs():
        obj[m * n + w] = ZERO
    names = tuple(f"x{m}_{w}" for m in range(n) for w in range(n))
    return LinearProgram(n * n, tuple(cons + rows), tuple(obj), Sense.MAX, names)


def _side_row(instance: MatchingInstance, m: int, w: int, side: Side) -> Constraint:
    n = instance.n
    c = [ZERO] * (n * n)
    if side is Side.MEN:
        for j in range(n):
            c[m * n + j] = instance.U[m][j]
        return Constraint(tuple(c), Relation.GE, instance.U[m][w], f"m{m}")
    for i in range(n):
        c[i * n + w] = instance.V[i][w]
    return Constraint(tuple(c), Relation.GE, instance.V[m][w], f"w{w}")


def _shortfall(instance: MatchingInstance, X, m: int, w: int) -> tuple[Fraction, Fraction]:
    """Relative amounts by which ``X`` leaves m and w below their values for each other."""
    n = instance.n
    u = sum((X[m * n + j] * instance.U[m][j] for j in range(n)), ZERO)
    v = sum((X[i * n + w] * instance.V[i][w] for i in range(n)), ZERO)
    U, V = instance.U[m][w], instance.V[m][w]
    return (U - u) / U if U else -u, (V - v) / V if V else -v


def _tangent_direction(residual: MatchingInstance, base: IntegralMatching):
    """A doubly stochastic ``X != base`` that every base pair accepts, or ``None``.

    Near a stable integral matching only its own pairs can start to block: all
    other pairs hold with strict slack. Moving from ``base`` towards ``X`` keeps
    pair (m, w) satisfied iff ``X`` gives m at least U(m, w) or w at least V(m, w),
    so a depth-first search over which side protects each base pair decides
    whether any stable point leaves ``base``.
    """
    n = residual.n
    budget = [MAX_SIDE_ASSIGNMENTS]
    # ``base`` meets every side row with equality, so its cells plus a spanning
    # tree of zero cells are a feasible starting basis for every node
    pairing = base.pairing
    start = [m * n + pairing[m] for m in range(n)] + [pairing[m] for m in range(1, n)]

    def search(rows: list[Constraint], free: list[tuple[int, int]]):
        budget[0] -= 1
        if budget[0] < 0:
            raise WeightLpAnomaly(f"tangent search exceeded {MAX_SIDE_ASSIGNMENTS} LP nodes")
        lp = _direction_lp(n, base, rows)
        sol = lp_core.solve(lp, start=start)
        if sol.status is not Status.OPTIMAL or sol.objective_value == 0:
            return None
        # branch on a base pair the current optimum leaves unprotected,
        # trying first the side it misses by less
        short = {p: _shortfall(residual, sol.values, *p) for p in free}
        open_pair = next((p for p in free if min(short[p]) > 0), None)
        if open_pair is None:
            return lp, sol.values
        rest = [p for p in free if p != open_pair]
        du, dv = short[open_pair]
        for side in ((Side.MEN, Side.WOMEN) if du <= dv else (Side.WOMEN, Side.MEN)):
            found = search(rows + [_side_row(residual, *open_pair, side)], rest)
            if found is not None:
                return found
        return None

    # when w is m's strict top, m's side pins X[m][w] = 1 and so implies w's side:
    # the disjunction is w's side alone (and symmetrically)
    rows, free = [], []
    U, V = residual.U, residual.V
    for m, w in base.pairs():
        if all(U[m][w] > U[m][j] for j in range(n) if j != w):
            rows.append(_side_row(residual, m, w, Side.WOMEN))
        elif all(V[m][w] > V[i][w] for i in range(n) if i != m):
            rows.append(_side_row(residual, m, w, Side.MEN))
        else:
            free.append((m, w))
    return search(rows, free)


def _step(residual: MatchingInstance, base: IntegralMatching, X) -> Fraction:
    """Largest step in (0, 1/2] from ``base`` towards ``X`` that stays stable."""
    n = residual.n
    U, V = residual.U, residual.V
    u0, v0 = _utility_rows(residual, base)
    u1 = [sum((X[m * n + j] * U[m][j] for j in range(n)), ZERO) for m in range(n)]
    v1 = [sum((X[i * n + w] * V[i][w] for i in range(n)), ZERO) for w in range(n)]
    half = Fraction(1, 2)

    def reach(s0, s1):
        if s0 < 0:
            return ZERO
        if s1 >= 0:
            return half
        return min(half, s0 / (s0 - s1))

    eps = half
    for m in range(n):
        for w in range(n):
            eps = min(eps, max(reach(u0[m] - U[m][w], u1[m] - U[m][w]),
                               reach(v0[w] - V[m][w], v1[w] - V[m][w])))
    return eps


def _tangent(residual: MatchingInstance, base: IntegralMatching):
    found = _tangent_direction(residual, base)
    if found is None:
        return None
    lp, X = found
    n = residual.n
    eps = _step(residual, base, X)
    if eps <= 0:  # pragma: no cover - every base pair is protected by construction
        raise InternalInstabilityBug("tangent direction admits no positive step")
    W = [[eps * X[m * n + w] for w in range(n)] for m in range(n)]
    for m, w in base.pairs():
        W[m][w] += 1 - eps
    mu = FractionalMatching(tuple(map(tuple, W)))
    return lp, eps, mu, tuple(bvn_decompose(mu))


def solve(instance: MatchingInstance) -> SolveTrace:
    n = instance.n
    res = cmfp_matching(instance)
    if res.is_perfect:
        composed = res.forced.to_fractional()
        return SolveTrace(res, Branch.CMFP, None, (), (), None, None, (), composed, ())

    residual = res.residual
    base = gale_shapley(residual, Side.MEN)
    branch, rots, improved = _rotations(residual, base)
    matchings = [base] + [r.produced for r in rots]
    weighed = _weigh(residual, matchings)
    if weighed is not None:
        model, lp, sol = weighed
        x = tuple(sol.values)
        support = tuple((xi, mu) for xi, mu in zip(x, matchings) if xi)
    else:
        found = _tangent(residual, base)
        if found is None:
            raise WeightLpAnomaly(
                "no stable fractional matching lies near the residual's stable matching; "
                "only the integral one was found"
            )
        model = WeightModel.TANGENT
        lp, eps, _, support = found
        x = (1 - eps, eps)

    W = [[ZERO] * n for _ in range(n)]
    for m, w in res.forced.pairs():
        W[m][w] = ONE
    for xi, mu in support:
        for m, w in mu.pairs():
            W[res.men[m]][res.women[w]] += xi
    composed = FractionalMatching(tuple(map(tuple, W)))
    # weights are a convex combination of perfect matchings by construction
    report = _stability(instance, composed.weights)
    if not report.stable:
        raise InternalInstabilityBug(f"composed matching blocked by {list(report.blocking)}")
    if composed.is_integral:
        raise WeightLpAnomaly("weights produced an integral matching")
    return SolveTrace(res, branch, base, tuple(rots), improved, model, lp, x, composed, support)


def ordinal_key(instance: MatchingInstance) -> Hashable:
    return instance.preferences()


def residual_key(instance: MatchingInstance) -> Hashable:
    """Forced pairs plus residual values: everything ``solve`` reads."""
    res = cmfp_matching(instance)
    return res.forced.pairing, res.residual


@dataclass(frozen=True)
class Mechanism:
    """A stable-matching rule, a pure function of the reported instance.

    ``key`` maps an instance to a hashable value that determines the output, for
    memoisation; ``ordinal`` rules depend only on preference orders.
    """

    name: str
    rule: Callable[[MatchingInstance], FractionalMatching]
    ordinal: bool = False
    key: Callable[[MatchingInstance], Hashable] | None = None

    def __call__(self, instance: MatchingInstance) -> FractionalMatching:
        return self.rule(instance)

    def cache_key(self, instance: MatchingInstance) -> Hashable:
        if self.key is not None:
            return self.key(instance)
        return ordinal_key(instance) if self.ordinal else instance


def _gs(side: Side):
    return lambda inst: gale_shapley(inst, side).to_fractional()


def integral_fallback(instance: MatchingInstance) -> FractionalMatching:
    """Forced pairs plus men-proposing deferred acceptance on the residual."""
    res = cmfp_matching(instance)
    W = [[ZERO] * instance.n for _ in range(instance.n)]
    for m, w in res.forced.pairs():
        W[m][w] = ONE
    if res.residual.n:
        for m, w in gale_shapley(res.residual, Side.MEN).pairs():
            W[res.men[m]][res.women[w]] = ONE
    return FractionalMatching(tuple(map(tuple, W)))


def envy_frac(instance: MatchingInstance) -> FractionalMatching:
    """``solve``'s composed matching; the stable integral fallback when no
    non-integral weights exist."""
    try:
        return solve(instance).composed
    except WeightLpAnomaly:
        return integral_fallback(instance)


def mechanisms() -> list[Mechanism]:
    return [
        Mechanism("gs-men", _gs(Side.MEN), ordinal=True),
        Mechanism("gs-women", _gs(Side.WOMEN), ordinal=True),
        Mechanism("envy-frac", envy_frac, key=residual_key),
    ]


def get_mechanism(name: str) -> Mechanism:
    for mech in mechanisms():
        if mech.name == name:
            return mech
    raise KeyError(f"unknown mechanism {name!r}")
