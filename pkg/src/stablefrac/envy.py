"""Envy graphs over one side of the market, and rotations along their cycles and paths."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import CycleEncountered, InvalidRotation
from .fractional import FractionalMatching, check_weights
from .instance import MatchingInstance, Side
from .integral import IntegralMatching

ZERO = Fraction(0)


@dataclass(frozen=True)
class EnvyGraph:
    """``adjacency[a]`` lists the agents ``a`` envies, most-coveted allocation first."""

    side: Side
    adjacency: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.adjacency)

    def edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a, succ in enumerate(self.adjacency) for b in succ]

    def sinks(self) -> list[int]:
        return [a for a, succ in enumerate(self.adjacency) if not succ]

    def is_empty(self) -> bool:
        return not any(self.adjacency)

    def to_json(self) -> dict:
        p = self.side.prefix
        return {
            "side": self.side.value,
            "adjacency": {f"{p}{a}": [f"{p}{b}" for b in succ] for a, succ in enumerate(self.adjacency)},
        }


def _allocation_values(instance: MatchingInstance, mu, side: Side) -> list[list[Fraction]]:
    """``vals[a][b]`` = what agent ``a`` gets from agent ``b``'s allocation."""
    n = instance.n
    U, V = instance.U, instance.V
    if isinstance(mu, IntegralMatching):
        if side is Side.MEN:
            alloc = list(mu.pairing)
            return [[ZERO if alloc[b] is None else U[a][alloc[b]] for b in range(n)] for a in range(n)]
        alloc = mu.husbands()
        return [[ZERO if alloc[b] is None else V[alloc[b]][a] for b in range(n)] for a in range(n)]
    check_weights(mu, n)
    W = mu.weights
    if side is Side.MEN:
        support = [[(w, x) for w, x in enumerate(W[b]) if x] for b in range(n)]
        return [[sum((x * U[a][w] for w, x in support[b]), ZERO) for b in range(n)] for a in range(n)]
    support = [[(m, W[m][b]) for m in range(n) if W[m][b]] for b in range(n)]
    return [[sum((x * V[m][a] for m, x in support[b]), ZERO) for b in range(n)] for a in range(n)]


def build(instance: MatchingInstance, mu: IntegralMatching | FractionalMatching, side: Side) -> EnvyGraph:
    """Edge ``a -> b`` iff ``a`` strictly prefers ``b``'s allocation to its own."""
    vals = _allocation_values(instance, mu, side)
    adjacency = []
    for a, row in enumerate(vals):
        own = row[a]
        targets = [b for b in range(len(row)) if b != a and row[b] > own]
        targets.sort(key=lambda b: (-row[b], b))
        adjacency.append(tuple(targets))
    return EnvyGraph(side, tuple(adjacency))


def find_cycle(graph: EnvyGraph) -> list[int] | None:
    """First cycle met by a DFS from the lowest index, successors in adjacency order."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = [WHITE] * graph.n
    for root in range(graph.n):
        if color[root] != WHITE:
            continue
        stack = [root]
        iters = [iter(graph.adjacency[root])]
        color[root] = GREY
        while stack:
            nxt = next(iters[-1], None)
            if nxt is None:
                color[stack.pop()] = BLACK
                iters.pop()
            elif color[nxt] == GREY:
                return stack[stack.index(nxt):]
            elif color[nxt] == WHITE:
                color[nxt] = GREY
                stack.append(nxt)
                iters.append(iter(graph.adjacency[nxt]))
    return None


def path_to_sink(graph: EnvyGraph, start: int) -> list[int]:
    """Follow each node's most-coveted envy edge until a sink is reached."""
    path = [start]
    seen = {start}
    while graph.adjacency[path[-1]]:
        nxt = graph.adjacency[path[-1]][0]
        if nxt in seen:
            raise CycleEncountered(f"envy path from {start} revisits {nxt}")
        seen.add(nxt)
        path.append(nxt)
    return path


class RotationKind(enum.Enum):
    CYCLE = "cycle"
    PATH = "path"


@dataclass(frozen=True)
class Rotation:
    kind: RotationKind
    side: Side
    nodes: tuple[int, ...]
    produced: IntegralMatching

    def to_json(self) -> dict:
        p = self.side.prefix
        return {
            "kind": self.kind.value,
            "side": self.side.value,
            "nodes": [f"{p}{a}" for a in self.nodes],
            "produced": self.produced.to_json(),
        }


def rotate(
    instance: MatchingInstance,
    base: IntegralMatching,
    nodes: Sequence[int],
    kind: RotationKind,
    side: Side,
) -> Rotation:
    """Shift partners one step along ``nodes``.

    Every node takes its successor's base partner. For a path the last node (the
    sink) takes the source's partner, so both kinds reduce to the same cyclic shift.
    """
    nodes = tuple(nodes)
    if not base.is_perfect:
        raise InvalidRotation("base matching must be perfect")
    if len(set(nodes)) != len(nodes):
        raise InvalidRotation(f"repeated node in {nodes}")
    if len(nodes) >= 2:
        graph = build(instance, base, side)
        links = list(zip(nodes, nodes[1:]))
        if kind is RotationKind.CYCLE:
            links.append((nodes[-1], nodes[0]))
        for a, b in links:
            if b not in graph.adjacency[a]:
                raise InvalidRotation(f"{side.prefix}{a} does not envy {side.prefix}{b}")
        if kind is RotationKind.PATH and graph.adjacency[nodes[-1]]:
            raise InvalidRotation(f"path end {side.prefix}{nodes[-1]} is not a sink")
    if side is Side.MEN:
        partner = list(base.pairing)
    else:
        partner = base.husbands()
    new = list(partner)
    k = len(nodes)
    for t, a in enumerate(nodes):
        new[a] = partner[nodes[(t + 1) % k]]
    if side is Side.MEN:
        produced = IntegralMatching(tuple(new))
    else:
        produced = IntegralMatching.from_pairs(base.n, ((m, w) for w, m in enumerate(new)))
    return Rotation(kind, side, nodes, produced)


def to_dot(graph: EnvyGraph, name: str | None = None) -> str:
    p = graph.side.prefix
    name = name or f"envy_{graph.side.value}"
    lines = [f"digraph {name} {{"]
    for a in range(graph.n):
        lines.append(f'  {p}{a} [label="{p}{a}"];')
    for a, b in graph.edges():
        lines.append(f"  {p}{a} -> {p}{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
