"""Rewrite rules: left and right graphs joined by an arrow node."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import NAME, GraphBuilder, PortGraph, Record
from .hierarchy import AhpGraph

BRIDGE = "bridge"
WIRE = "wire"
BLACKHOLE = "blackhole"
KINDS = (BRIDGE, WIRE, BLACKHOLE)

ARROW_NODE = "=>"


@dataclass(frozen=True)
class ArrowPort:
    """One typed port of the arrow node.

    ``lhs`` and ``rhs`` hold the top-level port ids the arrow port is linked
    to, one entry per arrow edge.
    """

    id: str
    kind: str
    lhs: tuple[str, ...] = ()
    rhs: tuple[str, ...] = ()


@dataclass(frozen=True)
class Rule:
    name: str
    lhs: AhpGraph
    rhs: AhpGraph
    arrow: tuple[ArrowPort, ...] = ()
    condition: object = None

    def arrow_connected(self) -> set[str]:
        return {p for a in self.arrow for p in a.lhs}

    def arrow_edge_id(self, a: ArrowPort, side: str, i: int) -> str:
        return f"{self.name}:{a.id}:{side}{i}"

    def as_ahp(self) -> AhpGraph:
        """The rule as a single hierarchical graph: L, R and the arrow node side by side."""
        b = GraphBuilder()
        for side in (self.lhs.top, self.rhs.top):
            b.nodes.update(side.nodes)
            b.ports.update(side.ports)
            b.edges.update(side.edges)
        arrow_id = f"{self.name}:{ARROW_NODE}"
        attrs = {NAME: ARROW_NODE}
        b.node(arrow_id, Record(attrs), [(f"{self.name}:{a.id}", Record({NAME: a.id, "Type": a.kind})) for a in self.arrow])
        for a in self.arrow:
            for i, p in enumerate(a.lhs):
                b.edge(self.arrow_edge_id(a, "l", i), f"{self.name}:{a.id}", p, Record({NAME: "arrow"}))
            for i, p in enumerate(a.rhs):
                b.edge(self.arrow_edge_id(a, "r", i), f"{self.name}:{a.id}", p, Record({NAME: "arrow"}))
        ladders = dict(self.lhs.ladders)
        ladders.update(self.rhs.ladders)
        return AhpGraph(b.build(), ladders)


def rule_from_graphs(name: str, lhs: PortGraph | AhpGraph, rhs: PortGraph | AhpGraph, arrow=(), condition=None) -> Rule:
    lhs = lhs if isinstance(lhs, AhpGraph) else AhpGraph.flat(lhs)
    rhs = rhs if isinstance(rhs, AhpGraph) else AhpGraph.flat(rhs)
    return Rule(name, lhs, rhs, tuple(arrow), condition)
