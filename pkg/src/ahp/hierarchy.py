"""Hierarchical port graphs: ladders, levels, validation and flattening."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, Mapping, Union

from .graph import (
    EMPTY_SIGNATURE,
    NAME,
    Edge,
    Node,
    PortGraph,
    Signature,
    interface,
    schema_violations,
    validate_port_graph,
)

if TYPE_CHECKING:
    from .rule import Rule


@dataclass(frozen=True)
class GraphVar:
    """A graph-typed variable standing for an unknown ladder graph."""

    name: str
    interface: tuple[str, ...] = ()


@dataclass(frozen=True)
class AhpGraph:
    """A port graph whose nodes may hold ladders to lower-level graphs.

    Element ids are global: the top graph and every ladder graph, at every
    depth, use pairwise disjoint node, port and edge ids.
    """

    top: PortGraph = field(default_factory=PortGraph)
    ladders: Mapping[str, Union["AhpGraph", GraphVar]] = field(default_factory=dict)

    @classmethod
    def flat(cls, g: PortGraph) -> "AhpGraph":
        return cls(g, {})

    @property
    def level(self) -> int:
        return level(self)

    def components(self, path: tuple[str, ...] = ()) -> Iterator[tuple[tuple[str, ...], "AhpGraph"]]:
        """Yield ``(path, graph)`` for this graph and every concrete ladder, depth first.

        ``path`` lists the laddered node ids leading to the component.
        """
        yield path, self
        for n in sorted(self.ladders):
            lad = self.ladders[n]
            if isinstance(lad, AhpGraph):
                yield from lad.components(path + (n,))

    def graph_vars(self) -> set[str]:
        out = set()
        for _, comp in self.components():
            out |= {v.name for v in comp.ladders.values() if isinstance(v, GraphVar)}
        return out

    def value_vars(self) -> set[str]:
        out: set[str] = set()
        for _, comp in self.components():
            for _, r in comp.top.records():
                out |= r.variables()
        return out

    def attr_vars(self) -> set[str]:
        out: set[str] = set()
        for _, comp in self.components():
            for _, r in comp.top.records():
                out |= r.attr_vars()
        return out

    def has_graph_vars(self) -> bool:
        return bool(self.graph_vars())

    def all_ids(self) -> set[str]:
        out: set[str] = set()
        for _, comp in self.components():
            out |= comp.top.element_ids()
        return out

    def size(self) -> int:
        return sum(comp.top.size() for _, comp in self.components())

    def owner(self) -> dict[str, "AhpGraph"]:
        """Map every element id at every depth to the component graph holding it."""
        out = {}
        for _, comp in self.components():
            for x in comp.top.element_ids():
                out[x] = comp
        return out


LadderValue = Union[AhpGraph, GraphVar]


def level(g: LadderValue) -> int:
    if isinstance(g, GraphVar) or not g.ladders:
        return 0
    return 1 + max(level(w) for w in g.ladders.values())


def _ladder_interface_violations(where: str, host: PortGraph, n: str, lad: LadderValue, sig: Signature) -> list[str]:
    node_ports = host.nodes[n].ports
    node_names = [host.ports[p].record.get(NAME) for p in node_ports]
    out = []
    if len(set(node_names)) != len(node_names):
        out.append(f"{where}node {n}: laddered node has repeated port Names {node_names}")
    if isinstance(lad, GraphVar):
        if lad.name in sig.graph_vars and tuple(sig.graph_vars[lad.name]) != lad.interface:
            out.append(f"{where}node {n}: graph variable {lad.name} interface differs from its declaration")
        if list(lad.interface) != node_names:
            out.append(f"{where}node {n}: graph variable {lad.name} interface {list(lad.interface)} != node interface {node_names}")
        return out
    free = interface(lad.top)
    if len(free) != len(node_ports):
        out.append(
            f"{where}node {n}: interface arity mismatch (node has {len(node_ports)} ports, ladder has {len(free)} free ports)"
        )
        return out
    by_name = {}
    for p in free:
        by_name.setdefault(lad.top.ports[p].record.get(NAME), []).append(p)
    for p in node_ports:
        name = host.ports[p].record.get(NAME)
        cands = by_name.get(name, [])
        if len(cands) != 1:
            out.append(f"{where}node {n}: ladder has {len(cands)} free ports Named {name!r}")
        elif lad.top.ports[cands[0]].record != host.ports[p].record:
            out.append(f"{where}node {n}: port {p} record differs from ladder free port {cands[0]}")
    return out


def validate_ahp(g: AhpGraph, sig: Signature = EMPTY_SIGNATURE, allow_vars: bool = False) -> list[str]:
    """List violations of the hierarchical invariants at every depth (empty when valid)."""
    out: list[str] = []
    seen_instances: dict[int, str] = {}
    owners: dict[str, str] = {}

    def visit(h: AhpGraph, path: tuple[str, ...]) -> None:
        where = "" if not path else "in ladder " + "/".join(path) + ": "
        out.extend(where + v for v in validate_port_graph(h.top, sig, allow_vars))
        comp = "/".join(path) or "<top>"
        for x in h.top.element_ids():
            if x in owners:
                out.append(f"{where}id {x} also used in {owners[x]} (ladder graphs must be disjoint)")
            else:
                owners[x] = comp
        for n in sorted(h.ladders):
            lad = h.ladders[n]
            if n not in h.top.nodes:
                out.append(f"{where}ladder attached to missing node {n}")
                continue
            if isinstance(lad, GraphVar):
                if not allow_vars:
                    out.append(f"{where}node {n}: graph variable {lad.name} in a subject graph")
                elif lad.name not in sig.graph_vars and sig.graph_vars:
                    out.append(f"{where}node {n}: undeclared graph variable {lad.name}")
            elif id(lad) in seen_instances:
                out.append(f"{where}node {n}: ladder not injective (shared with {seen_instances[id(lad)]})")
                continue
            else:
                seen_instances[id(lad)] = "/".join(path + (n,))
            if not any(v.startswith(f"{where}node {n}:") for v in out):
                out.extend(_ladder_interface_violations(where, h.top, n, lad, sig))
            if isinstance(lad, AhpGraph):
                visit(lad, path + (n,))

    visit(g, ())
    if not out:
        labelled = []
        for path, comp in g.components():
            tag = "/".join(path)
            suffix = f" (in {tag})" if tag else ""
            labelled += [(f"node {n}{suffix}", comp.top.node_label(n)) for n in comp.top.nodes]
            labelled += [(f"port {p}{suffix}", port.record) for p, port in comp.top.ports.items()]
            labelled += [(f"edge {e}{suffix}", edge.record) for e, edge in comp.top.edges.items()]
        out += schema_violations(labelled)
    return out


class FlattenError(ValueError):
    pass


def flatten(g: AhpGraph) -> PortGraph:
    """Replace every laddered node by its flattened ladder, recursively.

    Edges at a port of a laddered node are redirected to the ladder's free
    port with the same Name. Element ids are preserved.
    """
    return _flatten(g)[0]


def _flatten(g: AhpGraph) -> tuple[PortGraph, dict[str, str]]:
    """Return the flat graph and the redirect map for ports of laddered top nodes."""
    if not g.ladders:
        return g.top, {}
    redirect: dict[str, str] = {}
    flat_ladders: dict[str, PortGraph] = {}
    for n in sorted(g.ladders):
        lad = g.ladders[n]
        if isinstance(lad, GraphVar):
            raise FlattenError(f"cannot flatten abstract ladder {lad.name} at node {n}")
        w, _ = _flatten(lad)
        flat_ladders[n] = w
        free = {w.ports[p].record.get(NAME): p for p in interface(w)}
        for p in g.top.nodes[n].ports:
            name = g.top.ports[p].record.get(NAME)
            if name not in free:
                raise FlattenError(f"ladder of node {n} has no free port Named {name!r}")
            redirect[p] = free[name]
    nodes: dict[str, Node] = {}
    ports = {}
    for n, node in g.top.nodes.items():
        if n in flat_ladders:
            w = flat_ladders[n]
            nodes.update(w.nodes)
            ports.update(w.ports)
        else:
            nodes[n] = node
            for p in node.ports:
                ports[p] = g.top.ports[p]
    edges: dict[str, Edge] = {}
    for e, edge in g.top.edges.items():
        a, b = edge.ends
        edges[e] = Edge((redirect.get(a, a), redirect.get(b, b)), edge.record)
    for n in g.top.nodes:
        if n in flat_ladders:
            edges.update(flat_ladders[n].edges)
    return PortGraph(nodes, ports, edges), redirect


def port_redirects(g: AhpGraph) -> dict[str, str]:
    """Map each top-level port of a laddered node to the flat port it becomes."""
    _, red = _flatten(g)
    return red


def flatten_rule(r: "Rule") -> "Rule":
    """Flatten both sides of ``r``; arrow edges follow their ports through the redirects."""
    from .rule import ArrowPort, Rule

    lflat, lred = _flatten(r.lhs)
    rflat, rred = _flatten(r.rhs)
    arrow = tuple(
        ArrowPort(a.id, a.kind, tuple(lred.get(p, p) for p in a.lhs), tuple(rred.get(p, p) for p in a.rhs))
        for a in r.arrow
    )
    return Rule(r.name, AhpGraph.flat(lflat), AhpGraph.flat(rflat), arrow, r.condition)
