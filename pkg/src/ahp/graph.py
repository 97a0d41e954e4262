"""Signatures, records and flat attributed port graphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .expr import AttrVar, BinOp, UnOp, Var, free_vars, is_base, normalize

NAME = "Name"
INTERFACE = "Interface"
ORIENTED = "Oriented"


@dataclass(frozen=True)
class Signature:
    """Names available to records and rules.

    An empty ``attributes`` set leaves record keys unconstrained.
    """

    attributes: frozenset[str] = frozenset()
    attribute_vars: frozenset[str] = frozenset()
    values: frozenset[str] = frozenset({"number", "string", "boolean"})
    value_vars: frozenset[str] = frozenset()
    graph_vars: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def violations(self) -> list[str]:
        out = []
        sets = {
            "attributes": set(self.attributes),
            "attribute variables": set(self.attribute_vars),
            "values": set(self.values),
            "value variables": set(self.value_vars),
            "graph variables": set(self.graph_vars),
        }
        names = list(sets)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                common = sets[a] & sets[b]
                if common:
                    out.append(f"signature: {a} and {b} overlap on {sorted(common)}")
        for g, iface in self.graph_vars.items():
            if not isinstance(iface, tuple):
                out.append(f"signature: graph variable {g} has no interface list")
        return out


EMPTY_SIGNATURE = Signature()


class Record:
    """An ordered list of (attribute, value) pairs labelling a graph element.

    Equality ignores pair order. Keys are strings or :class:`AttrVar`.
    Duplicate keys are kept so that validation can report them.
    """

    __slots__ = ("pairs", "_hash")

    def __init__(self, pairs: Iterable[tuple[object, object]] | Mapping = ()):
        if isinstance(pairs, Mapping):
            pairs = pairs.items()
        self.pairs = tuple((k, normalize(v)) for k, v in pairs)
        self._hash = None

    @classmethod
    def of(cls, name=None, **attrs) -> "Record":
        pairs = [] if name is None else [(NAME, name)]
        pairs.extend(attrs.items())
        return cls(pairs)

    def get(self, key, default=None):
        for k, v in self.pairs:
            if k == key:
                return v
        return default

    def __getitem__(self, key):
        for k, v in self.pairs:
            if k == key:
                return v
        raise KeyError(key)

    def __contains__(self, key) -> bool:
        return any(k == key for k, _ in self.pairs)

    @property
    def name(self):
        return self.get(NAME)

    def keys(self) -> list:
        return [k for k, _ in self.pairs]

    def with_(self, **attrs) -> "Record":
        """Copy with attributes replaced or appended."""
        out = dict(self.pairs)
        out.update((k, normalize(v)) for k, v in attrs.items())
        return Record(out)

    def _canon(self):
        return frozenset((k, type(v).__name__, v) for k, v in self.pairs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Record):
            return NotImplemented
        return len(self.pairs) == len(other.pairs) and self._canon() == other._canon()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._canon())
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self.pairs)
        return f"Record({inner})"

    def variables(self) -> set[str]:
        out: set[str] = set()
        for _, v in self.pairs:
            out |= free_vars(v)
        return out

    def attr_vars(self) -> set[str]:
        return {k.name for k, _ in self.pairs if isinstance(k, AttrVar)}

    def is_concrete(self) -> bool:
        return all(is_base(v) for _, v in self.pairs) and not self.attr_vars()


def record_get(r: Record, key):
    """Value bound to ``key`` in ``r``, or ``None`` when absent."""
    return r.get(key)


def atts(r: Record) -> set:
    return set(r.keys())


@dataclass(frozen=True)
class Node:
    record: Record
    ports: tuple[str, ...] = ()


@dataclass(frozen=True)
class Port:
    node: str
    record: Record


@dataclass(frozen=True)
class Edge:
    ends: tuple[str, str]
    record: Record

    @property
    def oriented(self) -> bool:
        return self.record.get(ORIENTED) is True


@dataclass(frozen=True)
class PortGraph:
    """A flat port graph. Treat instances as immutable values.

    ``Node.ports`` gives attachment order; the node Interface is derived
    from it and never stored in the record.
    """

    nodes: Mapping[str, Node] = field(default_factory=dict)
    ports: Mapping[str, Port] = field(default_factory=dict)
    edges: Mapping[str, Edge] = field(default_factory=dict)

    def node_interface(self, n: str) -> tuple:
        return tuple(self.ports[p].record.get(NAME) for p in self.nodes[n].ports)

    def node_label(self, n: str) -> Record:
        """Node record with its derived Interface attribute."""
        return Record(self.nodes[n].record.pairs + ((INTERFACE, self.node_interface(n)),))

    def incident(self) -> dict[str, list[str]]:
        """Port id -> ids of incident edges (a loop is listed once)."""
        inc: dict[str, list[str]] = {p: [] for p in self.ports}
        for eid, e in self.edges.items():
            a, b = e.ends
            inc.setdefault(a, []).append(eid)
            if b != a:
                inc.setdefault(b, []).append(eid)
        return inc

    def degree(self, p: str) -> int:
        return sum(1 for e in self.edges.values() if p in e.ends)

    def element_ids(self) -> set[str]:
        return set(self.nodes) | set(self.ports) | set(self.edges)

    def size(self) -> int:
        return len(self.nodes) + len(self.ports) + len(self.edges)

    def records(self) -> Iterator[tuple[str, Record]]:
        for n, node in self.nodes.items():
            yield n, node.record
        for p, port in self.ports.items():
            yield p, port.record
        for e, edge in self.edges.items():
            yield e, edge.record


def interface(g: PortGraph) -> list[str]:
    """Free ports of ``g`` (no incident edge), ordered by port Name then id."""
    used = set()
    for e in g.edges.values():
        used.update(e.ends)
    free = [p for p in g.ports if p not in used]
    return sorted(free, key=lambda p: (str(g.ports[p].record.get(NAME)), p))


def interface_names(g: PortGraph) -> list:
    return [g.ports[p].record.get(NAME) for p in interface(g)]


class GraphBuilder:
    """Mutable helper for assembling a :class:`PortGraph`."""

    def __init__(self, g: PortGraph | None = None):
        self.nodes: dict[str, Node] = dict(g.nodes) if g else {}
        self.ports: dict[str, Port] = dict(g.ports) if g else {}
        self.edges: dict[str, Edge] = dict(g.edges) if g else {}

    def node(self, nid: str, record: Record | Mapping, ports: Iterable = ()) -> str:
        """Add a node. ``ports`` holds ``(port_id, record)`` pairs or bare port ids."""
        record = record if isinstance(record, Record) else Record(record)
        pids = []
        for item in ports:
            if isinstance(item, str):
                pid, prec = item, Record.of(item)
            else:
                pid, prec = item
                prec = prec if isinstance(prec, Record) else Record(prec)
            self.ports[pid] = Port(nid, prec)
            pids.append(pid)
        self.nodes[nid] = Node(record, tuple(pids))
        return nid

    def edge(self, eid: str, a: str, b: str, record: Record | Mapping | None = None) -> str:
        if record is None:
            record = Record.of("edge")
        record = record if isinstance(record, Record) else Record(record)
        self.edges[eid] = Edge((a, b), record)
        return eid

    def remove_node(self, nid: str) -> None:
        node = self.nodes.pop(nid)
        for p in node.ports:
            self.ports.pop(p, None)

    def build(self) -> PortGraph:
        return PortGraph(dict(self.nodes), dict(self.ports), dict(self.edges))


# -- validation ----------------------------------------------------------------


def _record_violations(where: str, r: Record, sig: Signature, allow_vars: bool) -> list[str]:
    out = []
    keys = r.keys()
    names = [k for k in keys if k == NAME]
    if not names:
        out.append(f"{where}: missing Name")
    elif len(names) > 1:
        out.append(f"{where}: Name occurs more than once")
    seen = set()
    for k in keys:
        if k in seen and k != NAME:
            out.append(f"{where}: duplicate attribute {k}")
        seen.add(k)
    if INTERFACE in keys:
        out.append(f"{where}: Interface is derived and must not be stored")
    for k, v in r.pairs:
        if isinstance(k, AttrVar):
            if not allow_vars:
                out.append(f"{where}: attribute variable {k.name} in a subject graph")
            elif k.name not in sig.attribute_vars:
                out.append(f"{where}: undeclared attribute variable {k.name}")
        elif not isinstance(k, str):
            out.append(f"{where}: bad attribute key {k!r}")
        elif sig.attributes and k not in sig.attributes and k != NAME:
            out.append(f"{where}: undeclared attribute {k}")
        if isinstance(v, (Var, BinOp, UnOp)):
            fv = free_vars(v)
            if fv and not allow_vars:
                out.append(f"{where}: variable {sorted(fv)[0]} in a subject graph")
            for x in sorted(fv):
                if allow_vars and x not in sig.value_vars:
                    out.append(f"{where}: undeclared value variable {x}")
        elif not is_base(v):
            out.append(f"{where}: value of {k} is not a number, string or boolean")
    return out


def validate_port_graph(g: PortGraph, sig: Signature = EMPTY_SIGNATURE, allow_vars: bool = False) -> list[str]:
    """List every structural and record violation in ``g`` (empty when well formed)."""
    out: list[str] = []
    for n, node in g.nodes.items():
        out += _record_violations(f"node {n}", node.record, sig, allow_vars)
        for p in node.ports:
            if p not in g.ports:
                out.append(f"node {n}: attached port {p} does not exist")
            elif g.ports[p].node != n:
                out.append(f"node {n}: port {p} is attached to {g.ports[p].node}")
        if len(set(node.ports)) != len(node.ports):
            out.append(f"node {n}: port listed twice")
    for p, port in g.ports.items():
        out += _record_violations(f"port {p}", port.record, sig, allow_vars)
        if port.node not in g.nodes:
            out.append(f"port {p}: attached to missing node {port.node}")
        elif p not in g.nodes[port.node].ports:
            out.append(f"port {p}: missing from the port list of {port.node}")
    for e, edge in g.edges.items():
        out += _record_violations(f"edge {e}", edge.record, sig, allow_vars)
        if len(edge.ends) != 2:
            out.append(f"edge {e}: must connect exactly two port endpoints")
            continue
        for p in edge.ends:
            if p not in g.ports:
                out.append(f"edge {e}: dangling endpoint {p}")
        o = edge.record.get(ORIENTED)
        if o is not None and is_base(o) and not isinstance(o, bool):
            out.append(f"edge {e}: Oriented must be a boolean")
    clash = set(g.nodes) & set(g.ports) | set(g.nodes) & set(g.edges) | set(g.ports) & set(g.edges)
    for x in sorted(clash):
        out.append(f"id {x} used by more than one element")
    if not out:
        out += schema_violations(
            [(f"node {n}", g.node_label(n)) for n in g.nodes]
            + [(f"port {p}", port.record) for p, port in g.ports.items()]
            + [(f"edge {e}", edge.record) for e, edge in g.edges.items()]
        )
    return out


def schema_violations(labelled: Iterable[tuple[str, Record]]) -> list[str]:
    """Equal concrete Names must carry equal key sets and, on nodes, equal Interfaces."""
    out = []
    first: dict[tuple, tuple[str, Record]] = {}
    for where, r in labelled:
        name = r.get(NAME)
        if not is_base(name):
            continue
        kind = where.split()[0]
        key = (kind, type(name).__name__, name)
        if key not in first:
            first[key] = (where, r)
            continue
        w0, r0 = first[key]
        if kind == "node":
            i0, i1 = r0.get(INTERFACE), r.get(INTERFACE)
            if i0 != i1:
                out.append(f"{where}: interface mismatch with {w0} (Name {name!r}: {list(i1)} vs {list(i0)})")
        k0 = {k for k in r0.keys() if not isinstance(k, AttrVar)}
        k1 = {k for k in r.keys() if not isinstance(k, AttrVar)}
        if not (r0.attr_vars() or r.attr_vars()) and k0 != k1:
            out.append(f"{where}: attributes {sorted(map(str, k1))} differ from {w0} with the same Name {name!r}")
    return out
