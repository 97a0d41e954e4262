"""Rule validation and the rewrite step with arrow-node rewiring."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from .expr import AttrVar, EvalError, free_vars, is_base, substitute
from .graph import NAME, Edge, Node, Port, PortGraph, Record, Signature
from .hierarchy import AhpGraph, GraphVar, flatten, flatten_rule, validate_ahp
from .iso import isomorphic
from .matching import Match, Morphism, check_match
from .rule import BLACKHOLE, BRIDGE, KINDS, WIRE, Rule

WIRE_RECORD = Record({NAME: "wire"})


class RewriteError(ValueError):
    pass


@dataclass(frozen=True)
class Rewire:
    """What happened to one external edge (or one wire pairing) during a step."""

    kind: str
    old_edge: str | None
    old_ends: tuple[str, str] | None
    new_edges: tuple[tuple[str, str, str], ...]


@dataclass(frozen=True)
class RewriteStep:
    rule: str
    match: Match
    before: AhpGraph
    after: AhpGraph
    rewiring: tuple[Rewire, ...] = field(default_factory=tuple)


# -- validation ----------------------------------------------------------------


def rule_signature(r: Rule) -> Signature:
    """A signature declaring exactly the variables the rule uses."""
    gvars = {}
    for side in (r.lhs, r.rhs):
        for _, comp in side.components():
            for lad in comp.ladders.values():
                if isinstance(lad, GraphVar):
                    gvars.setdefault(lad.name, lad.interface)
    return Signature(
        attribute_vars=frozenset(r.lhs.attr_vars() | r.rhs.attr_vars()),
        value_vars=frozenset(r.lhs.value_vars() | r.rhs.value_vars() | free_vars(r.condition)),
        graph_vars=gvars,
    )


def validate_rule(r: Rule, sig: Signature | None = None) -> list[str]:
    """Violations of the rule and arrow-port invariants (empty when valid)."""
    sig = sig or rule_signature(r)
    out = []
    lhs_top, rhs_top = set(r.lhs.top.ports), set(r.rhs.top.ports)
    lhs_all, rhs_all = r.lhs.all_ids(), r.rhs.all_ids()
    overlap = lhs_all & rhs_all
    if overlap:
        out.append(f"lhs and rhs share element ids {sorted(overlap)}")
    seen_ids = set()
    l_use: Counter = Counter()
    for a in r.arrow:
        if a.id in seen_ids:
            out.append(f"arrow port {a.id} declared twice")
        seen_ids.add(a.id)
        if a.kind not in KINDS:
            out.append(f"arrow port {a.id}: unknown kind {a.kind!r}")
        elif a.kind == BRIDGE and (len(a.lhs) != 1 or len(a.rhs) < 1):
            out.append(f"arrow port {a.id}: bridge arity (needs one lhs edge and at least one rhs edge)")
        elif a.kind == BLACKHOLE and (len(a.lhs) < 1 or a.rhs):
            out.append(f"arrow port {a.id}: blackhole arity (needs lhs edges only)")
        elif a.kind == WIRE and (len(a.lhs) != 2 or a.rhs):
            out.append(f"arrow port {a.id}: wire arity (needs exactly two lhs edges and no rhs edge)")
        for side, ports, top, everything in (("lhs", a.lhs, lhs_top, lhs_all), ("rhs", a.rhs, rhs_top, rhs_all)):
            for p in ports:
                if p in top:
                    continue
                if p in everything:
                    out.append(f"arrow port {a.id}: cross-level arrow edge to {side} port {p}")
                else:
                    out.append(f"arrow port {a.id}: unknown {side} port {p}")
        l_use.update(a.lhs)
    for p, k in sorted(l_use.items()):
        if k > 1:
            out.append(f"lhs port {p} is linked to {k} arrow edges")
    lvars = r.lhs.value_vars()
    for x in sorted((r.rhs.value_vars() | free_vars(r.condition)) - lvars):
        out.append(f"variable {x} is not bound by the lhs")
    for x in sorted(r.rhs.attr_vars() - r.lhs.attr_vars()):
        out.append(f"attribute variable {x} is not bound by the lhs")
    lg = {}
    for _, comp in r.lhs.components():
        for lad in comp.ladders.values():
            if isinstance(lad, GraphVar):
                lg[lad.name] = lad.interface
    for _, comp in r.rhs.components():
        for lad in comp.ladders.values():
            if isinstance(lad, GraphVar):
                if lad.name not in lg:
                    out.append(f"graph variable {lad.name} is not bound by the lhs")
                elif sorted(map(str, lad.interface)) != sorted(map(str, lg[lad.name])):
                    out.append(f"graph variable {lad.name} has different interfaces in lhs and rhs")
    if not overlap and not any("unknown" in v or "cross-level" in v for v in out):
        out += ["rule graph: " + v for v in validate_ahp(r.as_ahp(), sig, allow_vars=True)]
    return out


def is_simple(r: Rule) -> bool:
    """Every bridge maps its lhs port to exactly one rhs port and no wire is used."""
    return all(a.kind == BLACKHOLE or (a.kind == BRIDGE and len(a.rhs) == 1) for a in r.arrow)


# -- instantiation -------------------------------------------------------------


class IdGen:
    """Fresh element ids avoiding a set of taken ones."""

    def __init__(self, taken):
        self.taken = set(taken)
        self.next: Counter = Counter()

    def fresh(self, prefix: str) -> str:
        while True:
            k = self.next[prefix]
            self.next[prefix] += 1
            cand = f"{prefix}{k}"
            if cand not in self.taken:
                self.taken.add(cand)
                return cand


def _inst_record(r: Record, env: Mapping[str, object]) -> Record:
    pairs = []
    for k, v in r.pairs:
        if isinstance(k, AttrVar):
            if "@" + k.name not in env:
                raise RewriteError(f"unbound attribute variable {k.name}")
            k = env["@" + k.name]
        try:
            val = substitute(v, env)
        except EvalError as exc:
            raise RewriteError(f"cannot evaluate {k}: {exc}") from exc
        if not is_base(val):
            missing = sorted(free_vars(val))
            raise RewriteError(f"unbound variable {missing[0] if missing else val!r} in attribute {k}")
        pairs.append((k, val))
    return Record(pairs)


def _copy(g: AhpGraph, env, ids: IdGen, idmap: dict[str, str]) -> AhpGraph:
    top = g.top
    for n in top.nodes:
        idmap[n] = ids.fresh("n")
    for p in top.ports:
        idmap[p] = ids.fresh("p")
    for e in top.edges:
        idmap[e] = ids.fresh("e")
    nodes = {idmap[n]: Node(_inst_record(node.record, env), tuple(idmap[p] for p in node.ports)) for n, node in top.nodes.items()}
    ports = {idmap[p]: Port(idmap[port.node], _inst_record(port.record, env)) for p, port in top.ports.items()}
    edges = {
        idmap[e]: Edge((idmap[edge.ends[0]], idmap[edge.ends[1]]), _inst_record(edge.record, env))
        for e, edge in top.edges.items()
    }
    ladders = {}
    for n in sorted(g.ladders):
        lad = g.ladders[n]
        if isinstance(lad, GraphVar):
            bound = env.get(lad.name)
            if not isinstance(bound, AhpGraph):
                raise RewriteError(f"unbound graph variable {lad.name}")
            ladders[idmap[n]] = _copy(bound, {}, ids, idmap)
        else:
            ladders[idmap[n]] = _copy(lad, env, ids, idmap)
    return AhpGraph(PortGraph(nodes, ports, edges), ladders)


def instantiate_rhs(rhs: AhpGraph, bindings: Mapping[str, object], taken=()) -> AhpGraph:
    """A concrete fresh-id copy of ``rhs`` with variables replaced by their bindings."""
    return _copy(rhs, bindings, IdGen(taken), {})


# -- the rewrite step ------------------------------------------------------------


def rewrite(r: Rule, host: AhpGraph, m: Match) -> RewriteStep:
    """Apply ``r`` at ``m`` and return the step with its rewiring log."""
    mm = m.morphism
    probs = check_match(r, host, mm)
    if probs:
        raise RewriteError(f"invalid match for rule {r.name}: {probs[0]}")
    ids = IdGen(host.all_ids())
    idmap: dict[str, str] = {}
    inst = _copy(r.rhs, mm.bindings, ids, idmap)

    img_nodes = {mm.node_map[n] for n in r.lhs.top.nodes}
    img_ports = {mm.port_map[p] for p in r.lhs.top.ports}
    img_edges = {mm.edge_map[e] for e in r.lhs.top.edges}
    top = host.top
    external = [f for f, e in top.edges.items() if f not in img_edges and (e.ends[0] in img_ports or e.ends[1] in img_ports)]

    targets: dict[str, list[str]] = {}
    for a in r.arrow:
        if a.kind == BRIDGE:
            for lp in a.lhs:
                targets.setdefault(mm.port_map[lp], []).extend(idmap[rp] for rp in a.rhs)

    def subst(x: str) -> list[str]:
        return [x] if x not in img_ports else targets.get(x, [])

    new_edges: dict[str, Edge] = {}
    log: list[Rewire] = []
    for f in external:
        edge = top.edges[f]
        made = []
        for x, y in itertools.product(subst(edge.ends[0]), subst(edge.ends[1])):
            eid = ids.fresh("e")
            new_edges[eid] = Edge((x, y), edge.record)
            made.append((eid, x, y))
        log.append(Rewire("bridge" if made else "delete", f, edge.ends, tuple(made)))

    for a in r.arrow:
        if a.kind != WIRE:
            continue
        i1, i2 = (mm.port_map[p] for p in a.lhs)
        made = []
        for x, y in itertools.product(_neighbours(top, external, i1), _neighbours(top, external, i2)):
            for xs, ys in itertools.product(subst(x), subst(y)):
                eid = ids.fresh("e")
                new_edges[eid] = Edge((xs, ys), WIRE_RECORD)
                made.append((eid, xs, ys))
        log.append(Rewire("wire", None, (i1, i2), tuple(made)))

    gone_edges = img_edges | set(external)
    nodes = {n: node for n, node in top.nodes.items() if n not in img_nodes}
    nodes.update(inst.top.nodes)
    ports = {p: port for p, port in top.ports.items() if p not in img_ports}
    ports.update(inst.top.ports)
    edges = {e: edge for e, edge in top.edges.items() if e not in gone_edges}
    edges.update(inst.top.edges)
    edges.update(new_edges)
    ladders = {n: lad for n, lad in host.ladders.items() if n not in img_nodes}
    ladders.update(inst.ladders)
    after = AhpGraph(PortGraph(nodes, ports, edges), ladders)
    return RewriteStep(r.name, m, host, after, tuple(log))


def _neighbours(g: PortGraph, external: list[str], port: str) -> list[str]:
    """Other endpoint of every external edge at ``port``, with multiplicity."""
    out = []
    for f in external:
        a, b = g.edges[f].ends
        if a == port:
            out.append(b)
        elif b == port:
            out.append(a)
    return out


def apply(r: Rule, host: AhpGraph, m: Match) -> AhpGraph:
    """Replace g(L) by a fresh instance of R and rewire external edges per the arrow node."""
    return rewrite(r, host, m).after


def flat_match(r: Rule, m: Match, flat_host: AhpGraph) -> Match:
    """The match of the flattened rule induced by ``m`` (same ids, same bindings)."""
    fr_lhs = flatten(r.lhs)
    mm = m.morphism
    fm = Morphism(
        {n: mm.node_map[n] for n in fr_lhs.nodes},
        {p: mm.port_map[p] for p in fr_lhs.ports},
        {e: mm.edge_map[e] for e in fr_lhs.edges},
        {},
        dict(mm.bindings),
    )
    return Match(fm, flat_host, r.name)


def check_flatten_commutes(r: Rule, host: AhpGraph, m: Match) -> bool:
    """Does flattening the host, stepping with the flattened rule, give flatten(apply(...))?"""
    h = apply(r, host, m)
    fr = flatten_rule(r)
    fg = AhpGraph.flat(flatten(host))
    fm = flat_match(r, m, fg)
    if check_match(fr, fg, fm.morphism):
        return False
    fh = apply(fr, fg, fm)
    return isomorphic(fh, flatten(h))
