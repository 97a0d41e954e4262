"""Finding matches of a rule's left-hand side in a hierarchical host graph.

Two independent routes live here. :func:`find_matches` is a backtracking
search (rarest Name first, then ports by interface, then edges, then ladders).
:func:`brute_force_matches` enumerates every injective element map and keeps
those accepted by :func:`check_match`, which replays the morphism laws
directly; it is the oracle for the search.
"""

from __future__ import annotations

import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .expr import AttrVar, EvalError, Var, evaluate, is_base, same_value
from .graph import NAME, PortGraph, Record
from .hierarchy import AhpGraph, GraphVar, LadderValue
from .graph import interface_names
from .iso import isomorphic
from .rule import Rule

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Morphism:
    """Injective element maps from a pattern into a host, across all depths.

    ``ladder_map`` pairs each laddered pattern node with its host node; the
    sub-morphism for that ladder is the restriction of the element maps to
    the ladder's ids. ``bindings`` maps value variables to base values,
    attribute variables to attribute names and graph variables to host
    ladder graphs.
    """

    node_map: Mapping[str, str] = field(default_factory=dict)
    port_map: Mapping[str, str] = field(default_factory=dict)
    edge_map: Mapping[str, str] = field(default_factory=dict)
    ladder_map: Mapping[str, str] = field(default_factory=dict)
    bindings: Mapping[str, object] = field(default_factory=dict)

    def key(self) -> tuple:
        attr_b = tuple(sorted((k, v) for k, v in self.bindings.items() if isinstance(v, str) and k.startswith("@")))
        return (
            tuple(sorted(self.node_map.values())),
            tuple(sorted(self.node_map.items())),
            tuple(sorted(self.port_map.items())),
            tuple(sorted(self.edge_map.items())),
            attr_b,
        )


@dataclass(frozen=True)
class Match:
    morphism: Morphism
    host: AhpGraph
    rule: str = ""

    @property
    def bindings(self) -> Mapping[str, object]:
        return self.morphism.bindings

    def image(self) -> set[str]:
        """Ids in g(L), including the whole subtree under every matched laddered node."""
        m = self.morphism
        out = set(m.node_map.values()) | set(m.port_map.values()) | set(m.edge_map.values())
        for h in m.ladder_map.values():
            lad = _find_ladder(self.host, h)
            if isinstance(lad, AhpGraph):
                out |= lad.all_ids()
        return out

    def key(self) -> tuple:
        return self.morphism.key()


def _find_ladder(g: AhpGraph, n: str):
    for _, comp in g.components():
        if n in comp.ladders:
            return comp.ladders[n]
    return None


# Attribute-variable bindings are stored under "@name" so they never collide
# with value variables in the same environment.
def _akey(name: str) -> str:
    return "@" + name


def public_bindings(env: Mapping[str, object]) -> dict[str, object]:
    """Bindings keyed by plain variable name."""
    return {k[1:] if k.startswith("@") else k: v for k, v in env.items()}


def eval_condition(cond, m, diagnostics: list[str] | None = None) -> bool:
    """Evaluate a rule condition under a match's bindings.

    A missing condition is true. Unbound variables, type errors and division
    by zero make the condition false and add a diagnostic.
    """
    if cond is None:
        return True
    env = m.bindings if isinstance(m, (Morphism, Match)) else m
    try:
        val = evaluate(cond, env)
    except EvalError as exc:
        msg = f"condition failed to evaluate: {exc}"
        log.debug(msg)
        if diagnostics is not None:
            diagnostics.append(msg)
        return False
    if not isinstance(val, bool):
        msg = f"condition evaluated to non-boolean {val!r}"
        if diagnostics is not None:
            diagnostics.append(msg)
        return False
    return val


# -- search -------------------------------------------------------------------


class _State:
    __slots__ = ("nodes", "ports", "edges", "ladders", "env", "deferred", "used")

    def __init__(self):
        self.nodes: dict[str, str] = {}
        self.ports: dict[str, str] = {}
        self.edges: dict[str, str] = {}
        self.ladders: dict[str, str] = {}
        self.env: dict[str, object] = {}
        self.deferred: list[tuple[object, object]] = []
        self.used: set[str] = set()

    def copy(self) -> "_State":
        s = _State()
        s.nodes = dict(self.nodes)
        s.ports = dict(self.ports)
        s.edges = dict(self.edges)
        s.ladders = dict(self.ladders)
        s.env = dict(self.env)
        s.deferred = list(self.deferred)
        s.used = set(self.used)
        return s


def _unify_value(pv, hv, st: _State) -> bool:
    if isinstance(pv, tuple):
        if not isinstance(hv, tuple) or len(pv) != len(hv):
            return False
        return all(_unify_value(a, b, st) for a, b in zip(pv, hv))
    if is_base(pv):
        return same_value(pv, hv)
    if isinstance(pv, Var):
        if pv.name in st.env:
            return same_value(st.env[pv.name], hv)
        if not is_base(hv):
            return False
        st.env[pv.name] = hv
        return True
    st.deferred.append((pv, hv))
    return True


def _unify_record(pat: Record, host: Record, st: _State) -> Iterator[_State]:
    """Yield extensions of ``st`` under which ``pat`` instantiates to ``host``."""
    if len(pat.pairs) != len(host.pairs):
        return
    base = st.copy()
    host_map = dict(host.pairs)
    if len(host_map) != len(host.pairs):
        return
    var_pairs = []
    used_keys = set()
    for k, v in pat.pairs:
        if isinstance(k, AttrVar):
            var_pairs.append((k, v))
            continue
        if k not in host_map or k in used_keys:
            return
        used_keys.add(k)
        if not _unify_value(v, host_map[k], base):
            return
    if not var_pairs:
        yield base
        return
    rest = [k for k in host_map if k not in used_keys]
    for perm in itertools.permutations(rest):
        s = base.copy()
        ok = True
        for (k, v), hk in zip(var_pairs, perm):
            ak = _akey(k.name)
            if ak in s.env:
                if s.env[ak] != hk:
                    ok = False
                    break
            else:
                s.env[ak] = hk
            if not _unify_value(v, host_map[hk], s):
                ok = False
                break
        if ok:
            yield s


def _node_order(pat: PortGraph, host: PortGraph) -> list[str]:
    counts = Counter(n.record.get(NAME) for n in host.nodes.values() if is_base(n.record.get(NAME)))

    def rarity(n):
        name = pat.nodes[n].record.get(NAME)
        c = counts.get(name, 0) if is_base(name) else len(host.nodes)
        return (c, n)

    return sorted(pat.nodes, key=rarity)


def _match_ports(pat: PortGraph, host: PortGraph, pports: list[str], hports: list[str], st: _State) -> Iterator[_State]:
    if not pports:
        yield st
        return
    p, rest = pports[0], pports[1:]
    prec = pat.ports[p].record
    pname = prec.get(NAME)
    for q in hports:
        if q in st.used:
            continue
        hrec = host.ports[q].record
        if is_base(pname) and not same_value(pname, hrec.get(NAME)):
            continue
        for s in _unify_record(prec, hrec, st):
            s.ports[p] = q
            s.used.add(q)
            yield from _match_ports(pat, host, rest, hports, s)


def _match_nodes(pat: AhpGraph, host: AhpGraph, order: list[str], st: _State) -> Iterator[_State]:
    if not order:
        yield st
        return
    n, rest = order[0], order[1:]
    pg, hg = pat.top, host.top
    pnode = pg.nodes[n]
    pname = pnode.record.get(NAME)
    plabel = pg.node_label(n)
    laddered = n in pat.ladders
    for h, hnode in hg.nodes.items():
        if h in st.used or len(hnode.ports) != len(pnode.ports):
            continue
        if laddered != (h in host.ladders):
            continue
        if is_base(pname) and not same_value(pname, hnode.record.get(NAME)):
            continue
        for s in _unify_record(plabel, hg.node_label(h), st):
            s.nodes[n] = h
            s.used.add(h)
            for s2 in _match_ports(pg, hg, list(pnode.ports), list(hnode.ports), s):
                yield from _match_nodes(pat, host, rest, s2)


def _match_edges(pg: PortGraph, hg: PortGraph, pedges: list[str], st: _State, by_ends) -> Iterator[_State]:
    if not pedges:
        yield st
        return
    e, rest = pedges[0], pedges[1:]
    pe = pg.edges[e]
    a, b = st.ports[pe.ends[0]], st.ports[pe.ends[1]]
    for f in by_ends.get(frozenset((a, b)), ()):
        if f in st.used:
            continue
        he = hg.edges[f]
        if he.ends != (a, b) and (he.oriented or he.ends != (b, a)):
            continue
        for s in _unify_record(pe.record, he.record, st):
            s.edges[e] = f
            s.used.add(f)
            yield from _match_edges(pg, hg, rest, s, by_ends)


def _edge_index(g: PortGraph) -> dict[frozenset, list[str]]:
    idx: dict[frozenset, list[str]] = {}
    for f, edge in g.edges.items():
        idx.setdefault(frozenset(edge.ends), []).append(f)
    return idx


def _match_level(pat: AhpGraph, host: AhpGraph, st: _State, whole: bool, check=None) -> Iterator[_State]:
    """Match ``pat.top`` into ``host.top`` and recurse into ladders.

    ``whole`` demands that every host element at this level is covered, as a
    ladder pattern must account for the entire host ladder.
    """
    if whole and (
        len(pat.top.nodes) != len(host.top.nodes)
        or len(pat.top.ports) != len(host.top.ports)
        or len(pat.top.edges) != len(host.top.edges)
    ):
        return
    by_ends = _edge_index(host.top)
    for s in _match_nodes(pat, host, _node_order(pat.top, host.top), st):
        for s2 in _match_edges(pat.top, host.top, sorted(pat.top.edges), s, by_ends):
            if check is not None and not check(s2):
                continue
            yield from _match_ladders(pat, host, sorted(pat.ladders), s2)


def _match_ladders(pat: AhpGraph, host: AhpGraph, todo: list[str], st: _State) -> Iterator[_State]:
    if not todo:
        yield st
        return
    n, rest = todo[0], todo[1:]
    h = st.nodes[n]
    for s in _ladder_states(pat.ladders[n], host.ladders[h], st):
        s.ladders[n] = h
        yield from _match_ladders(pat, host, rest, s)


def _ladder_states(plad: LadderValue, hlad: LadderValue, st: _State) -> Iterator[_State]:
    if not isinstance(hlad, AhpGraph):
        return
    if isinstance(plad, GraphVar):
        if sorted(map(str, plad.interface)) != sorted(map(str, interface_names(hlad.top))):
            return
        s = st.copy()
        if plad.name in s.env:
            prev = s.env[plad.name]
            if not (isinstance(prev, AhpGraph) and isomorphic(prev, hlad)):
                return
        else:
            s.env[plad.name] = hlad
        yield s
        return
    yield from _match_level(plad, hlad, st.copy(), whole=True)


def _finish(st: _State) -> bool:
    for expr, hv in st.deferred:
        try:
            if not same_value(evaluate(expr, st.env), hv):
                return False
        except EvalError:
            return False
    return True


def _dangling_ok(rule: Rule, host: AhpGraph, st: _State) -> bool:
    """Ports of L not linked to the arrow node may carry only matched edges."""
    arrow = rule.arrow_connected()
    image_edges = set(st.edges.values())
    inc = host.top.incident()
    for p in rule.lhs.top.ports:
        if p in arrow:
            continue
        for f in inc.get(st.ports[p], ()):
            if f not in image_edges:
                return False
    return True


def find_matches(rule: Rule, host: AhpGraph) -> list[Match]:
    """All matches of ``rule.lhs`` in ``host``, deduplicated and canonically ordered.

    The pattern's top level is matched against the host's top level; ladders
    are matched recursively and must be covered completely.
    """
    found: dict[tuple, Match] = {}
    for st in _match_level(rule.lhs, host, _State(), whole=False, check=lambda s: _dangling_ok(rule, host, s)):
        if not _finish(st):
            continue
        if not eval_condition(rule.condition, st.env):
            continue
        m = Morphism(st.nodes, st.ports, st.edges, st.ladders, st.env)
        found.setdefault(m.key(), Match(m, host, rule.name))
    return [found[k] for k in sorted(found)]


def match_ladder(pattern_ladder: LadderValue, host_ladder: AhpGraph, env: Mapping[str, object] | None = None):
    """First sub-morphism of ``pattern_ladder`` onto ``host_ladder``, or ``None``.

    A graph variable binds to the entire host ladder when the interfaces agree.
    """
    st = _State()
    st.env = dict(env or {})
    for s in _ladder_states(pattern_ladder, host_ladder, st):
        if _finish(s):
            return Morphism(s.nodes, s.ports, s.edges, s.ladders, s.env)
    return None


# -- law checking and the brute-force oracle -----------------------------------


def _resolve_record(pat: Record, env: Mapping[str, object]):
    """Instantiate a pattern record under ``env``; ``None`` if something is unbound."""
    out = {}
    for k, v in pat.pairs:
        if isinstance(k, AttrVar):
            k = env.get(_akey(k.name))
            if k is None:
                return None
        if k in out:
            return None
        if isinstance(v, tuple):
            vals = []
            for x in v:
                try:
                    vals.append(evaluate(x, env) if not is_base(x) else x)
                except EvalError:
                    return None
            out[k] = tuple(vals)
            continue
        try:
            out[k] = v if is_base(v) else evaluate(v, env)
        except EvalError:
            return None
    return out


def _records_agree(pat: Record, host: Record, env) -> bool:
    inst = _resolve_record(pat, env)
    if inst is None:
        return False
    hm = dict(host.pairs)
    if set(inst) != set(hm) or len(hm) != len(host.pairs):
        return False
    for k, v in inst.items():
        hv = hm[k]
        if isinstance(v, tuple):
            if not (isinstance(hv, tuple) and len(v) == len(hv) and all(same_value(a, b) for a, b in zip(v, hv))):
                return False
        elif not same_value(v, hv):
            return False
    return True


def check_match(rule: Rule, host: AhpGraph, m: Morphism, dangling: bool = True) -> list[str]:
    """Replay every morphism and match law for ``m``; return the problems found."""
    probs: list[str] = []
    env = m.bindings
    for label, mp in (("node", m.node_map), ("port", m.port_map), ("edge", m.edge_map), ("ladder", m.ladder_map)):
        if len(set(mp.values())) != len(mp):
            probs.append(f"{label} map is not injective")

    def walk(pat: AhpGraph, hst: AhpGraph, whole: bool) -> None:
        pg, hg = pat.top, hst.top
        for n in pg.nodes:
            if n not in m.node_map:
                probs.append(f"node {n} unmapped")
                continue
            h = m.node_map[n]
            if h not in hg.nodes:
                probs.append(f"node {n} maps outside the corresponding host graph")
                continue
            if not _records_agree(pg.node_label(n), hg.node_label(h), env):
                probs.append(f"node {n} record disagrees with {h}")
            if (n in pat.ladders) != (h in hst.ladders):
                probs.append(f"node {n} ladder status differs from {h}")
        for p, port in pg.ports.items():
            q = m.port_map.get(p)
            if q is None or q not in hg.ports:
                probs.append(f"port {p} unmapped or outside the corresponding host graph")
                continue
            if hg.ports[q].node != m.node_map.get(port.node):
                probs.append(f"port {p} attachment not preserved")
            if not _records_agree(port.record, hg.ports[q].record, env):
                probs.append(f"port {p} record disagrees with {q}")
        for e, edge in pg.edges.items():
            f = m.edge_map.get(e)
            if f is None or f not in hg.edges:
                probs.append(f"edge {e} unmapped or outside the corresponding host graph")
                continue
            he = hg.edges[f]
            a, b = (m.port_map.get(x) for x in edge.ends)
            if not (he.ends == (a, b) or (not he.oriented and he.ends == (b, a))):
                probs.append(f"edge {e} connection not preserved")
            if not _records_agree(edge.record, he.record, env):
                probs.append(f"edge {e} record disagrees with {f}")
        if whole:
            covered = set(m.node_map.values()) | set(m.port_map.values()) | set(m.edge_map.values())
            if not hg.element_ids() <= covered:
                probs.append("ladder pattern does not cover the host ladder")
        for n, plad in pat.ladders.items():
            h = m.node_map.get(n)
            if h is None or h not in hst.ladders:
                continue
            if m.ladder_map.get(n) != h:
                probs.append(f"ladder of {n} not recorded in ladder map")
            hlad = hst.ladders[h]
            if isinstance(plad, GraphVar):
                bound = env.get(plad.name)
                if not isinstance(hlad, AhpGraph) or not isinstance(bound, AhpGraph):
                    probs.append(f"graph variable {plad.name} unbound")
                elif bound is not hlad and not isomorphic(bound, hlad):
                    probs.append(f"graph variable {plad.name} bound inconsistently")
                elif sorted(map(str, plad.interface)) != sorted(map(str, interface_names(hlad.top))):
                    probs.append(f"graph variable {plad.name} interface disagrees")
            elif isinstance(hlad, AhpGraph):
                walk(plad, hlad, True)

    walk(rule.lhs, host, False)
    if dangling:
        arrow = rule.arrow_connected()
        image_edges = set(m.edge_map.values())
        inc = host.top.incident()
        for p in rule.lhs.top.ports:
            if p in arrow or p not in m.port_map:
                continue
            if any(f not in image_edges for f in inc.get(m.port_map[p], ())):
                probs.append(f"port {p} would leave a dangling edge")
    if not eval_condition(rule.condition, env):
        probs.append("condition does not hold")
    return probs


def _levels(g: AhpGraph) -> dict[str, tuple]:
    """Element id -> path of laddered node ids above it."""
    out = {}
    for path, comp in g.components():
        for x in comp.top.element_ids():
            out[x] = path
    return out


def brute_force_matches(rule: Rule, host: AhpGraph, max_size: int = 12) -> list[Match]:
    """All matches by exhaustive enumeration of injective element maps. Oracle only."""
    if host.size() > max_size:
        raise ValueError(f"host has {host.size()} elements, more than max_size={max_size}")
    pat = rule.lhs
    pcomp = list(pat.components())
    hcomp = list(host.components())
    pnodes = [(path, n) for path, c in pcomp for n in c.top.nodes]
    pports = [(path, p, c.top.ports[p].node) for path, c in pcomp for p in c.top.ports]
    pedges = [(path, e, c.top.edges[e]) for path, c in pcomp for e in c.top.edges]
    hnodes = [(path, n) for path, c in hcomp for n in c.top.nodes]
    hport_owner = {p: c.top.ports[p].node for _, c in hcomp for p in c.top.ports}
    hports = list(hport_owner)
    hedges = {e: c.top.edges[e] for _, c in hcomp for e in c.top.edges}
    hpath = {n: path for path, n in hnodes}

    attr_vars = sorted(pat.attr_vars())
    attr_names = sorted({k for _, c in hcomp for _, r in c.top.records() for k in r.keys()}, key=str)

    found: dict[tuple, Match] = {}
    for nimg in itertools.permutations([n for _, n in hnodes], len(pnodes)):
        nmap = {n: h for (_, n), h in zip(pnodes, nimg)}
        # depth preservation: a pattern node under ladder path (a, b) maps under (f(a), f(b))
        if any(hpath[h] != tuple(nmap[x] for x in path) for (path, _), h in zip(pnodes, nimg)):
            continue
        for pimg in itertools.permutations(hports, len(pports)):
            if any(hport_owner[q] != nmap[owner] for (_, _, owner), q in zip(pports, pimg)):
                continue
            pmap = {p: q for (_, p, _), q in zip(pports, pimg)}
            for eimg in itertools.permutations(list(hedges), len(pedges)):
                ok = True
                for (_, _, edge), f in zip(pedges, eimg):
                    a, b = pmap[edge.ends[0]], pmap[edge.ends[1]]
                    he = hedges[f]
                    if not (he.ends == (a, b) or (not he.oriented and he.ends == (b, a))):
                        ok = False
                        break
                if not ok:
                    continue
                emap = {e: f for (_, e, _), f in zip(pedges, eimg)}
                lmap = {n: nmap[n] for _, c in pcomp for n in c.ladders}
                for assign in itertools.product(attr_names, repeat=len(attr_vars)):
                    env = {_akey(a): k for a, k in zip(attr_vars, assign)}
                    _derive_bindings(pat, host, nmap, pmap, emap, env)
                    m = Morphism(nmap, pmap, emap, lmap, env)
                    if not check_match(rule, host, m):
                        found.setdefault(m.key(), Match(m, host, rule.name))
    return [found[k] for k in sorted(found)]


def _derive_bindings(pat: AhpGraph, host: AhpGraph, nmap, pmap, emap, env: dict) -> None:
    """Bind each variable to the host value at its first plain occurrence."""
    hcomps = {x: c for _, c in host.components() for x in c.top.element_ids()}

    def take(prec: Record, hrec: Record) -> None:
        hm = dict(hrec.pairs)
        for k, v in prec.pairs:
            if isinstance(k, AttrVar):
                k = env.get(_akey(k.name))
            if k not in hm:
                continue
            hv = hm[k]
            if isinstance(v, Var) and v.name not in env and is_base(hv):
                env[v.name] = hv
            elif isinstance(v, tuple) and isinstance(hv, tuple):
                for a, b in zip(v, hv):
                    if isinstance(a, Var) and a.name not in env:
                        env[a.name] = b

    for _, c in pat.components():
        for n in c.top.nodes:
            h = nmap[n]
            take(c.top.node_label(n), hcomps[h].top.node_label(h))
        for p, port in c.top.ports.items():
            take(port.record, hcomps[pmap[p]].top.ports[pmap[p]].record)
        for e, edge in c.top.edges.items():
            take(edge.record, hcomps[emap[e]].top.edges[emap[e]].record)
        for n, lad in c.ladders.items():
            if isinstance(lad, GraphVar) and lad.name not in env:
                hl = hcomps[nmap[n]].ladders.get(nmap[n])
                if hl is not None:
                    env[lad.name] = hl
