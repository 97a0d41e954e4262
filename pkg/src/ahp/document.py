"""Text documents holding a signature, graphs, rules and strategies.

Example::

    signature {
      vars X;
      graphvars Body["out", "bind"];
    }

    graph g {
      node n1 {Name = "A", pay = 3.0} [p1 {Name = "p"}] ladder {
        node n2 {Name = "B"} [p2 {Name = "p"}];
      };
      node n3 {Name = "C"} [p3 {Name = "q"}];
      edge e1 p1 -- p3 {Name = "link"};
    }

    rule bump {
      lhs { node l1 {Name = "C"} [lp {Name = "q"}]; }
      rhs { node r1 {Name = "C"} [rp {Name = "q"}]; }
      arrow { bridge b: lp -> rp; }
      when true;
    }

    strategy once = try(one(bump));
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .expr import AttrVar, ExprSyntaxError, format_value, is_base, parse_expr
from .graph import Edge, Node, Port, PortGraph, Record, Signature
from .hierarchy import AhpGraph, GraphVar, validate_ahp
from .rewriting import validate_rule
from .rule import BLACKHOLE, BRIDGE, KINDS, WIRE, ArrowPort, Rule
from .strategy import Strategy, StrategySyntaxError, format_strategy, parse_strategy, rule_names


class DocumentError(ValueError):
    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + msg)
        self.line = line
        self.col = col


@dataclass
class Document:
    signature: Signature = field(default_factory=Signature)
    graphs: dict[str, AhpGraph] = field(default_factory=dict)
    rules: dict[str, Rule] = field(default_factory=dict)
    strategies: dict[str, Strategy] = field(default_factory=dict)

    def validate(self) -> list[str]:
        out = list(self.signature.violations())
        for name, g in self.graphs.items():
            out += [f"graph {name}: {v}" for v in validate_ahp(g, self.signature, allow_vars=False)]
        for name, r in self.rules.items():
            out += [f"rule {name}: {v}" for v in validate_rule(r, self.signature)]
        for name, s in self.strategies.items():
            for ref in sorted(rule_names(s) - set(self.rules)):
                out.append(f"strategy {name}: unknown rule {ref}")
        return out


# -- parsing -------------------------------------------------------------------


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def where(self, pos: int | None = None) -> tuple[int, int]:
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def error(self, msg: str, pos: int | None = None) -> DocumentError:
        return DocumentError(msg, *self.where(pos))

    def skip(self) -> None:
        t = self.text
        while self.pos < len(t):
            c = t[self.pos]
            if c.isspace():
                self.pos += 1
            elif c == "#":
                nl = t.find("\n", self.pos)
                self.pos = len(t) if nl < 0 else nl + 1
            else:
                break

    def at_end(self) -> bool:
        self.skip()
        return self.pos >= len(self.text)

    def peek(self, s: str) -> bool:
        self.skip()
        if not self.text.startswith(s, self.pos):
            return False
        if s[-1].isalnum():
            nxt = self.text[self.pos + len(s): self.pos + len(s) + 1]
            return not (nxt.isalnum() or nxt == "_")
        return True

    def accept(self, s: str) -> bool:
        if self.peek(s):
            self.pos += len(s)
            return True
        return False

    def expect(self, s: str) -> None:
        if not self.accept(s):
            found = self.text[self.pos: self.pos + 10].split("\n")[0] or "end of input"
            raise self.error(f"expected {s!r}, found {found!r}")

    def ident(self, what: str = "identifier") -> str:
        self.skip()
        t, i = self.text, self.pos
        if i < len(t) and (t[i].isalpha() or t[i] == "_"):
            j = i + 1
            while j < len(t) and (t[j].isalnum() or t[j] == "_"):
                j += 1
            self.pos = j
            return t[i:j]
        raise self.error(f"expected {what}")

    def string(self) -> str:
        self.skip()
        t, i = self.text, self.pos
        if i >= len(t) or t[i] != '"':
            raise self.error("expected a string")
        j = i + 1
        while j < len(t) and t[j] != '"':
            j += 2 if t[j] == "\\" else 1
        if j >= len(t):
            raise self.error("unterminated string")
        self.pos = j + 1
        return json.loads(t[i: j + 1])

    def name_or_string(self) -> str:
        self.skip()
        return self.string() if self.text.startswith('"', self.pos) else self.ident()

    def rest_of_line(self) -> tuple[str, int]:
        self.skip()
        start = self.pos
        nl = self.text.find("\n", start)
        self.pos = len(self.text) if nl < 0 else nl
        return self.text[start:self.pos].split("#", 1)[0].strip(), start

    def raw_until(self, stops: str) -> tuple[str, int]:
        """Text up to the first stop character outside brackets and strings."""
        self.skip()
        t, start = self.text, self.pos
        depth = 0
        i = start
        while i < len(t):
            c = t[i]
            if c == '"':
                i += 1
                while i < len(t) and t[i] != '"':
                    i += 2 if t[i] == "\\" else 1
            elif c in "([":
                depth += 1
            elif c in ")]":
                if depth == 0 and c in stops:
                    break
                depth -= 1
            elif depth == 0 and c in stops:
                break
            i += 1
        self.pos = i
        return t[start:i].strip(), start


class _DocParser:
    def __init__(self, text: str):
        self.s = _Scanner(text)
        self.sig = Signature()
        self.doc = Document()
        self.strategy_refs: list[tuple[str, str, int]] = []

    def parse(self) -> Document:
        s = self.s
        while not s.at_end():
            if s.accept("signature"):
                self.signature()
            elif s.accept("graph"):
                s.skip()
                pos = s.pos
                name = s.ident("graph name")
                if name in self.doc.graphs:
                    raise s.error(f"graph {name} defined twice", pos)
                s.expect("{")
                self.doc.graphs[name] = self.body("}")
            elif s.accept("rule"):
                self.rule()
            elif s.accept("strategy"):
                s.skip()
                pos = s.pos
                name = s.ident("strategy name")
                s.expect("=")
                text, start = s.rest_of_line()
                if text.endswith(";"):
                    text = text[:-1]
                try:
                    strat = parse_strategy(text)
                except StrategySyntaxError as exc:
                    raise s.error(str(exc), start + exc.column - 1) from None
                if name in self.doc.strategies:
                    raise s.error(f"strategy {name} defined twice", pos)
                self.doc.strategies[name] = strat
                self.strategy_refs.append((name, text, start))
            else:
                raise s.error("expected 'signature', 'graph', 'rule' or 'strategy'")
        for name, _, start in self.strategy_refs:
            for ref in sorted(rule_names(self.doc.strategies[name]) - set(self.doc.rules)):
                raise s.error(f"strategy {name} refers to undeclared rule {ref!r}", start)
        self.doc.signature = self.sig
        return self.doc

    def names(self) -> list[str]:
        out = [self.s.name_or_string()]
        while self.s.accept(","):
            out.append(self.s.name_or_string())
        return out

    def signature(self) -> None:
        s = self.s
        s.expect("{")
        attrs, avars, vvars, gvars = set(self.sig.attributes), set(self.sig.attribute_vars), set(self.sig.value_vars), dict(self.sig.graph_vars)
        while not s.accept("}"):
            if s.accept("attributes"):
                attrs |= set(self.names())
            elif s.accept("attrvars"):
                avars |= set(self.names())
            elif s.accept("vars"):
                vvars |= set(self.names())
            elif s.accept("graphvars"):
                while True:
                    name = s.ident("graph variable")
                    s.expect("[")
                    iface = [] if s.peek("]") else self.names()
                    s.expect("]")
                    gvars[name] = tuple(iface)
                    if not s.accept(","):
                        break
            else:
                raise s.error("expected 'attributes', 'attrvars', 'vars' or 'graphvars'")
            s.expect(";")
        self.sig = Signature(frozenset(attrs), frozenset(avars), self.sig.values, frozenset(vvars), gvars)

    def record(self) -> Record:
        s = self.s
        s.expect("{")
        pairs = []
        if s.accept("}"):
            return Record(pairs)
        while True:

            key = s.name_or_string()
            key = AttrVar(key) if key in self.sig.attribute_vars else key
            s.expect("=")
            text, start = s.raw_until(",}")
            if not text:
                raise s.error(f"missing value for {key}", start)
            try:
                val = parse_expr(text, self.sig.value_vars)
            except ExprSyntaxError as exc:
                raise s.error(str(exc).rsplit(" at offset", 1)[0], start + exc.pos) from None
            pairs.append((key, val))
            if s.accept("}"):
                break
            s.expect(",")
        return Record(pairs)

    def body(self, close: str) -> AhpGraph:
        s = self.s
        nodes: dict[str, Node] = {}
        ports: dict[str, Port] = {}
        edges: dict[str, Edge] = {}
        ladders = {}
        while not s.accept(close):
            if s.accept("node"):
                nid = s.ident("node id")
                rec = self.record() if s.peek("{") else Record()
                pids = []
                if s.accept("["):
                    if not s.peek("]"):
                        while True:
                            pid = s.ident("port id")
                            prec = self.record() if s.peek("{") else Record({"Name": pid})
                            ports[pid] = Port(nid, prec)
                            pids.append(pid)
                            if not s.accept(","):
                                break
                    s.expect("]")
                nodes[nid] = Node(rec, tuple(pids))
                if s.accept("ladder"):
                    if s.accept("var"):
                        s.skip()
                        pos = s.pos
                        gv = s.ident("graph variable")
                        if gv not in self.sig.graph_vars:
                            raise s.error(f"undeclared graph variable {gv!r}", pos)
                        ladders[nid] = GraphVar(gv, tuple(self.sig.graph_vars[gv]))
                    else:
                        s.expect("{")
                        ladders[nid] = self.body("}")
                s.expect(";")
            elif s.accept("edge"):
                eid = s.ident("edge id")
                a = s.ident("port id")
                s.expect("--")
                b = s.ident("port id")
                rec = self.record() if s.peek("{") else Record({"Name": "edge"})
                edges[eid] = Edge((a, b), rec)
                s.expect(";")
            else:
                raise s.error("expected 'node' or 'edge'")
        return AhpGraph(PortGraph(nodes, ports, edges), ladders)

    def rule(self) -> None:
        s = self.s
        s.skip()
        pos = s.pos
        name = s.ident("rule name")
        if name in self.doc.rules:
            raise s.error(f"rule {name} defined twice", pos)
        s.expect("{")
        s.expect("lhs")
        s.expect("{")
        lhs = self.body("}")
        s.expect("rhs")
        s.expect("{")
        rhs = self.body("}")
        arrow = []
        cond = None
        if s.accept("arrow"):
            s.expect("{")
            while not s.accept("}"):
                kind = s.ident("arrow port kind")
                if kind not in KINDS:
                    raise s.error(f"unknown arrow port kind {kind!r}")
                aid = s.ident("arrow port id")
                s.expect(":")
                if kind == BRIDGE:
                    lp = s.ident("port id")
                    s.expect("->")
                    rps = [s.ident("port id")]
                    while s.accept(","):
                        rps.append(s.ident("port id"))
                    arrow.append(ArrowPort(aid, kind, (lp,), tuple(rps)))
                elif kind == WIRE:
                    a = s.ident("port id")
                    s.expect("--")
                    b = s.ident("port id")
                    arrow.append(ArrowPort(aid, kind, (a, b)))
                else:
                    lps = [s.ident("port id")]
                    while s.accept(","):
                        lps.append(s.ident("port id"))
                    arrow.append(ArrowPort(aid, BLACKHOLE, tuple(lps)))
                s.expect(";")
        if s.accept("when"):
            text, start = s.raw_until(";")
            try:
                cond = parse_expr(text, self.sig.value_vars)
            except ExprSyntaxError as exc:
                raise s.error(str(exc).rsplit(" at offset", 1)[0], start + exc.pos) from None
            s.expect(";")
        s.expect("}")
        self.doc.rules[name] = Rule(name, lhs, rhs, tuple(arrow), cond)


def parse_document(text: str) -> Document:
    """Parse document text; raises :class:`DocumentError` with a line and column."""
    return _DocParser(text).parse()


# -- emitting ------------------------------------------------------------------


def _name(x: str) -> str:
    if x and (x[0].isalpha() or x[0] == "_") and all(c.isalnum() or c == "_" for c in x) and x not in _KEYWORDS:
        return x
    return json.dumps(x, ensure_ascii=False)


_KEYWORDS = {"true", "false", "and", "or", "not"}


def format_record(r: Record) -> str:
    parts = []
    for k, v in r.pairs:
        key = k.name if isinstance(k, AttrVar) else _name(k)
        parts.append(f"{key} = {format_value(v)}")
    return "{" + ", ".join(parts) + "}"


def _emit_body(g: AhpGraph, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    top = g.top
    for n, node in top.nodes.items():
        ports = ", ".join(f"{p} {format_record(top.ports[p].record)}" for p in node.ports)
        head = f"{pad}node {n} {format_record(node.record)} [{ports}]"
        lad = g.ladders.get(n)
        if lad is None:
            out.append(head + ";")
        elif isinstance(lad, GraphVar):
            out.append(f"{head} ladder var {lad.name};")
        else:
            out.append(head + " ladder {")
            _emit_body(lad, indent + 1, out)
            out.append(pad + "};")
    for e, edge in top.edges.items():
        out.append(f"{pad}edge {e} {edge.ends[0]} -- {edge.ends[1]} {format_record(edge.record)};")


def emit_graph(name: str, g: AhpGraph) -> str:
    out = [f"graph {name} {{"]
    _emit_body(g, 1, out)
    out.append("}")
    return "\n".join(out)


def emit_rule(r: Rule) -> str:
    out = [f"rule {r.name} {{", "  lhs {"]
    _emit_body(r.lhs, 2, out)
    out += ["  }", "  rhs {"]
    _emit_body(r.rhs, 2, out)
    out.append("  }")
    if r.arrow:
        out.append("  arrow {")
        for a in r.arrow:
            if a.kind == BRIDGE:
                out.append(f"    bridge {a.id}: {a.lhs[0]} -> {', '.join(a.rhs)};")
            elif a.kind == WIRE:
                out.append(f"    wire {a.id}: {a.lhs[0]} -- {a.lhs[1]};")
            else:
                out.append(f"    blackhole {a.id}: {', '.join(a.lhs)};")
        out.append("  }")
    if r.condition is not None:
        out.append(f"  when {format_value(r.condition)};")
    out.append("}")
    return "\n".join(out)


def emit_signature(sig: Signature) -> str:
    lines = []
    if sig.attributes:
        lines.append("  attributes " + ", ".join(_name(a) for a in sorted(sig.attributes)) + ";")
    if sig.attribute_vars:
        lines.append("  attrvars " + ", ".join(sorted(sig.attribute_vars)) + ";")
    if sig.value_vars:
        lines.append("  vars " + ", ".join(sorted(sig.value_vars)) + ";")
    if sig.graph_vars:
        gv = ", ".join(
            f"{k}[{', '.join(json.dumps(str(x)) for x in v)}]" for k, v in sorted(sig.graph_vars.items())
        )
        lines.append(f"  graphvars {gv};")
    if not lines:
        return ""
    return "signature {\n" + "\n".join(lines) + "\n}"


def emit_document(doc: Document) -> str:
    parts = [emit_signature(doc.signature)]
    parts += [emit_graph(n, g) for n, g in doc.graphs.items()]
    parts += [emit_rule(r) for r in doc.rules.values()]
    parts += [f"strategy {n} = {format_strategy(s)};" for n, s in doc.strategies.items()]
    return "\n\n".join(p for p in parts if p) + "\n"


# -- JSON mirror -----------------------------------------------------------------


def _value_json(v):
    if is_base(v):
        return v
    if isinstance(v, tuple):
        return [_value_json(x) for x in v]
    return {"expr": format_value(v)}


def _value_from_json(v, sig: Signature):
    if isinstance(v, dict):
        return parse_expr(v["expr"], sig.value_vars)
    if isinstance(v, int) and not isinstance(v, bool):
        return float(v)
    return v


def _record_json(r: Record) -> list:
    return [[{"attrvar": k.name} if isinstance(k, AttrVar) else k, _value_json(v)] for k, v in r.pairs]


def _record_from_json(pairs, sig: Signature) -> Record:
    return Record(
        (AttrVar(k["attrvar"]) if isinstance(k, dict) else k, _value_from_json(v, sig)) for k, v in pairs
    )


def graph_to_json(g: AhpGraph) -> dict:
    top = g.top
    records = {}
    for x, r in top.records():
        records[x] = _record_json(r)
    ladders = {}
    for n in sorted(g.ladders):
        lad = g.ladders[n]
        if isinstance(lad, GraphVar):
            ladders[n] = {"var": lad.name, "interface": list(lad.interface)}
        else:
            ladders[n] = graph_to_json(lad)
    return {
        "nodes": {n: {"ports": list(node.ports)} for n, node in top.nodes.items()},
        "ports": {p: {"node": port.node} for p, port in top.ports.items()},
        "edges": {e: {"ends": list(edge.ends)} for e, edge in top.edges.items()},
        "ladders": ladders,
        "records": records,
    }


def graph_from_json(d: dict, sig: Signature = Signature()) -> AhpGraph:
    recs = {x: _record_from_json(v, sig) for x, v in d.get("records", {}).items()}
    nodes = {n: Node(recs[n], tuple(v["ports"])) for n, v in d["nodes"].items()}
    ports = {p: Port(v["node"], recs[p]) for p, v in d["ports"].items()}
    edges = {e: Edge(tuple(v["ends"]), recs[e]) for e, v in d["edges"].items()}
    ladders = {}
    for n, v in d.get("ladders", {}).items():
        if "var" in v:
            ladders[n] = GraphVar(v["var"], tuple(v["interface"]))
        else:
            ladders[n] = graph_from_json(v, sig)
    return AhpGraph(PortGraph(nodes, ports, edges), ladders)


def rule_to_json(r: Rule) -> dict:
    return {
        "lhs": graph_to_json(r.lhs),
        "rhs": graph_to_json(r.rhs),
        "arrow": [{"id": a.id, "kind": a.kind, "lhs": list(a.lhs), "rhs": list(a.rhs)} for a in r.arrow],
        "condition": None if r.condition is None else format_value(r.condition),
    }


def document_to_json(doc: Document) -> dict:
    sig = doc.signature
    return {
        "signature": {
            "attributes": sorted(sig.attributes),
            "attrvars": sorted(sig.attribute_vars),
            "vars": sorted(sig.value_vars),
            "graphvars": {k: list(v) for k, v in sorted(sig.graph_vars.items())},
        },
        "graphs": {n: graph_to_json(g) for n, g in doc.graphs.items()},
        "rules": {n: rule_to_json(r) for n, r in doc.rules.items()},
        "strategies": {n: format_strategy(s) for n, s in doc.strategies.items()},
    }


def document_from_json(d: dict) -> Document:
    s = d.get("signature", {})
    sig = Signature(
        frozenset(s.get("attributes", ())),
        frozenset(s.get("attrvars", ())),
        value_vars=frozenset(s.get("vars", ())),
        graph_vars={k: tuple(v) for k, v in s.get("graphvars", {}).items()},
    )
    rules = {}
    for n, r in d.get("rules", {}).items():
        cond = r.get("condition")
        rules[n] = Rule(
            n,
            graph_from_json(r["lhs"], sig),
            graph_from_json(r["rhs"], sig),
            tuple(ArrowPort(a["id"], a["kind"], tuple(a["lhs"]), tuple(a["rhs"])) for a in r["arrow"]),
            None if cond is None else parse_expr(cond, sig.value_vars),
        )
    return Document(
        sig,
        {n: graph_from_json(g, sig) for n, g in d.get("graphs", {}).items()},
        rules,
        {n: parse_strategy(t) for n, t in d.get("strategies", {}).items()},
    )
