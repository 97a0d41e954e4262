import pytest

from ahp.document import parse_document
from ahp.expr import BinOp, Lit, Var
from ahp.graph import NAME, GraphBuilder, Record
from ahp.hierarchy import AhpGraph, GraphVar, flatten, validate_ahp
from ahp.iso import isomorphic
from ahp.matching import Morphism, Match, find_matches
from ahp.rewriting import RewriteError, apply, check_flatten_commutes, instantiate_rhs, is_simple, rewrite, validate_rule
from ahp.rule import BLACKHOLE, BRIDGE, WIRE, ArrowPort, Rule

DOC = """
signature { vars X; }
graph star {
  node c {Name = "C", v = 1.0} [c1 {Name = "p"}, c2 {Name = "q"}];
  node x1 {Name = "X"} [x1p {Name = "p"}];
  node x2 {Name = "X"} [x2p {Name = "p"}];
  node y {Name = "Y"} [yp {Name = "p"}];
  node far {Name = "F"} [];
  edge e1 c1 -- x1p {Name = "link", k = 1.0};
  edge e2 c1 -- x2p {Name = "link", k = 2.0};
  edge e3 c2 -- yp {Name = "dir", Oriented = true};
}
rule ident {
  lhs { node l {Name = "C", v = X} [lp {Name = "p"}, lq {Name = "q"}]; }
  rhs { node r {Name = "C", v = X} [rp {Name = "p"}, rq {Name = "q"}]; }
  arrow { bridge b1: lp -> rp; bridge b2: lq -> rq; }
}
rule bump {
  lhs { node l {Name = "C", v = X} [lp {Name = "p"}, lq {Name = "q"}]; }
  rhs { node r {Name = "C", v = X + 1} [rp {Name = "p"}, rq {Name = "q"}]; }
  arrow { bridge b1: lp -> rp; bridge b2: lq -> rq; }
}
rule drop {
  lhs { node l {Name = "C", v = X} [lp {Name = "p"}, lq {Name = "q"}]; }
  rhs { }
  arrow { blackhole h: lp, lq; }
}
rule splice {
  lhs { node l {Name = "C", v = X} [lp {Name = "p"}, lq {Name = "q"}]; }
  rhs { }
  arrow { wire w: lp -- lq; }
}
rule fan {
  lhs { node l {Name = "C", v = X} [lp {Name = "p"}, lq {Name = "q"}]; }
  rhs {
    node r1 {Name = "C", v = X} [r1p {Name = "p"}, r1q {Name = "q"}];
    node r2 {Name = "C", v = X} [r2p {Name = "p"}, r2q {Name = "q"}];
  }
  arrow { bridge b1: lp -> r1p, r2p; bridge b2: lq -> r1q; }
}
"""


@pytest.fixture(scope="module")
def doc():
    d = parse_document(DOC)
    assert d.validate() == []
    return d


def step(doc, rule, graph="star"):
    r = doc.rules[rule]
    g = doc.graphs[graph]
    (m,) = find_matches(r, g)
    return rewrite(r, g, m)


def test_identity_rule_valid_simple_and_isomorphic(doc):
    r = doc.rules["ident"]
    assert validate_rule(r) == [] and is_simple(r)
    s = step(doc, "ident")
    assert validate_ahp(s.after) == []
    assert isomorphic(s.after, s.before)
    assert "c" not in s.after.top.nodes  # fresh ids, nothing kept in place


def test_bump_instantiates_expressions(doc):
    after = step(doc, "bump").after
    (new,) = [n for n in after.top.nodes.values() if n.record.get(NAME) == "C"]
    assert new.record.get("v") == 2.0


def test_blackhole_deletes_external_edges(doc):
    after = step(doc, "drop").after
    assert validate_ahp(after) == []
    assert not after.top.edges
    assert set(after.top.nodes) == {"x1", "x2", "y", "far"}


def test_wire_splices_neighbourhoods(doc):
    s = step(doc, "splice")
    after = s.after
    ends = sorted(tuple(sorted(e.ends)) for e in after.top.edges.values())
    assert ends == [("x1p", "yp"), ("x2p", "yp")]
    assert all(e.record == Record({NAME: "wire"}) for e in after.top.edges.values())
    assert validate_ahp(after) == []


def test_bridge_fan_out_duplicates_edges(doc):
    s = step(doc, "fan")
    after = s.after
    assert len(after.top.edges) == 2 * 2 + 1
    links = [e for e in after.top.edges.values() if e.record.get(NAME) == "link"]
    assert sorted(e.record.get("k") for e in links) == [1.0, 1.0, 2.0, 2.0]
    (d,) = [e for e in after.top.edges.values() if e.record.get(NAME) == "dir"]
    assert d.oriented and d.ends[1] == "yp"  # orientation kept, surviving endpoint substituted
    assert not is_simple(doc.rules["fan"])


def test_frame_property(doc):
    s = step(doc, "fan")
    for n in ("x1", "x2", "y", "far"):
        assert s.after.top.nodes[n] == s.before.top.nodes[n]
    for p in ("x1p", "x2p", "yp"):
        assert s.after.top.ports[p] == s.before.top.ports[p]


def test_rewiring_log(doc):
    s = step(doc, "drop")
    assert {w.old_edge for w in s.rewiring} == {"e1", "e2", "e3"}
    assert all(w.kind == "delete" and not w.new_edges for w in s.rewiring)


def test_invalid_match_rejected(doc):
    r = doc.rules["ident"]
    bogus = Match(Morphism({"l": "x1"}, {"lp": "x1p", "lq": "x1p"}, {}, {}, {"X": 1.0}), doc.graphs["star"], "ident")
    with pytest.raises(RewriteError):
        rewrite(r, doc.graphs["star"], bogus)


def one(name, port_names, prefix):
    b = GraphBuilder()
    b.node(prefix, Record.of(name), [(f"{prefix}{p}", Record.of(p)) for p in port_names])
    return b


def test_validate_rule_arities_and_levels():
    lhs = one("A", ["p", "q", "s"], "l")
    rhs = one("A", ["p", "q", "s"], "r")
    r = Rule("w3", AhpGraph.flat(lhs.build()), AhpGraph.flat(rhs.build()), (ArrowPort("w", WIRE, ("lp", "lq", "ls")),))
    assert any("wire arity" in v for v in validate_rule(r))
    r = Rule("b0", AhpGraph.flat(lhs.build()), AhpGraph.flat(rhs.build()), (ArrowPort("b", BRIDGE, ("lp",), ()),))
    assert any("bridge arity" in v for v in validate_rule(r))
    r = Rule("h", AhpGraph.flat(lhs.build()), AhpGraph.flat(rhs.build()), (ArrowPort("h", BLACKHOLE, ("lp",), ("rp",)),))
    assert any("blackhole arity" in v for v in validate_rule(r))

    inner = one("A", ["p"], "i")
    lad_lhs = AhpGraph(one("A", ["p"], "l").build(), {"l": AhpGraph.flat(inner.build())})
    r = Rule("x", lad_lhs, AhpGraph.flat(one("A", ["p"], "r").build()), (ArrowPort("b", BRIDGE, ("ip",), ("rp",)),))
    assert any("cross-level arrow edge" in v for v in validate_rule(r))


def test_validate_rule_variables():
    lhs = GraphBuilder()
    lhs.node("l", Record.of("A", v=1))
    rhs = GraphBuilder()
    rhs.node("r", Record.of("A", v=Var("X")))
    r = Rule("v", AhpGraph.flat(lhs.build()), AhpGraph.flat(rhs.build()))
    assert any("variable X is not bound" in v for v in validate_rule(r))
    rhs = GraphBuilder()
    rhs.node("r", Record.of("A"), [("rp", Record.of("p"))])
    r = Rule("g", AhpGraph.flat(lhs.build()), AhpGraph(rhs.build(), {"r": GraphVar("W", ("p",))}))
    assert any("graph variable W is not bound" in v for v in validate_rule(r))


def test_is_simple_examples():
    lhs = AhpGraph.flat(one("A", ["p", "q"], "l").build())
    rhs = AhpGraph.flat(one("A", ["p", "q"], "r").build())
    assert is_simple(Rule("s", lhs, rhs, (ArrowPort("b", BRIDGE, ("lp",), ("rp",)),)))
    assert not is_simple(Rule("s", lhs, rhs, (ArrowPort("b", BRIDGE, ("lp",), ("rp", "rq")),)))
    assert not is_simple(Rule("s", lhs, rhs, (ArrowPort("w", WIRE, ("lp", "lq")),)))


def test_instantiate_rhs():
    b = GraphBuilder()
    b.node("r", Record.of("A", pay=BinOp("+", Var("X"), Lit(1.0))), [("rp", Record.of("p"))])
    inst = instantiate_rhs(AhpGraph.flat(b.build()), {"X": 3.0}, taken={"r", "rp"})
    (node,) = inst.top.nodes.values()
    assert node.record.get("pay") == 4.0
    assert not set(inst.top.element_ids()) & {"r", "rp"}

    w = AhpGraph.flat(one("L", ["p"], "w").build())
    var_rhs = AhpGraph(b.build(), {"r": GraphVar("W", ("p",))})
    inst = instantiate_rhs(var_rhs, {"X": 3.0, "W": w})
    (nid,) = inst.top.nodes
    copy = inst.ladders[nid]
    assert isomorphic(copy, w) and not copy.all_ids() & w.all_ids()

    plain = AhpGraph.flat(one("L", ["p"], "z").build())
    inst = instantiate_rhs(plain, {}, taken=plain.all_ids())
    assert isomorphic(inst, plain) and not inst.all_ids() & plain.all_ids()


def test_flatten_commutes_on_flat_rule(doc):
    for name in ("ident", "bump", "drop", "splice", "fan"):
        r = doc.rules[name]
        (m,) = find_matches(r, doc.graphs["star"])
        assert check_flatten_commutes(r, doc.graphs["star"], m)


def test_update_ladder_on_securitisation(sec_doc):
    r = sec_doc.rules["update_ladder"]
    g = sec_doc.graphs["market"]
    ms = find_matches(r, g)
    assert {m.morphism.node_map["ua"] for m in ms} == {"a1", "a3"}
    for m in ms:
        after = apply(r, g, m)
        assert validate_ahp(after) == []
        assert check_flatten_commutes(r, g, m)
        assert len(flatten(after).nodes) == len(flatten(g).nodes)


def test_trade_moves_the_whole_deal(sec_doc):
    r = sec_doc.rules["trade"]
    g = sec_doc.graphs["market"]
    ms = find_matches(r, g)
    assert ms
    m = ms[0]
    after = apply(r, g, m)
    assert validate_ahp(after) == []
    old_asset = m.morphism.node_map["ta"]
    (new_asset,) = [n for n in after.top.nodes if n not in g.top.nodes and after.top.nodes[n].record.get(NAME) == "A"]
    assert isomorphic(after.ladders[new_asset], g.ladders[old_asset])
    cash = lambda h, n: h.top.nodes[n].record.get("cash")  # noqa: E731
    total_before = sum(cash(g, n) for n in g.top.nodes if g.top.nodes[n].record.get(NAME) == "B")
    total_after = sum(cash(after, n) for n in after.top.nodes if after.top.nodes[n].record.get(NAME) == "B")
    assert total_before == total_after
