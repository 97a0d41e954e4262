import pytest

from ahp.document import parse_document
from ahp.expr import parse_expr
from ahp.graph import GraphBuilder, Record
from ahp.hierarchy import AhpGraph, GraphVar
from ahp.matching import (
    Morphism,
    brute_force_matches,
    check_match,
    eval_condition,
    find_matches,
    match_ladder,
)
from ahp.rule import Rule

HOST = """
signature { vars X, Y, Z; attrvars K; graphvars W["p"]; }
graph three {
  node a1 {Name = "A"} [];
  node a2 {Name = "A"} [];
  node b1 {Name = "B"} [];
}
graph chain {
  node n1 {Name = "N", v = 1.0} [n1p {Name = "p"}];
  node n2 {Name = "N", v = 2.0} [n2p {Name = "p"}];
  node m1 {Name = "M", u = 1.0, w = 2.0} [m1p {Name = "p"}];
  edge e1 n1p -- m1p {Name = "link"};
}
graph parallel {
  node s {Name = "S"} [sp {Name = "p"}];
  node t {Name = "T"} [tp {Name = "p"}];
  edge e1 sp -- tp {Name = "link"};
  edge e2 sp -- tp {Name = "link"};
}
"""


def setup():
    return parse_document(HOST)


def rule(text, name="r"):
    doc = parse_document(HOST + text)
    return doc.rules[name]


def keys(ms):
    return [m.key() for m in ms]


def test_two_matches_of_single_node():
    doc = setup()
    r = rule('rule r { lhs { node x {Name = "A"} []; } rhs { } }')
    ms = find_matches(r, doc.graphs["three"])
    assert [m.morphism.node_map["x"] for m in ms] == ["a1", "a2"]
    assert keys(ms) == keys(brute_force_matches(r, doc.graphs["three"]))


def test_identity_match_of_the_host_itself():
    doc = setup()
    r = rule("""rule r {
      lhs {
        node n1 {Name = "N", v = 1.0} [l1 {Name = "p"}];
        node m1 {Name = "M", u = 1.0, w = 2.0} [l2 {Name = "p"}];
        edge le l1 -- l2 {Name = "link"};
        node n2 {Name = "N", v = 2.0} [l3 {Name = "p"}];
      }
      rhs { }
      arrow { blackhole h1: l1; blackhole h2: l2; blackhole h3: l3; }
    }""")
    ms = find_matches(r, doc.graphs["chain"])
    assert len(ms) == 1
    assert ms[0].morphism.node_map == {"n1": "n1", "m1": "m1", "n2": "n2"}


def test_dangling_condition():
    doc = setup()
    r = rule('rule r { lhs { node x {Name = "M", u = X, w = Y} [xp {Name = "p"}]; } rhs { } }')
    assert find_matches(r, doc.graphs["chain"]) == []
    r2 = rule('rule r { lhs { node x {Name = "M", u = X, w = Y} [xp {Name = "p"}]; } rhs { } arrow { blackhole h: xp; } }')
    assert len(find_matches(r2, doc.graphs["chain"])) == 1


def test_variable_binding_and_consistency():
    doc = setup()
    r = rule('rule r { lhs { node x {Name = "N", v = X} [xp {Name = "p"}]; } rhs { } arrow { blackhole h: xp; } }')
    ms = find_matches(r, doc.graphs["chain"])
    assert sorted(m.bindings["X"] for m in ms) == [1.0, 2.0]
    # X used twice must bind equal values: u = 1, w = 2 cannot both be X
    r2 = rule('rule r { lhs { node x {Name = "M", u = X, w = X} [xp {Name = "p"}]; } rhs { } arrow { blackhole h: xp; } }')
    assert find_matches(r2, doc.graphs["chain"]) == []


def test_expression_in_pattern():
    doc = setup()
    r = rule('rule r { lhs { node x {Name = "M", u = X, w = X + 1} [xp {Name = "p"}]; } rhs { } arrow { blackhole h: xp; } }')
    ms = find_matches(r, doc.graphs["chain"])
    assert len(ms) == 1 and ms[0].bindings["X"] == 1.0


def test_attribute_variable_binding():
    doc = setup()
    r = rule('rule r { lhs { node x {Name = "M", K = 2.0, u = Y} [xp {Name = "p"}]; } rhs { } arrow { blackhole h: xp; } }')
    ms = find_matches(r, doc.graphs["chain"])
    assert len(ms) == 1
    assert ms[0].bindings["@K"] == "w" and ms[0].bindings["Y"] == 1.0
    assert keys(ms) == keys(brute_force_matches(r, doc.graphs["chain"]))


def test_condition_filters():
    doc = setup()
    r = rule('rule r { lhs { node x {Name = "N", v = X} [xp {Name = "p"}]; } rhs { } arrow { blackhole h: xp; } when X > 1; }')
    ms = find_matches(r, doc.graphs["chain"])
    assert [m.bindings["X"] for m in ms] == [2.0]


def test_parallel_edges_need_parallel_host_edges():
    doc = setup()
    two = rule("""rule r { lhs {
        node s {Name = "S"} [a {Name = "p"}]; node t {Name = "T"} [b {Name = "p"}];
        edge x a -- b {Name = "link"}; edge y a -- b {Name = "link"}; } rhs { } }""")
    ms = find_matches(two, doc.graphs["parallel"])
    assert len(ms) == 2  # the two edge bijections
    assert keys(ms) == keys(brute_force_matches(two, doc.graphs["parallel"]))
    three = rule("""rule r { lhs {
        node s {Name = "S"} [a {Name = "p"}]; node t {Name = "T"} [b {Name = "p"}];
        edge x a -- b {Name = "link"}; edge y a -- b {Name = "link"}; edge z a -- b {Name = "link"}; } rhs { } }""")
    assert find_matches(three, doc.graphs["parallel"]) == []


def test_eval_condition():
    assert eval_condition(parse_expr("pay > 2"), {"pay": 3.0}) is True
    assert eval_condition(None, {}) is True
    diag = []
    assert eval_condition(parse_expr("Q > 2"), {}, diag) is False
    assert diag and "unbound" in diag[0]
    diag = []
    assert eval_condition(parse_expr("1 / X > 0"), {"X": 0.0}, diag) is False
    assert "division" in diag[0]


def ladder_graph(prefix, names):
    b = GraphBuilder()
    for i, n in enumerate(names):
        b.node(f"{prefix}{i}", Record.of("L"), [(f"{prefix}{i}p", Record.of(n))])
    return AhpGraph.flat(b.build())


def test_match_ladder_examples():
    w = ladder_graph("h", ["p"])
    m = match_ladder(GraphVar("W", ("p",)), w)
    assert m is not None and m.bindings["W"] is w
    assert match_ladder(GraphVar("W", ("p",)), ladder_graph("h", ["p", "p"])) is None
    m = match_ladder(ladder_graph("h", ["p"]), w)
    assert m.node_map == {"h0": "h0"} and m.port_map == {"h0p": "h0p"}
    # an earlier binding must agree
    assert match_ladder(GraphVar("W", ("p",)), w, {"W": ladder_graph("z", ["p"])}) is not None
    assert match_ladder(GraphVar("W", ("p",)), w, {"W": ladder_graph("z", ["q"])}) is None


def test_ladder_patterns_must_cover_the_host_ladder():
    text = """
    graph g { node n {Name = "H"} [np {Name = "p"}] ladder {
        node i1 {Name = "L"} [i1p {Name = "p"}];
        node i2 {Name = "L"} [i2p {Name = "q"}, i2r {Name = "q"}];
        edge ie i2p -- i2r {Name = "link"};
    }; }
    rule part { lhs { node x {Name = "H"} [xp {Name = "p"}] ladder { node y {Name = "L"} [yp {Name = "p"}]; }; }
                rhs { } arrow { blackhole h: xp; } }
    rule var { lhs { node x {Name = "H"} [xp {Name = "p"}] ladder var W; } rhs { } arrow { blackhole h: xp; } }
    rule flatpat { lhs { node x {Name = "H"} [xp {Name = "p"}]; } rhs { } arrow { blackhole h: xp; } }
    """
    doc = parse_document(HOST + text)
    g = doc.graphs["g"]
    assert find_matches(doc.rules["part"], g) == []
    ms = find_matches(doc.rules["var"], g)
    assert len(ms) == 1 and ms[0].bindings["W"] is g.ladders["n"]
    assert ms[0].image() == {"n", "np"} | g.ladders["n"].all_ids()
    # a pattern node without a ladder only matches host nodes without one
    assert find_matches(doc.rules["flatpat"], g) == []


def test_brute_force_edge_cases():
    doc = setup()
    empty = Rule("e", AhpGraph.flat(GraphBuilder().build()), AhpGraph.flat(GraphBuilder().build()))
    assert len(brute_force_matches(empty, doc.graphs["three"])) == 1
    assert len(find_matches(empty, doc.graphs["three"])) == 1
    big = rule('rule r { lhs { node x {Name = "A"} []; node y {Name = "A"} []; node z {Name = "A"} []; } rhs { } }')
    assert brute_force_matches(big, doc.graphs["three"]) == []
    assert find_matches(big, doc.graphs["three"]) == []
    with pytest.raises(ValueError):
        brute_force_matches(big, doc.graphs["three"], max_size=2)


def test_matches_replay_and_are_deterministic(lambda_doc, sec_doc):
    for doc in (lambda_doc, sec_doc):
        for r in doc.rules.values():
            for g in doc.graphs.values():
                ms = find_matches(r, g)
                assert keys(ms) == keys(find_matches(r, g))
                assert keys(ms) == sorted(keys(ms))
                for m in ms:
                    assert check_match(r, g, m.morphism) == []


def test_check_match_reports_broken_maps():
    doc = setup()
    r = rule('rule r { lhs { node x {Name = "A"} []; } rhs { } }')
    bad = Morphism({"x": "b1"}, {}, {}, {}, {})
    assert check_match(r, doc.graphs["three"], bad)
