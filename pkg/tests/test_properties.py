import random

from hypothesis import given, settings
from hypothesis import strategies as st

from ahp.document import Document, emit_document, parse_document
from ahp.expr import BinOp, Lit, UnOp, Var, format_value, parse_expr
from ahp.graph import Record, interface, validate_port_graph
from ahp.hierarchy import AhpGraph, flatten, level, validate_ahp
from ahp.iso import isomorphic
from ahp.matching import brute_force_matches, find_matches
from ahp.rewriting import rule_signature
from ahp.strategy import All, Fail, Id, If, One, OrElse, Repeat, Seq, Try, format_strategy, parse_strategy
from generators import generic_rule, random_ahp, random_flat, rule_from_host

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@given(st.lists(st.tuples(st.sampled_from("abcdef"), st.integers(-3, 3)), unique_by=lambda kv: kv[0]), st.randoms())
def test_record_equality_order_insensitive(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a, b = Record([("Name", "n")] + pairs), Record(shuffled + [("Name", "n")])
    assert a == b and hash(a) == hash(b)


@given(seeds)
def test_interface_ports_are_exactly_the_free_ones(seed):
    g = random_flat(random.Random(seed))
    free = set(interface(g))
    assert free <= set(g.ports)
    for p in g.ports:
        assert (g.degree(p) == 0) == (p in free)


@given(seeds)
def test_generated_graphs_validate(seed):
    g = random_ahp(random.Random(seed))
    assert validate_ahp(g) == []
    assert validate_port_graph(g.top) == validate_port_graph(g.top, allow_vars=True) == []


@given(seeds)
def test_flatten_conservation(seed):
    g = random_ahp(random.Random(seed))
    f = flatten(g)
    comps = list(g.components())
    assert set(f.nodes) == {n for _, c in comps for n in c.top.nodes if n not in c.ladders}
    assert len(f.edges) == sum(len(c.top.edges) for _, c in comps)
    assert sorted(map(str, (f.ports[p].record.get("Name") for p in interface(f)))) == sorted(
        map(str, (g.top.ports[p].record.get("Name") for p in interface(g.top)))
    )
    assert validate_port_graph(f) == []
    assert level(AhpGraph.flat(f)) == 0


@given(seeds)
def test_renaming_ids_preserves_isomorphism(seed):
    rng = random.Random(seed)
    g = random_ahp(rng)
    text = emit_document(Document(graphs={"g": g}))
    renamed = parse_document(text.replace("hn", "zn").replace("hp", "zp").replace("he", "ze")).graphs["g"]
    assert isomorphic(g, renamed)


@given(seeds)
def test_document_round_trip_random(seed):
    g = random_ahp(random.Random(seed))
    r = rule_from_host(random.Random(seed), g)
    doc = Document(rule_signature(r), {"g": g}, {"r": r})
    again = parse_document(emit_document(doc))
    assert again.graphs == doc.graphs
    assert again.rules["r"] == r


@settings(max_examples=150)
@given(seeds)
def test_matcher_agrees_with_oracle(seed):
    rng = random.Random(seed)
    host = random_ahp(rng, max_elements=12)
    r = generic_rule(rng, host=host) if rng.random() < 0.5 else rule_from_host(rng, host)
    assert [m.key() for m in find_matches(r, host)] == [m.key() for m in brute_force_matches(r, host)]


names = st.sampled_from(["X", "Y", "Z"])
leaves = st.one_of(
    names.map(Var),
    st.floats(min_value=-5, max_value=5, allow_nan=False).map(Lit),
    st.sampled_from(["a", 'q"t', ""]).map(Lit),
    st.booleans().map(Lit),
)
exprs = st.recursive(
    leaves,
    lambda sub: st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "/", "<", "==", "and", "or"]), sub, sub).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(["not", "-"]), sub).map(lambda t: UnOp(*t)),
    ),
    max_leaves=8,
)


@given(exprs)
def test_expression_text_round_trip(e):
    once = parse_expr(format_value(e))
    assert parse_expr(format_value(once)) == once


rule_names_st = st.sampled_from(["a", "beta", "r_2"])
strategies_st = st.recursive(
    st.one_of(st.just(Id()), st.just(Fail()), rule_names_st.map(One), rule_names_st.map(All)),
    lambda sub: st.one_of(
        st.tuples(sub, sub).map(lambda t: Seq(*t)),
        st.tuples(sub, sub).map(lambda t: OrElse(*t)),
        sub.map(Try),
        sub.map(Repeat),
        st.tuples(sub, sub, sub).map(lambda t: If(*t)),
    ),
    max_leaves=6,
)


@given(strategies_st)
def test_strategy_text_round_trip(s):
    assert parse_strategy(format_strategy(s)) == s
