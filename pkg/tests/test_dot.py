from pathlib import Path

import pytest

from ahp.document import parse_document
from ahp.dot import export_dot

HERE = Path(__file__).parent


@pytest.fixture(scope="module")
def three_tier():
    return parse_document((HERE / "data" / "three_tier.ahp").read_text()).graphs["three_tier"]


def test_flat_two_nodes():
    g = parse_document('graph g { node a {Name = "A"} [ap {Name = "p"}]; node b {Name = "B"} [bp {Name = "p"}]; edge e ap -- bp {Name = "l"}; }').graphs["g"]
    dot = export_dot(g)
    assert dot.count("subgraph") == 2
    assert dot.count(" -- ") == 1
    assert dot.startswith("graph AHP {") and dot.rstrip().endswith("}")


@pytest.mark.parametrize("depth", [0, 2])
def test_golden(three_tier, depth):
    expected = (HERE / "golden" / f"three_tier_depth{depth}.dot").read_text()
    assert export_dot(three_tier, depth) == expected


def test_depth_controls_nesting(three_tier):
    assert "cluster_ladder" not in export_dot(three_tier, 0)
    one = export_dot(three_tier, 1)
    assert "cluster_ladder_a1" in one and "cluster_ladder_q1" not in one
    assert "Pools [ladder level 0]" in one
    two = export_dot(three_tier, 2)
    assert "cluster_ladder_q1" in two
    assert export_dot(three_tier, 5) == two


def test_oriented_edges_and_graph_variables(lambda_doc):
    r = lambda_doc.rules["beta_box"]
    dot = export_dot(r.lhs, 3)
    assert "[ladder var Body]" in dot
    g = parse_document('graph g { node a {Name = "A"} [ap {Name = "p"}]; edge e ap -- ap {Name = "l", Oriented = true}; }').graphs["g"]
    assert "dir=forward" in export_dot(g)


def test_deterministic(sec_doc):
    g = sec_doc.graphs["market"]
    assert export_dot(g, 2) == export_dot(g, 2)
