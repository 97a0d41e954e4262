"""Structural isomorphism of (hierarchical) port graphs, ignoring element ids.

Each graph is encoded as a simple labelled networkx graph: nodes, ports and
edges all become vertices, attachment positions and edge ends become labelled
links, and every ladder hangs off its node through a graph vertex.
"""

from __future__ import annotations

import networkx as nx
from networkx.algorithms.isomorphism import GraphMatcher

from .graph import PortGraph, Record
from .hierarchy import AhpGraph, GraphVar


def _rec_key(r: Record):
    return tuple(sorted((str(k), type(k).__name__, type(v).__name__, repr(v)) for k, v in r.pairs))


def _encode(g: AhpGraph | PortGraph) -> nx.Graph:
    if isinstance(g, PortGraph):
        g = AhpGraph.flat(g)
    out = nx.Graph()
    counter = iter(range(10**9))

    def add(h: AhpGraph) -> str:
        root = f"#graph{next(counter)}"
        out.add_node(root, label=("graph",))
        top = h.top
        for n, node in top.nodes.items():
            out.add_node(n, label=("node", _rec_key(node.record), len(node.ports)))
            out.add_edge(root, n, label="member")
            for i, p in enumerate(node.ports):
                out.add_node(p, label=("port", _rec_key(top.ports[p].record)))
                out.add_edge(n, p, label=("attach", i))
            lad = h.ladders.get(n)
            if isinstance(lad, GraphVar):
                v = f"#var{next(counter)}"
                out.add_node(v, label=("var", lad.name, lad.interface))
                out.add_edge(n, v, label="ladder")
            elif lad is not None:
                out.add_edge(n, add(lad), label="ladder")
        for e, edge in top.edges.items():
            out.add_node(e, label=("edge", _rec_key(edge.record)))
            a, b = edge.ends
            if a == b:
                out.add_edge(e, a, label="loop")
            elif edge.oriented:
                out.add_edge(e, a, label="src")
                out.add_edge(e, b, label="dst")
            else:
                out.add_edge(e, a, label="end")
                out.add_edge(e, b, label="end")
        return root

    top_root = add(g)
    out.nodes[top_root]["label"] = ("top",)
    return out


def isomorphic(a: AhpGraph | PortGraph, b: AhpGraph | PortGraph) -> bool:
    """True when ``a`` and ``b`` have the same shape, records and hierarchy."""
    ga, gb = _encode(a), _encode(b)
    if ga.number_of_nodes() != gb.number_of_nodes() or ga.number_of_edges() != gb.number_of_edges():
        return False
    gm = GraphMatcher(
        ga, gb,
        node_match=lambda x, y: x["label"] == y["label"],
        edge_match=lambda x, y: x["label"] == y["label"],
    )
    return gm.is_isomorphic()
