"""Graphviz DOT rendering: nodes become clusters of their ports, ladders nest."""

from __future__ import annotations

import json

from .expr import format_value
from .graph import NAME
from .hierarchy import AhpGraph, GraphVar, level


def _q(s) -> str:
    return json.dumps(str(s), ensure_ascii=False)


def _label(rec) -> str:
    name = rec.get(NAME)
    return format_value(name) if not isinstance(name, str) else name


def export_dot(g: AhpGraph, depth: int = 0) -> str:
    """DOT text for ``g``; ladders are drawn as nested clusters down to ``depth``.

    Ladders below ``depth`` are summarised by a badge in the node's label.
    """
    lines = ["graph AHP {", "  compound=true;", "  node [shape=circle, fontsize=10];"]
    edges: list[str] = []
    _emit(g, depth, 1, lines, edges)
    lines += edges
    lines.append("}")
    return "\n".join(lines) + "\n"


def _emit(g: AhpGraph, depth: int, indent: int, lines: list[str], edges: list[str]) -> None:
    pad = "  " * indent
    top = g.top
    for n, node in top.nodes.items():
        lad = g.ladders.get(n)
        label = _label(node.record)
        if isinstance(lad, GraphVar):
            label += f" [ladder var {lad.name}]"
        elif lad is not None and depth <= 0:
            label += f" [ladder level {level(lad)}]"
        lines.append(f"{pad}subgraph {_q('cluster_' + n)} {{")
        lines.append(f"{pad}  label={_q(label)};")
        if lad is not None:
            lines.append(f"{pad}  style=bold;")
        for p in node.ports:
            lines.append(f"{pad}  {_q(p)} [label={_q(_label(top.ports[p].record))}];")
        if not node.ports:
            lines.append(f"{pad}  {_q(n + ':anchor')} [shape=point, label=\"\"];")
        if isinstance(lad, AhpGraph) and depth > 0:
            lines.append(f"{pad}  subgraph {_q('cluster_ladder_' + n)} {{")
            lines.append(f"{pad}    label=\"ladder\";")
            lines.append(f"{pad}    style=dashed;")
            _emit(lad, depth - 1, indent + 2, lines, edges)
            lines.append(f"{pad}  }}")
        lines.append(f"{pad}}}")
    for e, edge in top.edges.items():
        attrs = [f"label={_q(_label(edge.record))}"]
        if edge.oriented:
            attrs.append("dir=forward")
        edges.append(f"  {_q(edge.ends[0])} -- {_q(edge.ends[1])} [{', '.join(attrs)}];")
