"""Command line front end: validate, match, rewrite, flatten, run, export-dot.

FILE may be a block-syntax document, its JSON mirror (``*.json``) or
``model:NAME`` for one of the bundled models (``lambda``, ``securitisation``).
Exit codes: 0 success, 1 validation or strategy failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from .document import (
    Document,
    DocumentError,
    document_from_json,
    document_to_json,
    emit_document,
    parse_document,
)
from .dot import export_dot
from .expr import format_value, is_base
from .hierarchy import AhpGraph, flatten, level
from .matching import find_matches, public_bindings
from .rewriting import RewriteError, rewrite
from .strategy import format_strategy, run

MODEL_PREFIX = "model:"


class UsageError(Exception):
    pass


def bundled_models() -> list[str]:
    root = resources.files("ahp") / "models"
    return sorted(p.name[: -len(".ahp")] for p in root.iterdir() if p.name.endswith(".ahp"))


def load_document(path: str) -> Document:
    if path.startswith(MODEL_PREFIX):
        name = path[len(MODEL_PREFIX):]
        if name not in bundled_models():
            raise UsageError(f"no bundled model {name!r} (have: {', '.join(bundled_models())})")
        text = (resources.files("ahp") / "models" / f"{name}.ahp").read_text(encoding="utf-8")
        return parse_document(text)
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".json":
        try:
            return document_from_json(json.loads(text))
        except (ValueError, KeyError, TypeError) as exc:
            raise DocumentError(f"bad JSON document: {exc}") from None
    return parse_document(text)


def write_document(doc: Document, out: str | None) -> None:
    if out is not None and out.endswith(".json"):
        text = json.dumps(document_to_json(doc), indent=2, sort_keys=False) + "\n"
    else:
        text = emit_document(doc)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _graph(doc: Document, name: str) -> AhpGraph:
    if name not in doc.graphs:
        raise UsageError(f"no graph {name!r} in document")
    return doc.graphs[name]


def _with_graph(doc: Document, name: str, g: AhpGraph) -> Document:
    graphs = dict(doc.graphs)
    graphs[name] = g
    return replace(doc, graphs=graphs)


def _check(doc: Document) -> bool:
    problems = doc.validate()
    for p in problems:
        print(p, file=sys.stderr)
    return not problems


def _json_value(v):
    if is_base(v):
        return v
    if isinstance(v, AhpGraph):
        return {"graph": sorted(v.all_ids())}
    return format_value(v)


def _match_json(m) -> dict:
    mo = m.morphism
    return {
        "nodes": dict(sorted(mo.node_map.items())),
        "ports": dict(sorted(mo.port_map.items())),
        "edges": dict(sorted(mo.edge_map.items())),
        "ladders": dict(sorted(mo.ladder_map.items())),
        "bindings": {k: _json_value(v) for k, v in sorted(public_bindings(mo.bindings).items())},
    }


# -- subcommands ---------------------------------------------------------------


def cmd_validate(args) -> int:
    doc = load_document(args.file)
    if not _check(doc):
        return 1
    if not args.quiet:
        for name, g in doc.graphs.items():
            print(f"graph {name}: level {level(g)}, {g.size()} elements")
        print(f"{len(doc.rules)} rules, {len(doc.strategies)} strategies: ok")
    return 0


def cmd_match(args) -> int:
    doc = load_document(args.file)
    if args.rule not in doc.rules:
        raise UsageError(f"no rule {args.rule!r} in document")
    g = _graph(doc, args.graph)
    matches = find_matches(doc.rules[args.rule], g)
    if args.json:
        json.dump({"count": len(matches), "matches": [_match_json(m) for m in matches]}, sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 0
    print(f"{len(matches)} match{'es' if len(matches) != 1 else ''}")
    for i, m in enumerate(matches):
        d = _match_json(m)
        print(f"[{i}]")
        for key in ("nodes", "ports", "edges", "ladders"):
            if d[key]:
                print(f"  {key}: " + ", ".join(f"{a}->{b}" for a, b in d[key].items()))
        if d["bindings"]:
            print("  bindings: " + ", ".join(f"{a}={json.dumps(b)}" for a, b in d["bindings"].items()))
    return 0


def cmd_rewrite(args) -> int:
    doc = load_document(args.file)
    if args.rule not in doc.rules:
        raise UsageError(f"no rule {args.rule!r} in document")
    g = _graph(doc, args.graph)
    matches = find_matches(doc.rules[args.rule], g)
    if not matches:
        print(f"rule {args.rule} has no match in graph {args.graph}", file=sys.stderr)
        return 1
    if not 0 <= args.match < len(matches):
        raise UsageError(f"--match must be in 0..{len(matches) - 1}")
    try:
        step = rewrite(doc.rules[args.rule], g, matches[args.match])
    except RewriteError as exc:
        print(exc, file=sys.stderr)
        return 1
    out = _with_graph(doc, args.graph, step.after)
    write_document(out, args.output)
    return 0 if _check(out) else 1


def cmd_flatten(args) -> int:
    doc = load_document(args.file)
    g = _graph(doc, args.graph)
    out = _with_graph(doc, args.graph, AhpGraph.flat(flatten(g)))
    write_document(out, args.output)
    return 0


def _write_trace(trace_dir: str, doc: Document, graph: str, d, strategy: str, seed: int) -> None:
    root = Path(trace_dir)
    root.mkdir(parents=True, exist_ok=True)
    files = []
    graphs = [d.initial] + [s.after for s in d.steps]
    for i, g in enumerate(graphs):
        fname = f"step_{i:04d}.ahp"
        (root / fname).write_text(emit_document(_with_graph(doc, graph, g)), encoding="utf-8")
        entry = {"index": i, "file": fname}
        if i > 0:
            step = d.steps[i - 1]
            entry["rule"] = step.rule
            entry["match"] = _match_json(step.match)
        files.append(entry)
    manifest = {
        "graph": graph,
        "strategy": strategy,
        "seed": seed,
        "status": d.status,
        "budget_used": d.budget_used,
        "steps": files,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def cmd_run(args) -> int:
    doc = load_document(args.file)
    if args.strategy not in doc.strategies:
        raise UsageError(f"no strategy {args.strategy!r} in document")
    g = _graph(doc, args.graph)
    if args.budget <= 0:
        raise UsageError("--budget must be positive")
    if not _check(doc):
        return 1
    s = doc.strategies[args.strategy]
    d = run(s, g, doc.rules, seed=args.seed, budget=args.budget)
    write_document(_with_graph(doc, args.graph, d.final), args.output)
    if args.trace:
        _write_trace(args.trace, doc, args.graph, d, format_strategy(s), args.seed)
    print(f"{d.status}: {len(d.steps)} steps, budget used {d.budget_used}", file=sys.stderr)
    return 0 if d.success else 1


def cmd_export_dot(args) -> int:
    doc = load_document(args.file)
    g = _graph(doc, args.graph)
    if args.depth < 0:
        raise UsageError("--depth must be non-negative")
    text = export_dot(g, args.depth)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ahp", description="Attributed hierarchical port graph rewriting.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a document")
    p.add_argument("file")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("match", help="list the matches of a rule in a graph")
    p.add_argument("file")
    p.add_argument("--rule", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--json", action="store_true", help="machine readable output")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("rewrite", help="apply a rule at the K-th match")
    p.add_argument("file")
    p.add_argument("--rule", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--match", type=int, default=0, metavar="K")
    p.add_argument("-o", "--output", metavar="OUT")
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("flatten", help="replace every laddered node by its ladder")
    p.add_argument("file")
    p.add_argument("--graph", required=True)
    p.add_argument("-o", "--output", metavar="OUT")
    p.set_defaults(func=cmd_flatten)

    p = sub.add_parser("run", help="run a named strategy")
    p.add_argument("file")
    p.add_argument("--strategy", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("-o", "--output", metavar="OUT")
    p.add_argument("--trace", metavar="DIR", help="write one document per step and a manifest")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("export-dot", help="render a graph as Graphviz DOT")
    p.add_argument("file")
    p.add_argument("--graph", required=True)
    p.add_argument("--depth", type=int, default=0)
    p.add_argument("-o", "--output", metavar="OUT")
    p.set_defaults(func=cmd_export_dot)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ahp {args.command}: {exc}", file=sys.stderr)
        return 2
    except DocumentError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
