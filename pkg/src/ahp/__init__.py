"""Rewriting engine for attributed hierarchical port graphs."""

from .expr import AttrVar, EvalError, Var, parse_expr
from .graph import (
    GraphBuilder,
    PortGraph,
    Record,
    Signature,
    atts,
    interface,
    record_get,
    validate_port_graph,
)
from .hierarchy import AhpGraph, FlattenError, GraphVar, flatten, flatten_rule, level, validate_ahp
from .iso import isomorphic
from .matching import (
    Match,
    Morphism,
    brute_force_matches,
    check_match,
    eval_condition,
    find_matches,
    match_ladder,
)
from .rewriting import (
    RewriteError,
    RewriteStep,
    apply,
    check_flatten_commutes,
    instantiate_rhs,
    is_simple,
    rewrite,
    validate_rule,
)
from .rule import ArrowPort, Rule
from .strategy import Derivation, parse_strategy, run
from .document import Document, DocumentError, emit_document, parse_document
from .dot import export_dot

__all__ = [
    "AhpGraph", "ArrowPort", "AttrVar", "Derivation", "Document", "DocumentError", "EvalError",
    "FlattenError", "GraphBuilder", "GraphVar", "Match", "Morphism", "PortGraph", "Record",
    "RewriteError", "RewriteStep", "Rule", "Signature", "Var", "apply", "atts", "brute_force_matches",
    "check_flatten_commutes", "check_match", "emit_document", "eval_condition", "export_dot",
    "find_matches", "flatten", "flatten_rule", "instantiate_rhs", "interface", "is_simple",
    "isomorphic", "level", "match_ladder", "parse_document", "parse_expr", "parse_strategy",
    "record_get", "rewrite", "run", "validate_ahp", "validate_port_graph", "validate_rule",
]
