"""Attribute values and the small expression language used in records and rule conditions.

Base values are floats, strings and booleans. Rule graphs may additionally carry
value variables (:class:`Var`) and expressions (:class:`BinOp`, :class:`UnOp`)
built from literals and variables.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Mapping, Union

Base = Union[float, str, bool]


@dataclass(frozen=True)
class Var:
    """A value variable (pattern position)."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class AttrVar:
    """An attribute variable, usable as a record key in rule graphs."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Lit:
    value: Base


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnOp:
    op: str
    operand: "Expr"


Expr = Union[Lit, Var, BinOp, UnOp]
Value = Union[float, str, bool, Var, BinOp, UnOp]

ARITH = {"+", "-", "*", "/"}
COMPARE = {"==", "!=", "<", "<=", ">", ">="}
LOGIC = {"and", "or"}


class EvalError(Exception):
    """Raised when an expression cannot be evaluated (unbound, type error, div by zero)."""


def normalize(v):
    """Coerce Python ints to float; leave other values alone."""
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return float(v)
    return v


def is_base(v) -> bool:
    return isinstance(v, (float, str, bool))


def same_value(a, b) -> bool:
    """Type-strict equality on base values (``True`` is not ``1.0``)."""
    return type(a) is type(b) and a == b


def free_vars(v) -> set[str]:
    if isinstance(v, Var):
        return {v.name}
    if isinstance(v, BinOp):
        return free_vars(v.left) | free_vars(v.right)
    if isinstance(v, UnOp):
        return free_vars(v.operand)
    return set()


def has_vars(v) -> bool:
    return bool(free_vars(v))


def evaluate(v, env: Mapping[str, object] | None = None) -> Base:
    env = env or {}
    if isinstance(v, Lit):
        return normalize(v.value)
    v = normalize(v)
    if is_base(v):
        return v
    if isinstance(v, Var):
        if v.name not in env:
            raise EvalError(f"unbound variable {v.name}")
        val = normalize(env[v.name])
        if not is_base(val):
            raise EvalError(f"variable {v.name} is not bound to a base value")
        return val
    if isinstance(v, UnOp):
        x = evaluate(v.operand, env)
        if v.op == "not":
            if not isinstance(x, bool):
                raise EvalError("'not' expects a boolean")
            return not x
        if v.op == "-":
            if not _is_num(x):
                raise EvalError("unary '-' expects a number")
            return -x
        raise EvalError(f"unknown operator {v.op}")
    if isinstance(v, BinOp):
        op = v.op
        if op in LOGIC:
            a = evaluate(v.left, env)
            if not isinstance(a, bool):
                raise EvalError(f"'{op}' expects booleans")
            if op == "and" and not a:
                return False
            if op == "or" and a:
                return True
            b = evaluate(v.right, env)
            if not isinstance(b, bool):
                raise EvalError(f"'{op}' expects booleans")
            return b
        a = evaluate(v.left, env)
        b = evaluate(v.right, env)
        if op in ARITH:
            if not (_is_num(a) and _is_num(b)):
                raise EvalError(f"'{op}' expects numbers")
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if b == 0:
                raise EvalError("division by zero")
            return a / b
        if op == "==":
            return same_value(a, b)
        if op == "!=":
            return not same_value(a, b)
        if op in COMPARE:
            if not ((_is_num(a) and _is_num(b)) or (isinstance(a, str) and isinstance(b, str))):
                raise EvalError(f"'{op}' expects two numbers or two strings")
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
        raise EvalError(f"unknown operator {op}")
    raise EvalError(f"not an expression: {v!r}")


def _is_num(x) -> bool:
    return isinstance(x, float) and not isinstance(x, bool)


def substitute(v, env: Mapping[str, object]):
    """Replace bound variables and evaluate closed expressions."""
    if isinstance(v, Var):
        return env[v.name] if v.name in env else v
    if isinstance(v, (BinOp, UnOp)):
        if free_vars(v) <= set(env):
            return evaluate(v, env)
        if isinstance(v, BinOp):
            return BinOp(v.op, _as_expr(substitute(v.left, env)), _as_expr(substitute(v.right, env)))
        return UnOp(v.op, _as_expr(substitute(v.operand, env)))
    return v


def _as_expr(v):
    return Lit(v) if is_base(v) else v


# -- text form ---------------------------------------------------------------

_PREC = {"or": 1, "and": 2, "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6}


def format_value(v, parent: int = 0) -> str:
    if isinstance(v, Lit):
        v = v.value
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return _quote(v)
    if isinstance(v, Var):
        return v.name
    if isinstance(v, UnOp):
        inner = format_value(v.operand, 7)
        s = f"not {inner}" if v.op == "not" else f"-{inner}"
        return f"({s})" if parent > 3 and v.op == "not" else s
    if isinstance(v, BinOp):
        p = _PREC[v.op]
        s = f"{format_value(v.left, p)} {v.op} {format_value(v.right, p + 1)}"
        return f"({s})" if p < parent else s
    raise TypeError(f"cannot format {v!r}")


def _quote(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


class ExprSyntaxError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at offset {pos}")
        self.pos = pos


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?|\.\d+)"
    r"|(?P<str>\"(?:[^\"\\]|\\.)*\")"
    r"|(?P<op>==|!=|<=|>=|[-+*/<>()])"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*))"
)


def parse_expr(text: str, variables=None) -> Value:
    """Parse an expression. Bare identifiers are value variables.

    ``variables``, when given, restricts which identifiers are accepted.
    """
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    p = _ExprParser(toks, len(text), variables)
    v = p.expr(0)
    if p.i != len(toks):
        raise ExprSyntaxError(f"unexpected token {toks[p.i][1]!r}", toks[p.i][2])
    return v


class _ExprParser:
    def __init__(self, toks, end, variables):
        self.toks = toks
        self.i = 0
        self.end = end
        self.variables = variables

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self):
        t = self.peek()
        if t is None:
            raise ExprSyntaxError("unexpected end of expression", self.end)
        self.i += 1
        return t

    def expr(self, min_prec: int):
        left = self.unary()
        while True:
            t = self.peek()
            if t is None:
                return left
            op = t[1]
            if t[0] not in ("op", "name") or op not in _PREC or _PREC[op] < min_prec:
                return left
            self.i += 1
            prec = _PREC[op]
            right = self.expr(prec + 1)
            left = _fold(BinOp(op, _as_expr(left), _as_expr(right)))

    def unary(self):
        t = self.peek()
        if t is not None and t[1] == "not" and t[0] == "name":
            self.i += 1
            return _fold(UnOp("not", _as_expr(self.expr(3))))
        if t is not None and t[1] == "-" and t[0] == "op":
            self.i += 1
            return _fold(UnOp("-", _as_expr(self.unary())))
        return self.atom()

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return float(val)
        if kind == "str":
            return json.loads(val)
        if kind == "op" and val == "(":
            v = self.expr(0)
            t = self.take()
            if t[1] != ")":
                raise ExprSyntaxError("expected ')'", t[2])
            return v
        if kind == "name":
            if val == "true":
                return True
            if val == "false":
                return False
            if val in ("and", "or", "not"):
                raise ExprSyntaxError(f"unexpected keyword {val!r}", pos)
            if self.variables is not None and val not in self.variables:
                raise ExprSyntaxError(f"undeclared variable {val!r}", pos)
            return Var(val)
        raise ExprSyntaxError(f"unexpected token {val!r}", pos)


def _fold(e):
    """Constant-fold closed sub-expressions; keep them symbolic if evaluation fails."""
    if free_vars(e):
        return e
    try:
        return evaluate(e)
    except EvalError:
        return e
