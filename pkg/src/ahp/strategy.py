"""A small strategy language for controlling rule application.

Grammar::

    S ::= id | fail | one(NAME) | all(NAME) | seq(S,S) | orelse(S,S)
        | try(S) | repeat(S) | if(S,S,S) | S ; S

``;`` is right-associative sugar for ``seq``.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Mapping, Union

from .hierarchy import AhpGraph
from .matching import Match, check_match, find_matches
from .rewriting import RewriteStep, rewrite
from .rule import Rule

DEFAULT_BUDGET = 10_000


@dataclass(frozen=True)
class Id:
    pass


@dataclass(frozen=True)
class Fail:
    pass


@dataclass(frozen=True)
class One:
    rule: str


@dataclass(frozen=True)
class All:
    rule: str


@dataclass(frozen=True)
class Seq:
    first: "Strategy"
    second: "Strategy"


@dataclass(frozen=True)
class OrElse:
    first: "Strategy"
    second: "Strategy"


@dataclass(frozen=True)
class Try:
    body: "Strategy"


@dataclass(frozen=True)
class Repeat:
    body: "Strategy"


@dataclass(frozen=True)
class If:
    cond: "Strategy"
    then: "Strategy"
    orelse: "Strategy"


Strategy = Union[Id, Fail, One, All, Seq, OrElse, Try, Repeat, If]


class StrategySyntaxError(ValueError):
    def __init__(self, msg: str, column: int):
        super().__init__(f"{msg} at column {column}")
        self.column = column


_TOK = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_\-]*)|([(),;]))")


def parse_strategy(text: str) -> Strategy:
    """Parse strategy text. Columns in errors are 1-based."""
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOK.match(text, pos)
        if not m:
            raise StrategySyntaxError(f"unexpected character {text[pos]!r}", pos + 1)
        word, punct = m.group(1), m.group(2)
        start = m.start(1) if word else m.start(2)
        toks.append((word or punct, start + 1))
        pos = m.end()
    p = _Parser(toks, len(text) + 1)
    s = p.seq()
    if p.i < len(toks):
        tok, col = toks[p.i]
        raise StrategySyntaxError(f"unexpected {tok!r}", col)
    return s


class _Parser:
    def __init__(self, toks, end_col):
        self.toks = toks
        self.i = 0
        self.end_col = end_col

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def expect(self, what: str):
        if self.i >= len(self.toks):
            raise StrategySyntaxError(f"expected {what!r}, found end of input", self.end_col)
        tok, col = self.toks[self.i]
        if tok != what:
            raise StrategySyntaxError(f"expected {what!r}, found {tok!r}", col)
        self.i += 1

    def name(self) -> str:
        if self.i >= len(self.toks):
            raise StrategySyntaxError("expected a rule name, found end of input", self.end_col)
        tok, col = self.toks[self.i]
        if not (tok[0].isalpha() or tok[0] == "_"):
            raise StrategySyntaxError(f"expected a rule name, found {tok!r}", col)
        self.i += 1
        return tok

    def seq(self) -> Strategy:
        s = self.term()
        if self.peek() == ";":
            self.i += 1
            return Seq(s, self.seq())
        return s

    def term(self) -> Strategy:
        if self.i >= len(self.toks):
            raise StrategySyntaxError("expected a strategy, found end of input", self.end_col)
        tok, col = self.toks[self.i]
        self.i += 1
        if tok == "id":
            return Id()
        if tok == "fail":
            return Fail()
        if tok in ("one", "all"):
            self.expect("(")
            n = self.name()
            self.expect(")")
            return One(n) if tok == "one" else All(n)
        arity = {"seq": 2, "orelse": 2, "try": 1, "repeat": 1, "if": 3}.get(tok)
        if arity is None:
            raise StrategySyntaxError(f"unknown strategy {tok!r}", col)
        self.expect("(")
        args = [self.seq()]
        for _ in range(arity - 1):
            self.expect(",")
            args.append(self.seq())
        self.expect(")")
        return {"seq": Seq, "orelse": OrElse, "try": Try, "repeat": Repeat, "if": If}[tok](*args)


def format_strategy(s: Strategy) -> str:
    if isinstance(s, Id):
        return "id"
    if isinstance(s, Fail):
        return "fail"
    if isinstance(s, One):
        return f"one({s.rule})"
    if isinstance(s, All):
        return f"all({s.rule})"
    if isinstance(s, Seq):
        return f"seq({format_strategy(s.first)}, {format_strategy(s.second)})"
    if isinstance(s, OrElse):
        return f"orelse({format_strategy(s.first)}, {format_strategy(s.second)})"
    if isinstance(s, Try):
        return f"try({format_strategy(s.body)})"
    if isinstance(s, Repeat):
        return f"repeat({format_strategy(s.body)})"
    if isinstance(s, If):
        return f"if({format_strategy(s.cond)}, {format_strategy(s.then)}, {format_strategy(s.orelse)})"
    raise TypeError(s)


def rule_names(s: Strategy) -> set[str]:
    if isinstance(s, (One, All)):
        return {s.rule}
    if isinstance(s, (Seq, OrElse)):
        return rule_names(s.first) | rule_names(s.second)
    if isinstance(s, (Try, Repeat)):
        return rule_names(s.body)
    if isinstance(s, If):
        return rule_names(s.cond) | rule_names(s.then) | rule_names(s.orelse)
    return set()


@dataclass
class Derivation:
    initial: AhpGraph
    steps: list[RewriteStep] = field(default_factory=list)
    final: AhpGraph | None = None
    success: bool = True
    budget_used: int = 0

    @property
    def status(self) -> str:
        return "success" if self.success else "failure"


class _OutOfBudget(Exception):
    def __init__(self, graph: AhpGraph, steps: list[RewriteStep]):
        self.graph = graph
        self.steps = steps


class _Runner:
    def __init__(self, rules: Mapping[str, Rule], rng: random.Random, budget: int):
        self.rules = rules
        self.rng = rng
        self.budget = budget
        self.used = 0

    def tick(self, g: AhpGraph, steps: list[RewriteStep]) -> None:
        if self.used >= self.budget:
            raise _OutOfBudget(g, steps)
        self.used += 1

    def run(self, s: Strategy, g: AhpGraph) -> tuple[bool, AhpGraph, list[RewriteStep]]:
        if isinstance(s, Id):
            return True, g, []
        if isinstance(s, Fail):
            return False, g, []
        if isinstance(s, One):
            rule = self.rules[s.rule]
            matches = find_matches(rule, g)
            if not matches:
                return False, g, []
            m = matches[self.rng.randrange(len(matches))]
            self.tick(g, [])
            step = rewrite(rule, g, m)
            return True, step.after, [step]
        if isinstance(s, All):
            return self.run_all(self.rules[s.rule], g)
        if isinstance(s, Seq):
            ok, g1, st1 = self.run_guarded(s.first, g, [])
            if not ok:
                return False, g1, st1
            ok, g2, st2 = self.run_guarded(s.second, g1, st1)
            return ok, g2, st1 + st2
        if isinstance(s, OrElse):
            ok, g1, st1 = self.run(s.first, g)
            if ok:
                return True, g1, st1
            return self.run(s.second, g)
        if isinstance(s, Try):
            return self.run(OrElse(s.body, Id()), g)
        if isinstance(s, Repeat):
            steps: list[RewriteStep] = []
            cur = g
            while True:
                self.tick(cur, steps)
                ok, nxt, st = self.run_guarded(s.body, cur, steps)
                if not ok:
                    return True, cur, steps
                steps += st
                cur = nxt
        if isinstance(s, If):
            ok, _, _ = self.run(s.cond, g)
            return self.run(s.then if ok else s.orelse, g)
        raise TypeError(s)

    def run_guarded(self, s, g, prefix):
        """Run ``s``; on budget exhaustion, report the steps taken so far."""
        try:
            return self.run(s, g)
        except _OutOfBudget as exc:
            raise _OutOfBudget(exc.graph, prefix + exc.steps) from None

    def run_all(self, rule: Rule, g: AhpGraph):
        matches = find_matches(rule, g)
        taken: set[str] = set()
        chosen = []
        for m in matches:
            img = m.image()
            if img & taken:
                continue
            taken |= img
            chosen.append(m)
        steps: list[RewriteStep] = []
        cur = g
        for m in chosen:
            # earlier steps may add edges at this redex; re-check before applying
            moved = Match(m.morphism, cur, m.rule)
            if check_match(rule, cur, m.morphism):
                continue
            self.tick(cur, steps)
            step = rewrite(rule, cur, moved)
            steps.append(step)
            cur = step.after
        return bool(steps), cur, steps


def run(
    strategy: Strategy | str,
    g: AhpGraph,
    rules: Mapping[str, Rule],
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> Derivation:
    """Run ``strategy`` on ``g``; deterministic for a given seed.

    The budget bounds rewrite steps plus ``repeat`` iterations.
    """
    if isinstance(strategy, str):
        strategy = parse_strategy(strategy)
    if budget <= 0:
        raise ValueError("budget must be positive")
    missing = rule_names(strategy) - set(rules)
    if missing:
        raise KeyError(f"unknown rule {sorted(missing)[0]!r}")
    runner = _Runner(rules, random.Random(seed), budget)
    try:
        ok, final, steps = runner.run(strategy, g)
    except _OutOfBudget as exc:
        return Derivation(g, exc.steps, exc.graph, False, runner.used)
    return Derivation(g, steps, final, ok, runner.used)
