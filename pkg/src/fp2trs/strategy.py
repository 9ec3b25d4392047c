"""Transformation combinators and the default simplification pipeline:

    simplify = simpATRS; toTRS; simpTRS
      simpATRS = exhaustive inline(lambda-rewrite); exhaustive inline(match);
                 exhaustive inline(constructor); usableRules
      toTRS    = cfa; uncurry; usableRules
      simpTRS  = exhaustive ((inline(decreasing); usableRules) <> cfaDCE)

A primitive either returns a transformed system or reports itself
inapplicable. Sequencing tries its left side, then feeds the intermediate to
the right side, and is inapplicable only when neither side applied; choice is
left-biased on applicability; exhaustive iterates to inapplicability or a
fixed point and is always applicable itself.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import cfa, transforms
from .errors import FuelExhaustedError, ParseError
from .terms import Atrs

EXHAUSTIVE_FUEL = int(os.environ.get("FP2TRS_EXHAUSTIVE_FUEL", 500))


@dataclass
class StageRecorder:
    """Remembers the system after every applied primitive, for --dump and the
    per-stage invariant checks."""

    stages: list[tuple[str, Atrs]] = field(default_factory=list)

    def record(self, name: str, atrs: Atrs):
        self.stages.append((f"{len(self.stages):02d}-{name}", atrs))

    def names(self) -> list[str]:
        return [name for name, _ in self.stages]

    def lookup(self, key: str) -> Optional[Atrs]:
        for name, atrs in self.stages:
            if name == key or name.split("-", 1)[1] == key:
                return atrs
        for name, atrs in reversed(self.stages):
            if key in name:
                return atrs
        return None


class Strategy:
    def run(self, atrs: Atrs, recorder: Optional[StageRecorder]) -> tuple[Atrs, bool]:
        raise NotImplementedError

    def __call__(self, atrs: Atrs, recorder: Optional[StageRecorder] = None) -> Atrs:
        result, _ = self.run(atrs, recorder)
        return result


@dataclass
class Prim(Strategy):
    name: str
    fn: Callable[[Atrs], Optional[Atrs]]

    def run(self, atrs, recorder):
        result = self.fn(atrs)
        if result is None:
            return atrs, False
        if recorder is not None:
            recorder.record(self.name, result)
        return result, True

    def __repr__(self):
        return self.name


@dataclass
class Seq(Strategy):
    first: Strategy
    second: Strategy

    def run(self, atrs, recorder):
        mid, applied1 = self.first.run(atrs, recorder)
        out, applied2 = self.second.run(mid, recorder)
        return out, applied1 or applied2

    def __repr__(self):
        return f"{self.first!r}; {self.second!r}"


@dataclass
class Choice(Strategy):
    left: Strategy
    right: Strategy

    def run(self, atrs, recorder):
        out, applied = self.left.run(atrs, recorder)
        if applied:
            return out, True
        return self.right.run(atrs, recorder)

    def __repr__(self):
        return f"({self.left!r}) <> ({self.right!r})"


@dataclass
class Exhaustive(Strategy):
    body: Strategy
    fuel: int = EXHAUSTIVE_FUEL

    def run(self, atrs, recorder):
        current = atrs
        for _ in range(self.fuel):
            result, applied = self.body.run(current, recorder)
            if not applied or result == current:
                return result, True
            current = result
        raise FuelExhaustedError(
            f"exhaustive iteration exceeded {self.fuel} rounds", partial=current
        )

    def __repr__(self):
        return f"exhaustive ({self.body!r})"


def run_seq(s1: Strategy, s2: Strategy, atrs: Atrs) -> tuple[Atrs, bool]:
    return Seq(s1, s2).run(atrs, None)


def run_choice(s1: Strategy, s2: Strategy, atrs: Atrs) -> tuple[Atrs, bool]:
    return Choice(s1, s2).run(atrs, None)


def run_exhaustive(s: Strategy, atrs: Atrs, fuel: int = EXHAUSTIVE_FUEL) -> Atrs:
    result, _ = Exhaustive(s, fuel).run(atrs, None)
    return result


# ---------------------------------------------------------------------------
# Primitive transformations (None signals inapplicability)


def _inline_prim(pred: str) -> Prim:
    return Prim(f"inline({pred})", lambda a: transforms.inline(a, pred))


def _usable_rules(atrs: Atrs) -> Optional[Atrs]:
    result = transforms.usable_rules_syntactic(atrs)
    return None if len(result.rules) == len(atrs.rules) else result


def _cfa(atrs: Atrs) -> Optional[Atrs]:
    result = cfa.cfa_transform(atrs)
    return None if result == atrs else result


def _cfa_dce(atrs: Atrs) -> Optional[Atrs]:
    result = cfa.cfa_dce(atrs)
    return None if result == atrs else result


def _uncurry(atrs: Atrs) -> Optional[Atrs]:
    result = transforms.uncurry(atrs)
    return None if result == atrs else result


PRIMS: dict[str, Callable[[], Prim]] = {
    "inline(match)": lambda: _inline_prim(transforms.MATCH_PRED),
    "inline(lambda-rewrite)": lambda: _inline_prim(transforms.LAMBDA_REWRITE_PRED),
    "inline(constructor)": lambda: _inline_prim(transforms.CONSTRUCTOR_PRED),
    "inline(decreasing)": lambda: _inline_prim(transforms.DECREASING_PRED),
    "usableRules": lambda: Prim("usableRules", _usable_rules),
    "cfa": lambda: Prim("cfa", _cfa),
    "cfaDCE": lambda: Prim("cfaDCE", _cfa_dce),
    "uncurry": lambda: Prim("uncurry", _uncurry),
}


def simp_atrs() -> Strategy:
    return Seq(
        Seq(
            Seq(
                Exhaustive(PRIMS["inline(lambda-rewrite)"]()),
                Exhaustive(PRIMS["inline(match)"]()),
            ),
            Exhaustive(PRIMS["inline(constructor)"]()),
        ),
        PRIMS["usableRules"](),
    )


def to_trs() -> Strategy:
    return Seq(Seq(PRIMS["cfa"](), PRIMS["uncurry"]()), PRIMS["usableRules"]())


def simp_trs() -> Strategy:
    return Exhaustive(
        Choice(
            Seq(PRIMS["inline(decreasing)"](), PRIMS["usableRules"]()),
            PRIMS["cfaDCE"](),
        )
    )


def default_strategy() -> Strategy:
    return Seq(Seq(simp_atrs(), to_trs()), simp_trs())


def simplify(atrs: Atrs, recorder: Optional[StageRecorder] = None) -> Atrs:
    """The default pipeline; the output is application-free whenever the
    saturated intermediate system is head variable free."""
    result, _ = default_strategy().run(atrs, recorder)
    return result


# ---------------------------------------------------------------------------
# Tiny combinator syntax for --strategy custom:<expr>
#
#   expr   := choice (';' choice)*
#   choice := atom ('<>' atom)*
#   atom   := 'exhaustive' atom | '(' expr ')' | primitive-name


def parse_strategy(text: str) -> Strategy:
    tokens = _tokenize_strategy(text)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def advance():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_expr():
        left = parse_choice()
        while peek() == ";":
            advance()
            left = Seq(left, parse_choice())
        return left

    def parse_choice():
        left = parse_atom()
        while peek() == "<>":
            advance()
            left = Choice(left, parse_atom())
        return left

    def parse_atom():
        tok = peek()
        if tok is None:
            raise ParseError("unexpected end of strategy expression")
        if tok == "exhaustive":
            advance()
            return Exhaustive(parse_atom())
        if tok == "(":
            advance()
            inner = parse_expr()
            if peek() != ")":
                raise ParseError("expected ')' in strategy expression")
            advance()
            return inner
        advance()
        if tok not in PRIMS:
            raise ParseError(
                f"unknown transformation {tok!r}; known: {', '.join(sorted(PRIMS))}"
            )
        return PRIMS[tok]()

    result = parse_expr()
    if peek() is not None:
        raise ParseError(f"trailing input in strategy expression: {peek()!r}")
    return result


def _tokenize_strategy(text: str) -> list[str]:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif text.startswith("<>", i):
            out.append("<>")
            i += 2
        elif ch in "();":
            out.append(ch)
            i += 1
        else:
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "-_"):
                j += 1
            name = text[i:j]
            # primitive names may carry a parenthesized predicate
            if name != "exhaustive" and j < len(text) and text[j] == "(":
                k = text.find(")", j)
                if k == -1:
                    raise ParseError("unbalanced '(' in strategy name")
                j = k + 1
                name = text[i:j]
            if not name:
                raise ParseError(f"cannot tokenize strategy at {text[i:]!r}")
            out.append(name)
            i = j
    return out
