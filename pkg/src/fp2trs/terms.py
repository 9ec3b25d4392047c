"""First-order terms over a signature with a distinguished application symbol,
plus matching, unification, and the call-by-value rewrite relation with step
counting.

Terms are immutable values; rewriting shares structure but never mutates.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .errors import AmbiguityError, FuelExhaustedError, InvalidPositionError

CONSTRUCTOR = "constructor"
DEFINED = "defined"
APPLICATION = "application"

APP_NAME = "@"

DEFAULT_FUEL = int(os.environ.get("FP2TRS_FUEL", 10**6))

LEFTMOST_INNERMOST = "leftmost_innermost"
RECORD_ALL = "record_all"


class Symbol:
    """Function symbol. Identity is (name, arity); `kind` is bookkeeping that an
    Atrs recomputes from its own rules (the defined/constructor partition)."""

    __slots__ = ("name", "arity", "kind")

    def __init__(self, name: str, arity: int, kind: str = CONSTRUCTOR):
        self.name = name
        self.arity = arity
        self.kind = kind

    def __eq__(self, other):
        return (
            isinstance(other, Symbol)
            and self.name == other.name
            and self.arity == other.arity
        )

    def __hash__(self):
        return hash((self.name, self.arity))

    def __repr__(self):
        return f"{self.name}/{self.arity}"


APP = Symbol(APP_NAME, 2, APPLICATION)


class Term:
    __slots__ = ()


class Var(Term):
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("v", name))

    def __eq__(self, other):
        return isinstance(other, Var) and self.name == other.name

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return format_term(self)


class Fun(Term):
    __slots__ = ("sym", "args", "_hash")

    def __init__(self, sym: Symbol, args: Iterable[Term] = ()):
        args = tuple(args)
        if len(args) != sym.arity:
            raise ValueError(f"{sym!r} applied to {len(args)} arguments")
        self.sym = sym
        self.args = args
        self._hash = hash((sym.name, sym.arity, args))

    def __eq__(self, other):
        return (
            isinstance(other, Fun)
            and self._hash == other._hash
            and self.sym == other.sym
            and self.args == other.args
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return format_term(self)


def app(fn: Term, arg: Term) -> Term:
    return Fun(APP, (fn, arg))


# ---------------------------------------------------------------------------
# Positions


def subterm_at(t: Term, pos) -> Term:
    """Subterm of t at the 1-based position `pos`; the empty position is t."""
    for i in pos:
        if not isinstance(t, Fun) or not (1 <= i <= len(t.args)):
            raise InvalidPositionError(f"position {list(pos)} invalid in {t!r}")
        t = t.args[i - 1]
    return t


def replace_at(t: Term, pos, s: Term) -> Term:
    """t with the subterm at `pos` replaced by s; shares untouched children."""
    if not pos:
        return s
    i = pos[0]
    if not isinstance(t, Fun) or not (1 <= i <= len(t.args)):
        raise InvalidPositionError(f"position {list(pos)} invalid in {t!r}")
    new_child = replace_at(t.args[i - 1], pos[1:], s)
    return Fun(t.sym, t.args[: i - 1] + (new_child,) + t.args[i:])


def positions(t: Term, prefix=()) -> Iterator[tuple]:
    """All positions of t in preorder (root first, children left to right)."""
    yield prefix
    if isinstance(t, Fun):
        for i, a in enumerate(t.args, start=1):
            yield from positions(a, prefix + (i,))


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Fun):
        for a in t.args:
            yield from subterms(a)


def term_size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def term_vars(t: Term) -> list[str]:
    """Variable names of t, in left-to-right order of first occurrence."""
    seen: dict[str, None] = {}
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Var):
            seen.setdefault(u.name, None)
        else:
            stack.extend(reversed(u.args))
    return list(seen)


def symbols_of(t: Term) -> Iterator[Symbol]:
    for u in subterms(t):
        if isinstance(u, Fun):
            yield u.sym


# ---------------------------------------------------------------------------
# Substitutions (plain dicts from variable name to Term)


def apply_subst(t: Term, sigma: dict) -> Term:
    if not sigma:
        return t
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    if all(not isinstance(u, Var) or u.name not in sigma for u in subterms(t)):
        return t
    return _apply(t, sigma)


def _apply(t: Term, sigma: dict) -> Term:
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    return Fun(t.sym, tuple(_apply(a, sigma) for a in t.args))


def compose_subst(sigma: dict, tau: dict) -> dict:
    """Substitution applying sigma first, then tau."""
    out = {x: apply_subst(t, tau) for x, t in sigma.items()}
    for x, t in tau.items():
        out.setdefault(x, t)
    return out


def match(pattern: Term, subject: Term) -> Optional[dict]:
    """Substitution sigma with pattern*sigma == subject, or None.

    Non-linear patterns are handled by a consistency check."""
    sigma: dict = {}
    stack = [(pattern, subject)]
    while stack:
        p, s = stack.pop()
        if isinstance(p, Var):
            bound = sigma.get(p.name)
            if bound is None:
                sigma[p.name] = s
            elif bound != s:
                return None
        elif isinstance(s, Var):
            return None
        elif p.sym == s.sym:
            stack.extend(zip(p.args, s.args))
        else:
            return None
    return sigma


def _occurs(name: str, t: Term, subst: dict) -> bool:
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Var):
            if u.name == name:
                return True
            if u.name in subst:
                stack.append(subst[u.name])
        else:
            stack.extend(u.args)
    return False


def unify(s: Term, t: Term) -> Optional[dict]:
    """Most general unifier of s and t (idempotent), or None.

    Callers must rename variables apart when the terms come from different
    rules; occurs-check failures return None."""
    subst: dict = {}

    def resolve(u: Term) -> Term:
        while isinstance(u, Var) and u.name in subst:
            u = subst[u.name]
        return u

    stack = [(s, t)]
    while stack:
        a, b = stack.pop()
        a = resolve(a)
        b = resolve(b)
        if isinstance(a, Var) and isinstance(b, Var) and a.name == b.name:
            continue
        if isinstance(a, Var):
            if _occurs(a.name, b, subst):
                return None
            subst[a.name] = b
        elif isinstance(b, Var):
            if _occurs(b.name, a, subst):
                return None
            subst[b.name] = a
        elif a.sym == b.sym:
            stack.extend(zip(a.args, b.args))
        else:
            return None

    # Resolve bindings fully so the result is idempotent.
    def deep(u: Term) -> Term:
        u = resolve(u)
        if isinstance(u, Var):
            return u
        return Fun(u.sym, tuple(deep(a) for a in u.args))

    return {x: deep(Var(x)) for x in subst}


_rename_counter = itertools.count(1)


def rename_apart(t: Term, taken: Optional[set] = None) -> tuple[Term, dict]:
    """Rename the variables of t to globally fresh names; returns (t', sigma)."""
    sigma = {}
    for x in term_vars(t):
        fresh = f"{_strip_suffix(x)}~{next(_rename_counter)}"
        sigma[x] = Var(fresh)
    return apply_subst(t, sigma), sigma


def _strip_suffix(name: str) -> str:
    return name.split("~", 1)[0]


def prettify_rule_vars(lhs: Term, rhs: Term) -> tuple[Term, Term]:
    """Rename rule variables back to readable names (strips fresh suffixes)."""
    sigma = {}
    used: set[str] = set()
    for x in term_vars(lhs) + term_vars(rhs):
        if x in sigma:
            continue
        base = _strip_suffix(x) or "v"
        cand, k = base, 1
        while cand in used:
            k += 1
            cand = f"{base}{k}"
        used.add(cand)
        sigma[x] = Var(cand)
    return apply_subst(lhs, sigma), apply_subst(rhs, sigma)


# ---------------------------------------------------------------------------
# Rules and rewrite systems


@dataclass(frozen=True, eq=False)
class Rule:
    lhs: Term
    rhs: Term
    index: int = -1

    def __post_init__(self):
        if isinstance(self.lhs, Var):
            raise ValueError("rule left-hand side must not be a variable")
        extra = set(term_vars(self.rhs)) - set(term_vars(self.lhs))
        if extra:
            raise ValueError(f"rule right-hand side has extra variables {extra}")

    @property
    def root(self) -> Symbol:
        return self.lhs.sym

    def __eq__(self, other):
        return isinstance(other, Rule) and self.lhs == other.lhs and self.rhs == other.rhs

    def __hash__(self):
        return hash((self.lhs, self.rhs))

    def __repr__(self):
        return f"{format_term(self.lhs)} -> {format_term(self.rhs)}"


class Atrs:
    """A finite rule set with a designated main symbol.

    The defined/constructor partition is recomputed from left-hand-side roots;
    the application symbol always counts as defined for the value predicate.
    `data_constructors` are the first-order data constructors (list/nat plus
    declared ones) used for inputs and for the tree-grammar seed; `lam_symbols`
    and `match_symbols` carry closure-constructor origins through the pipeline.
    """

    def __init__(
        self,
        rules: Iterable[Rule],
        main: Symbol,
        data_constructors: Iterable[Symbol] = (),
        lam_symbols: Iterable[str] = (),
        fix_symbols: Iterable[str] = (),
        match_symbols: Iterable[str] = (),
    ):
        self.rules: tuple[Rule, ...] = tuple(
            Rule(r.lhs, r.rhs, i) for i, r in enumerate(rules)
        )
        self.main = main
        self.data_constructors = tuple(data_constructors)
        self.lam_symbols = frozenset(lam_symbols)
        self.fix_symbols = frozenset(fix_symbols)
        self.match_symbols = frozenset(match_symbols)

        roots = {r.root.name for r in self.rules}
        roots.add(main.name)
        self.defined_names = frozenset(roots | {APP_NAME})

        self.signature: dict[str, Symbol] = {}
        for sym in itertools.chain(
            (s for r in self.rules for s in symbols_of(r.lhs)),
            (s for r in self.rules for s in symbols_of(r.rhs)),
            [main],
            self.data_constructors,
        ):
            kind = (
                APPLICATION
                if sym.name == APP_NAME
                else DEFINED if sym.name in roots else CONSTRUCTOR
            )
            self.signature.setdefault(sym.name, Symbol(sym.name, sym.arity, kind))

        self.rules_by_root: dict[str, list[Rule]] = {}
        for r in self.rules:
            self.rules_by_root.setdefault(r.root.name, []).append(r)

    def replace_rules(self, rules: Iterable[Rule]) -> "Atrs":
        return Atrs(
            rules,
            self.main,
            self.data_constructors,
            self.lam_symbols,
            self.fix_symbols,
            self.match_symbols,
        )

    def is_defined_name(self, name: str) -> bool:
        return name in self.defined_names

    def constructors(self) -> list[Symbol]:
        return [s for s in self.signature.values() if s.kind == CONSTRUCTOR]

    def main_rules(self) -> list[Rule]:
        return self.rules_by_root.get(self.main.name, [])

    def __eq__(self, other):
        return (
            isinstance(other, Atrs)
            and self.rules == other.rules
            and self.main == other.main
        )

    def __hash__(self):
        return hash((self.rules, self.main))

    def __repr__(self):
        lines = [f"  ({r.index}) {r!r}" for r in self.rules]
        return "Atrs(main=%s,\n%s)" % (self.main.name, "\n".join(lines))


def is_value(atrs: Atrs, t: Term, _memo=None) -> bool:
    """True iff t contains no defined symbol (variables count as values)."""
    if _memo is None:
        _memo = {}
    key = id(t)
    cached = _memo.get(key)
    if cached is not None:
        return cached
    if isinstance(t, Var):
        result = True
    elif atrs.is_defined_name(t.sym.name):
        result = False
    else:
        result = all(is_value(atrs, a, _memo) for a in t.args)
    _memo[key] = result
    return result


@dataclass(frozen=True)
class Step:
    rule_index: int
    position: tuple
    subst: dict
    result: Term


@dataclass(frozen=True)
class Trace:
    start: Term
    steps: tuple[Step, ...]
    normal_form: Term

    @property
    def length(self) -> int:
        return len(self.steps)


def _root_redex(atrs: Atrs, t: Fun, vmemo) -> Optional[tuple[Rule, dict]]:
    # Full-innermost CbV: a root step requires every argument to be a value,
    # which also forces every matched variable onto a value.
    if not all(is_value(atrs, a, vmemo) for a in t.args):
        return None
    for rule in atrs.rules_by_root.get(t.sym.name, ()):
        if rule.root.arity != t.sym.arity:
            continue
        sigma = match(rule.lhs, t)
        if sigma is not None:
            return rule, sigma
    return None


def cbv_redexes(atrs: Atrs, t: Term, vmemo=None) -> list[tuple[int, tuple, dict]]:
    """Every (rule index, position, substitution) permitted by the CbV relation,
    enumerated innermost-first, left to right."""
    if vmemo is None:
        vmemo = {}
    out: list[tuple[int, tuple, dict]] = []

    def walk(u: Term, prefix: tuple):
        if isinstance(u, Var) or is_value(atrs, u, vmemo):
            return
        for i, a in enumerate(u.args, start=1):
            walk(a, prefix + (i,))
        found = _root_redex(atrs, u, vmemo)
        if found is not None:
            rule, sigma = found
            out.append((rule.index, prefix, sigma))

    walk(t, ())
    return out


def _find_innermost(atrs: Atrs, t: Term, vmemo) -> Optional[tuple[Rule, tuple, dict, Term]]:
    if isinstance(t, Var) or is_value(atrs, t, vmemo):
        return None
    for i, a in enumerate(t.args, start=1):
        found = _find_innermost(atrs, a, vmemo)
        if found is not None:
            rule, pos, sigma, new_a = found
            new_t = Fun(t.sym, t.args[: i - 1] + (new_a,) + t.args[i:])
            return rule, (i,) + pos, sigma, new_t
    found = _root_redex(atrs, t, vmemo)
    if found is None:
        return None
    rule, sigma = found
    return rule, (), sigma, apply_subst(rule.rhs, sigma)


def normalize(
    atrs: Atrs,
    t: Term,
    fuel: int = DEFAULT_FUEL,
    policy: str = LEFTMOST_INNERMOST,
) -> Trace:
    """Reduce t with CbV steps until irreducible or fuel runs out.

    Leftmost-innermost is the canonical policy; `record_all` recomputes the
    full redex set each step and picks the last one, exercising the fact that
    normalizing reductions of non-ambiguous systems all have the same length.
    """
    vmemo: dict = {}
    steps: list[Step] = []
    current = t
    for _ in range(fuel):
        if policy == LEFTMOST_INNERMOST:
            found = _find_innermost(atrs, current, vmemo)
            if found is None:
                return Trace(t, tuple(steps), current)
            rule, pos, sigma, new_t = found
            steps.append(Step(rule.index, pos, sigma, new_t))
            current = new_t
        elif policy == RECORD_ALL:
            redexes = cbv_redexes(atrs, current, vmemo)
            if not redexes:
                return Trace(t, tuple(steps), current)
            idx, pos, sigma = redexes[-1]
            rhs = atrs.rules[idx].rhs
            new_t = replace_at(current, pos, apply_subst(rhs, sigma))
            steps.append(Step(idx, pos, sigma, new_t))
            current = new_t
        else:
            raise ValueError(f"unknown policy {policy!r}")
    raise FuelExhaustedError(
        f"no normal form within {fuel} steps",
        partial=Trace(t, tuple(steps), current),
    )


def replay_trace(atrs: Atrs, trace: Trace) -> bool:
    """Re-run every recorded step; True iff each reproduces its successor."""
    current = trace.start
    for step in trace.steps:
        rule = atrs.rules[step.rule_index]
        redex = subterm_at(current, step.position)
        if match(rule.lhs, redex) != step.subst:
            return False
        current = replace_at(current, step.position, apply_subst(rule.rhs, step.subst))
        if current != step.result:
            return False
    return current == trace.normal_form


def check_non_ambiguous(atrs: Atrs) -> tuple[bool, list[tuple[int, int]]]:
    """True iff left-hand sides are pairwise non-overlapping.

    Rule j overlaps rule i when a renamed copy of lhs_j unifies with lhs_i at
    the root (i != j) or with a proper non-variable subterm of lhs_i."""
    overlaps = []
    for i, ri in enumerate(atrs.rules):
        for j, rj in enumerate(atrs.rules):
            renamed, _ = rename_apart(rj.lhs)
            if i != j and unify(ri.lhs, renamed) is not None:
                overlaps.append((i, j))
                continue
            for pos in positions(ri.lhs):
                if not pos:
                    continue
                sub = subterm_at(ri.lhs, pos)
                if isinstance(sub, Var):
                    continue
                if unify(sub, renamed) is not None:
                    overlaps.append((i, j))
                    break
    return (not overlaps, overlaps)


def assert_non_ambiguous(atrs: Atrs, context: str = "") -> None:
    ok, overlaps = check_non_ambiguous(atrs)
    if not ok:
        raise AmbiguityError(f"overlapping left-hand sides {context}", overlaps)


# ---------------------------------------------------------------------------
# Printing

CONS_NAME = "::"
NIL_NAME = "[]"

_PREC_APP = 10
_PREC_CONS = 5


def format_term(t: Term, style: str = "infix") -> str:
    if style == "infix":
        return _fmt_infix(t, 0)
    if style == "prefix":
        return _fmt_prefix(t)
    raise ValueError(f"unknown style {style!r}")


def _fmt_infix(t: Term, prec: int) -> str:
    if isinstance(t, Var):
        return t.name
    sym = t.sym
    if sym.name == APP_NAME:
        body = f"{_fmt_infix(t.args[0], _PREC_APP)} @ {_fmt_infix(t.args[1], _PREC_APP + 1)}"
        return f"({body})" if prec > _PREC_APP else body
    if sym.name == CONS_NAME and sym.arity == 2:
        body = f"{_fmt_infix(t.args[0], _PREC_CONS + 1)}::{_fmt_infix(t.args[1], _PREC_CONS)}"
        return f"({body})" if prec > _PREC_CONS else body
    if not t.args:
        return sym.name
    return f"{sym.name}({','.join(_fmt_infix(a, 0) for a in t.args)})"


def _fmt_prefix(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    name = "app" if t.sym.name == APP_NAME else t.sym.name
    if not t.args:
        return name
    return f"{name}({','.join(_fmt_prefix(a) for a in t.args)})"


def format_rule(rule: Rule, style: str = "infix") -> str:
    return f"{format_term(rule.lhs, style)} -> {format_term(rule.rhs, style)}"
