"""Control flow analysis via regular tree grammars.

The grammar over-approximates the collecting semantics of an ATRS: a start
production covers every call main(d1,...,dn) on data, and a fixpoint closure
adds, for every production whose right-hand side can generate an instance of
a rule's left-hand side, the corresponding reduct and variable-binding
productions. Nonterminals are encoded as reserved nullary symbols ("%..."),
so grammar right-hand sides are ordinary terms.

Bindings are required to be normalized in the shallow, syntactic sense: the
bound grammar term itself contains no defined symbol, while nonterminals stay
opaque. This mirrors the call-by-value restriction without rejecting
reduct-nonterminals (a head variable may well be bound to the result of a
recursive call).
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterable, Optional

from . import transforms
from .errors import FuelExhaustedError, UncoveredHeadVariableError
from .terms import (
    APP_NAME,
    Atrs,
    Fun,
    Rule,
    Symbol,
    Term,
    Var,
    positions,
    replace_at,
    subterm_at,
    subterms,
    term_vars,
)

GRAMMAR_FUEL = int(os.environ.get("FP2TRS_GRAMMAR_FUEL", 100_000))

_NT_PREFIX = "%"
NT_KIND = "nonterminal"


@dataclass(frozen=True)
class NonTerminal:
    kind: str  # "start" | "any" | "rule" | "var"
    rule_index: int = -1
    var: str = ""

    @property
    def name(self) -> str:
        if self.kind == "start":
            return "%S"
        if self.kind == "any":
            return "%*"
        if self.kind == "rule":
            return f"%R{self.rule_index}"
        return f"%V:{self.var}:{self.rule_index}"

    def __repr__(self):
        if self.kind == "start":
            return "S"
        if self.kind == "any":
            return "*"
        if self.kind == "rule":
            return f"R{self.rule_index}"
        return f"{self.var}_{self.rule_index}"


START = NonTerminal("start")
ANY = NonTerminal("any")


def rule_nt(i: int) -> NonTerminal:
    return NonTerminal("rule", i)


def var_nt(var: str, i: int) -> NonTerminal:
    return NonTerminal("var", i, var)


def nt_term(nt: NonTerminal) -> Fun:
    return Fun(Symbol(nt.name, 0, NT_KIND))


def is_nt(t: Term) -> bool:
    return isinstance(t, Fun) and t.sym.name.startswith(_NT_PREFIX)


def nt_of(t: Fun) -> NonTerminal:
    name = t.sym.name
    if name == "%S":
        return START
    if name == "%*":
        return ANY
    if name.startswith("%R"):
        return rule_nt(int(name[2:]))
    _, var, idx = name.split(":")
    return var_nt(var, int(idx))


class TreeGrammar:
    def __init__(self, productions: Iterable[tuple[str, Term]] = ()):
        self._prods: dict[tuple[str, Term], None] = {}
        self.by_nt: dict[str, list[Term]] = {}
        for nt_name, rhs in productions:
            self.add(nt_name, rhs)

    def add(self, nt_name: str, rhs: Term) -> bool:
        key = (nt_name, rhs)
        if key in self._prods:
            return False
        self._prods[key] = None
        self.by_nt.setdefault(nt_name, []).append(rhs)
        return True

    def productions(self) -> list[tuple[str, Term]]:
        return [key for key in self._prods]

    def productions_of(self, nt: NonTerminal) -> list[Term]:
        return list(self.by_nt.get(nt.name, ()))

    def __len__(self):
        return len(self._prods)

    def __repr__(self):
        lines = []
        for nt_name, rhss in self.by_nt.items():
            shown = " | ".join(repr(t) for t in rhss)
            lines.append(f"  {nt_name} -> {shown}")
        return "TreeGrammar(\n%s)" % "\n".join(lines)


def initial_grammar(atrs: Atrs) -> TreeGrammar:
    """S -> main(*,...,*) and * -> c(*,...,*) for each data constructor."""
    g = TreeGrammar()
    star = nt_term(ANY)
    g.add(START.name, Fun(atrs.signature[atrs.main.name], (star,) * atrs.main.arity))
    for con in atrs.data_constructors:
        g.add(ANY.name, Fun(con, (star,) * con.arity))
    return g


def _contains_defined(atrs: Atrs, t: Term) -> bool:
    for u in subterms(t):
        if isinstance(u, Fun) and not is_nt(u) and atrs.is_defined_name(u.sym.name):
            return True
    return False


def _lazy_match(g: TreeGrammar, atrs: Atrs, pattern: Term, gterm: Term) -> list[dict]:
    """Substitutions from pattern variables to grammar terms witnessing that
    gterm generates an instance of pattern by a minimal derivation.

    A nonterminal is expanded only when the pattern node below it is not a
    variable; a variable is bound to the unexpanded grammar term. Bindings
    whose term contains a defined symbol are rejected (normalized bindings)."""

    def go(p: Term, t: Term, sigma: dict, expanding: frozenset) -> list[dict]:
        if isinstance(p, Var):
            bound = sigma.get(p.name)
            if bound is not None:
                return [sigma] if bound == t else []
            if _contains_defined(atrs, t):
                return []
            new = dict(sigma)
            new[p.name] = t
            return [new]
        if is_nt(t):
            name = t.sym.name
            if name in expanding:
                return []
            inner = expanding | {name}
            out = []
            for alt in g.by_nt.get(name, ()):
                out.extend(go(p, alt, sigma, inner))
            return out
        if isinstance(t, Var):
            return []
        if p.sym != t.sym:
            return []
        results = [sigma]
        for pa, ta in zip(p.args, t.args):
            results = [s2 for s in results for s2 in go(pa, ta, s, frozenset())]
            if not results:
                return []
        return results

    # distinct expansions can yield identical sigmas; dedup preserving order
    seen = []
    for sigma in go(pattern, gterm, {}, frozenset()):
        if sigma not in seen:
            seen.append(sigma)
    return seen


def _inject(rule: Rule) -> Term:
    """Rule rhs with every variable replaced by its per-rule nonterminal."""

    def go(t: Term) -> Term:
        if isinstance(t, Var):
            return nt_term(var_nt(t.name, rule.index))
        return Fun(t.sym, tuple(go(a) for a in t.args))

    return go(rule.rhs)


def build_grammar(atrs: Atrs, fuel: int = GRAMMAR_FUEL) -> TreeGrammar:
    """Least grammar containing the initial one and closed under extension:
    if a production right-hand side generates an instance of lhs_i with
    normalized bindings, record the rewrite to R_i, the reduct production
    R_i -> rhs_i, and the variable bindings. Terminates because expansion is
    minimal; fuel is a hard safety bound."""
    g = initial_grammar(atrs)
    additions = 0
    changed = True
    while changed:
        changed = False
        for nt_name, rhs in g.productions():
            for pos in positions(rhs):
                sub = subterm_at(rhs, pos)
                if not isinstance(sub, Fun) or is_nt(sub):
                    continue
                if not atrs.is_defined_name(sub.sym.name):
                    continue
                for rule in atrs.rules:
                    for sigma in _lazy_match(g, atrs, rule.lhs, sub):
                        new_prods = [
                            (nt_name, replace_at(rhs, pos, nt_term(rule_nt(rule.index)))),
                            (rule_nt(rule.index).name, _inject(rule)),
                        ]
                        for x in term_vars(rule.lhs):
                            if x in sigma:
                                new_prods.append((var_nt(x, rule.index).name, sigma[x]))
                        for key, value in new_prods:
                            if g.add(key, value):
                                changed = True
                                additions += 1
                                if additions > fuel:
                                    raise FuelExhaustedError(
                                        f"grammar closure exceeded {fuel} productions",
                                        partial=g,
                                    )
    return g


def generates(g: TreeGrammar, nt: NonTerminal, t: Term, _memo=None) -> bool:
    """Decide nt =>* t for a ground term t over the signature."""
    if _memo is None:
        _memo = {}

    def nt_gen(name: str, target: Term, visiting: frozenset) -> tuple[bool, bool]:
        # returns (answer, tainted): tainted answers crossed an in-progress
        # node and must not be cached as negative
        key = (name, target)
        cached = _memo.get(key)
        if cached is not None:
            return cached, False
        if key in visiting:
            return False, True
        inner = visiting | {key}
        tainted = False
        for alt in g.by_nt.get(name, ()):
            ok, t2 = term_gen(alt, target, inner)
            tainted = tainted or t2
            if ok:
                _memo[key] = True
                return True, False
        if not tainted:
            _memo[key] = False
        return False, tainted

    def term_gen(w: Term, target: Term, visiting: frozenset) -> tuple[bool, bool]:
        if is_nt(w):
            return nt_gen(w.sym.name, target, visiting)
        if isinstance(w, Var) or isinstance(target, Var):
            return False, False
        if not isinstance(target, Fun) or w.sym != target.sym:
            return False, False
        tainted = False
        for wa, ta in zip(w.args, target.args):
            ok, t2 = term_gen(wa, ta, visiting)
            tainted = tainted or t2
            if not ok:
                return False, tainted
        return True, tainted

    ok, _ = nt_gen(nt.name, t, frozenset())
    return ok


def eliminate_epsilon(g: TreeGrammar) -> TreeGrammar:
    """Remove productions N -> M (bare nonterminal) by the usual closure; the
    generated language of every nonterminal is unchanged."""
    reach: dict[str, list[str]] = {}
    for name in g.by_nt:
        seen = [name]
        frontier = [name]
        while frontier:
            current = frontier.pop()
            for alt in g.by_nt.get(current, ()):
                if is_nt(alt) and alt.sym.name not in seen:
                    seen.append(alt.sym.name)
                    frontier.append(alt.sym.name)
        reach[name] = seen
    out = TreeGrammar()
    for name in g.by_nt:
        for member in reach[name]:
            for alt in g.by_nt.get(member, ()):
                if not is_nt(alt):
                    out.add(name, alt)
    return out


def dead_rules(g: TreeGrammar, atrs: Atrs) -> set[int]:
    """Rule indices the grammar never fired (no R_i production): dead code."""
    return {
        rule.index for rule in atrs.rules if rule_nt(rule.index).name not in g.by_nt
    }


# ---------------------------------------------------------------------------
# Binders and the cfa transformations


def head_variables(atrs: Atrs) -> dict[int, set[str]]:
    """Per-rule head variables with respect to the eta-saturated system:
    variables applied via @ in the rule itself or any of its eta extensions."""
    out: dict[int, set[str]] = {r.index: set() for r in atrs.rules}
    for rule, origin in transforms._eta_closure(atrs):
        acc = out.setdefault(origin, set())
        for side in (rule.lhs, rule.rhs):
            for u in subterms(side):
                if (
                    isinstance(u, Fun)
                    and u.sym.name == APP_NAME
                    and isinstance(u.args[0], Var)
                ):
                    acc.add(u.args[0].name)
    return out


def binders(g: TreeGrammar, atrs: Atrs, skip: Iterable[int] = ()) -> dict[int, list[dict]]:
    """Instantiation plan from an epsilon-free grammar.

    A binder records only the root constructor of a production, with all
    arguments freshened to variables; productions rooted in defined symbols
    are discarded. The extra generality over freshening the whole production
    keeps the plan small (one binder per root symbol) and can only make the
    instantiation more exhaustive. Head variables always get binders; other
    left-hand-side variables only when their production root is unique. The
    product combination of the per-variable binder sets yields the
    substitutions for each rule."""
    skip_set = set(skip)
    heads = head_variables(atrs)
    plan: dict[int, list[dict]] = {}
    for rule in atrs.rules:
        if rule.index in skip_set:
            continue
        lhs_vars = term_vars(rule.lhs)
        per_var: list[tuple[str, list[Term]]] = []
        taken = set(lhs_vars)
        counter = itertools.count(1)

        def alloc(base):
            name = base
            while name in taken:
                name = f"{base}{next(counter)}"
            taken.add(name)
            return name

        def binder_for(w: Term) -> Term:
            return Fun(w.sym, tuple(Var(alloc("v")) for _ in w.args))

        for x in lhs_vars:
            prods = g.productions_of(var_nt(x, rule.index))
            is_head = x in heads.get(rule.index, ())
            roots = []
            for w in prods:
                if is_nt(w) or atrs.is_defined_name(w.sym.name):
                    continue
                if w.sym not in roots:
                    roots.append(w.sym)
            if is_head:
                if not roots:
                    raise UncoveredHeadVariableError(
                        f"head variable {x} of rule {rule.index} has no binder"
                    )
                per_var.append(
                    (x, [binder_for(Fun(sym, (Var("_"),) * sym.arity)) for sym in roots])
                )
            elif len(prods) == 1 and len(roots) == 1:
                per_var.append((x, [binder_for(prods[0])]))
        if not per_var:
            continue
        combos: list[dict] = [{}]
        for x, bs in per_var:
            next_combos = []
            for c in combos:
                for b in bs:
                    merged = dict(c)
                    merged[x] = b
                    next_combos.append(merged)
            combos = next_combos
        plan[rule.index] = combos
    return plan


def cfa_transform(atrs: Atrs, fuel: int = GRAMMAR_FUEL) -> Atrs:
    """Grammar construction, dead rule removal, epsilon elimination, binder
    computation, instantiation."""
    g = build_grammar(atrs, fuel)
    dead = dead_rules(g, atrs)
    g2 = eliminate_epsilon(g)
    plan = binders(g2, atrs, skip=dead)

    live = [r for r in atrs.rules if r.index not in dead]
    live_atrs = atrs.replace_rules(live)
    renumbered = {}
    for new_rule, old_rule in zip(live_atrs.rules, live):
        if old_rule.index in plan:
            renumbered[new_rule.index] = plan[old_rule.index]
    return transforms.instantiate(live_atrs, renumbered)


def cfa_dce(atrs: Atrs, fuel: int = GRAMMAR_FUEL) -> Atrs:
    """Dead code elimination only, no instantiation."""
    g = build_grammar(atrs, fuel)
    dead = dead_rules(g, atrs)
    if not dead:
        return atrs
    return atrs.replace_rules([r for r in atrs.rules if r.index not in dead])


def format_grammar(g: TreeGrammar) -> str:
    """Productions in `N -> t1 | t2` notation with readable nonterminals."""

    def show(t: Term) -> str:
        if is_nt(t):
            return repr(nt_of(t))
        if isinstance(t, Var):
            return t.name
        if t.sym.name == APP_NAME:
            return f"{show(t.args[0])} @ ({show(t.args[1])})"
        if t.sym.name == "::" and t.sym.arity == 2:
            return f"{show(t.args[0])}::{show(t.args[1])}"
        if not t.args:
            return t.sym.name
        return f"{t.sym.name}({','.join(show(a) for a in t.args)})"

    lines = []
    for nt_name, rhss in g.by_nt.items():
        head = repr(nt_of(Fun(Symbol(nt_name, 0, NT_KIND))))
        lines.append(f"{head} -> {' | '.join(show(t) for t in rhss)}")
    return "\n".join(lines) + "\n"
