"""Complexity-reflecting transformations: narrowing-based inlining with its
site predicates, unification-based dead code elimination, instantiation,
eta saturation, and uncurrying."""

from __future__ import annotations

import itertools
import os
from typing import Iterable, Optional

from . import terms
from .errors import (
    AmbiguityError,
    HeadVariablePresentError,
    SaturationDivergedError,
    UncoveredHeadVariableError,
)
from .terms import (
    APP_NAME,
    Atrs,
    Fun,
    Rule,
    Symbol,
    Term,
    Var,
    apply_subst,
    app,
    match,
    positions,
    prettify_rule_vars,
    rename_apart,
    subterm_at,
    replace_at,
    subterms,
    term_size,
    term_vars,
    unify,
)

ETA_FUEL = int(os.environ.get("FP2TRS_ETA_FUEL", 1000))

MATCH_PRED = "match"
LAMBDA_REWRITE_PRED = "lambda-rewrite"
CONSTRUCTOR_PRED = "constructor"
DECREASING_PRED = "decreasing"

INLINE_PREDICATES = (MATCH_PRED, LAMBDA_REWRITE_PRED, CONSTRUCTOR_PRED, DECREASING_PRED)


# ---------------------------------------------------------------------------
# Narrowing


def _unifying_rules(atrs: Atrs, sub: Term) -> list[tuple[Rule, Term, Term, dict]]:
    """Rules whose renamed left-hand side unifies with `sub`;
    yields (rule, renamed lhs, renamed rhs, mgu)."""
    out = []
    for rule in atrs.rules:
        lhs, ren = rename_apart(rule.lhs)
        rhs = apply_subst(rule.rhs, ren)
        mgu = unify(sub, lhs)
        if mgu is not None:
            out.append((rule, lhs, rhs, mgu))
    return out


def narrowings(atrs: Atrs, rule: Rule, pos) -> list[Rule]:
    """All one-step narrowings of rule.rhs at `pos`: for every u -> v whose
    lhs unifies with rhs|_pos under mgu mu, emit lhs*mu -> (rhs*mu)[v*mu]."""
    sub = subterm_at(rule.rhs, pos)
    if isinstance(sub, Var):
        raise ValueError("cannot narrow at a variable position")
    out = []
    for _, _, rrhs, mgu in _unifying_rules(atrs, sub):
        new_lhs = apply_subst(rule.lhs, mgu)
        new_rhs = replace_at(apply_subst(rule.rhs, mgu), pos, apply_subst(rrhs, mgu))
        new_lhs, new_rhs = prettify_rule_vars(new_lhs, new_rhs)
        out.append(Rule(new_lhs, new_rhs))
    return out


def is_redex_preserving(atrs: Atrs, rule: Rule, pos) -> bool:
    """True iff for every rule u -> v unifying at pos, any u-variable whose
    mgu image contains a defined symbol also occurs in v."""
    sub = subterm_at(rule.rhs, pos)
    for _, lhs, rhs, mgu in _unifying_rules(atrs, sub):
        rhs_vars = set(term_vars(rhs))
        for x in term_vars(lhs):
            image = mgu.get(x)
            if image is None:
                continue
            if _contains_defined(atrs, image) and x not in rhs_vars:
                return False
    return True


def _contains_defined(atrs: Atrs, t: Term) -> bool:
    return any(
        isinstance(u, Fun) and atrs.is_defined_name(u.sym.name) for u in subterms(t)
    )


def _defined_count(atrs: Atrs, t: Term) -> int:
    return sum(
        1 for u in subterms(t) if isinstance(u, Fun) and atrs.is_defined_name(u.sym.name)
    )


# ---------------------------------------------------------------------------
# Inlining


def _rhs_call_sites(atrs: Atrs, name: str) -> int:
    count = 0
    for rule in atrs.rules:
        for u in subterms(rule.rhs):
            if isinstance(u, Fun) and u.sym.name == name:
                count += 1
    return count


def _predicate_holds(atrs: Atrs, rule: Rule, pos, sub: Fun, pred: str, narrowed: list[Rule]) -> bool:
    if pred == MATCH_PRED:
        return sub.sym.name in atrs.match_symbols
    if pred == LAMBDA_REWRITE_PRED:
        # lam(ts) @ t: a plain rewrite, head variables stay uninstantiated
        return (
            sub.sym.name == APP_NAME
            and isinstance(sub.args[0], Fun)
            and sub.args[0].sym.name in atrs.lam_symbols
        )
    if pred == CONSTRUCTOR_PRED:
        return all(not _contains_defined(atrs, n.rhs) for n in narrowed)
    if pred == DECREASING_PRED:
        # proper inlining: the only call site of the inlined function
        if sub.sym.name != APP_NAME and _rhs_call_sites(atrs, sub.sym.name) == 1:
            return True
        # size decrease on every narrowing, function calls weighted first
        # (plain node count keeps constructor wrappers alive forever)
        before = (_defined_count(atrs, rule.rhs), term_size(rule.rhs))
        return all(
            (_defined_count(atrs, n.rhs), term_size(n.rhs)) < before for n in narrowed
        )
    raise ValueError(f"unknown inlining predicate {pred!r}")


def _qualifying(atrs: Atrs, rule: Rule, pred: str) -> Optional[tuple[tuple, list[Rule]]]:
    """Leftmost-outermost rhs position where the predicate holds, the inlining
    is redex preserving, and at least one rule unifies."""
    for pos in positions(rule.rhs):
        sub = subterm_at(rule.rhs, pos)
        if isinstance(sub, Var) or not atrs.is_defined_name(sub.sym.name):
            continue
        narrowed = narrowings(atrs, rule, pos)
        if not narrowed:
            continue
        if not _predicate_holds(atrs, rule, pos, sub, pred, narrowed):
            continue
        if not is_redex_preserving(atrs, rule, pos):
            continue
        return pos, narrowed
    return None


def inline(atrs: Atrs, pred: str) -> Optional[Atrs]:
    """One pass: each rule with a qualifying position is replaced by its
    narrowings there. None when no rule qualifies.

    Inlined symbols are trusted sufficiently defined: translation outputs have
    that property and the transformations here preserve it."""
    new_rules: list[Rule] = []
    changed = False
    for rule in atrs.rules:
        found = _qualifying(atrs, rule, pred)
        if found is None:
            new_rules.append(rule)
        else:
            _, narrowed = found
            new_rules.extend(narrowed)
            changed = True
    if not changed:
        return None
    return atrs.replace_rules(new_rules)


# ---------------------------------------------------------------------------
# Syntactic usable rules (unification-based dead code elimination)


def _cap(atrs: Atrs, t: Fun, counter) -> Term:
    """Keep the root; below it, replace defined- or application-rooted
    subterms by fresh variables so unification over-approximates reachability."""

    def cap_arg(u: Term) -> Term:
        if isinstance(u, Var):
            return u
        if atrs.is_defined_name(u.sym.name):
            return Var(f"$cap{next(counter)}")
        return Fun(u.sym, tuple(cap_arg(a) for a in u.args))

    return Fun(t.sym, tuple(cap_arg(a) for a in t.args))


def usable_rules_syntactic(atrs: Atrs) -> Atrs:
    """Subset of rules reachable from main by the cap-based unification
    closure; sound over-approximation of the rules usable from main(data)."""
    counter = itertools.count(1)
    usable = {r.index for r in atrs.main_rules()}
    changed = True
    while changed:
        changed = False
        capped_sources = []
        for rule in atrs.rules:
            if rule.index not in usable:
                continue
            for u in subterms(rule.rhs):
                if isinstance(u, Fun) and atrs.is_defined_name(u.sym.name):
                    capped_sources.append(_cap(atrs, u, counter))
        for rule in atrs.rules:
            if rule.index in usable:
                continue
            lhs, _ = rename_apart(rule.lhs)
            if any(unify(src, lhs) is not None for src in capped_sources):
                usable.add(rule.index)
                changed = True
    kept = [r for r in atrs.rules if r.index in usable]
    return atrs.replace_rules(kept)


# ---------------------------------------------------------------------------
# Instantiation


def instantiate(atrs: Atrs, plan: dict[int, list[dict]]) -> Atrs:
    """Replace rule i by its plan[i] instances; unplanned rules stay verbatim.
    Refuses plans that break non-ambiguity."""
    new_rules: list[Rule] = []
    for rule in atrs.rules:
        sigmas = plan.get(rule.index)
        if not sigmas:
            new_rules.append(rule)
            continue
        lhs_vars = set(term_vars(rule.lhs))
        seen = set()
        for sigma in sigmas:
            extra = set(sigma) - lhs_vars
            if extra:
                raise ValueError(
                    f"plan for rule {rule.index} binds non-lhs variables {extra}"
                )
            lhs = apply_subst(rule.lhs, sigma)
            rhs = apply_subst(rule.rhs, sigma)
            lhs, rhs = prettify_rule_vars(lhs, rhs)
            if (lhs, rhs) not in seen:
                seen.add((lhs, rhs))
                new_rules.append(Rule(lhs, rhs))
    result = atrs.replace_rules(new_rules)
    ok, overlaps = terms.check_non_ambiguous(result)
    if not ok:
        raise AmbiguityError("instantiation introduced overlapping rules", overlaps)
    return result


# ---------------------------------------------------------------------------
# Applicative arity, eta saturation, uncurrying


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Decompose t = head @ s1 @ ... @ sn (maximal application spine)."""
    args: list[Term] = []
    while isinstance(t, Fun) and t.sym.name == APP_NAME:
        args.append(t.args[1])
        t = t.args[0]
    args.reverse()
    return t, args


def applicative_arity(atrs: Atrs, sym: Symbol) -> int:
    """Maximal n such that sym(ts) @ t1 @ ... @ tn occurs in the system."""
    best = 0
    for rule in atrs.rules:
        for side in (rule.lhs, rule.rhs):
            for u in subterms(side):
                head, args = spine(u)
                if isinstance(head, Fun) and head.sym == sym:
                    best = max(best, len(args))
    return best


def _all_arities(atrs: Atrs) -> dict[Symbol, int]:
    table: dict[Symbol, int] = {}
    for rule in atrs.rules:
        for side in (rule.lhs, rule.rhs):
            for u in subterms(side):
                head, args = spine(u)
                if isinstance(head, Fun) and head.sym.name != APP_NAME:
                    key = head.sym
                    table[key] = max(table.get(key, 0), len(args))
    return table


def _canonical_rule(rule: Rule):
    mapping: dict[str, str] = {}
    for x in term_vars(rule.lhs) + term_vars(rule.rhs):
        mapping.setdefault(x, f"#{len(mapping)}")

    def canon(t: Term):
        if isinstance(t, Var):
            return mapping[t.name]
        return (t.sym.name, t.sym.arity, tuple(canon(a) for a in t.args))

    return canon(rule.lhs), canon(rule.rhs)


def _eta_closure(atrs: Atrs, fuel: int = ETA_FUEL) -> list[tuple[Rule, int]]:
    """Least eta-saturated extension, each rule tagged with the index of the
    original rule it extends. Diverges (fuel) on untyped inputs."""
    rules: list[tuple[Rule, int]] = [(r, r.index) for r in atrs.rules]
    seen = {_canonical_rule(r) for r in atrs.rules}
    for _ in range(fuel):
        current = atrs.replace_rules([r for r, _ in rules])
        arities = _all_arities(current)
        added = False
        for rule, origin in list(rules):
            head, args = spine(rule.lhs)
            if not isinstance(head, Fun) or head.sym.name == APP_NAME:
                continue
            if len(args) >= arities.get(head.sym, 0):
                continue
            avoid = set(term_vars(rule.lhs))
            z = "z"
            k = 0
            while z in avoid:
                k += 1
                z = f"z{k}"
            new_rule = Rule(app(rule.lhs, Var(z)), app(rule.rhs, Var(z)))
            key = _canonical_rule(new_rule)
            if key not in seen:
                seen.add(key)
                rules.append((new_rule, origin))
                added = True
        if not added:
            return rules
    raise SaturationDivergedError(
        f"eta saturation did not converge within {fuel} rounds", partial=rules
    )


def eta_saturate(atrs: Atrs, fuel: int = ETA_FUEL) -> Atrs:
    return atrs.replace_rules([r for r, _ in _eta_closure(atrs, fuel)])


def is_head_variable_free(atrs: Atrs) -> tuple[bool, list[tuple[int, str, tuple]]]:
    """No subterm x @ t with x a variable; offending (rule, side, position)s."""
    sites = []
    for rule in atrs.rules:
        for side_name, side in (("lhs", rule.lhs), ("rhs", rule.rhs)):
            for pos in positions(side):
                u = subterm_at(side, pos)
                if (
                    isinstance(u, Fun)
                    and u.sym.name == APP_NAME
                    and isinstance(u.args[0], Var)
                ):
                    sites.append((rule.index, side_name, pos))
    return (not sites, sites)


class _Uncurrier:
    def __init__(self, atrs: Atrs, arities: dict[Symbol, int]):
        self.arities = arities
        self.names_taken = set(atrs.signature)
        self.symbols: dict[tuple[str, int, int], Symbol] = {}

    def symbol_for(self, base: Symbol, n: int) -> Symbol:
        if n == 0:
            return base
        key = (base.name, base.arity, n)
        sym = self.symbols.get(key)
        if sym is None:
            name = base.name + "u" * n
            k = 1
            while name in self.names_taken:
                k += 1
                name = f"{base.name}{'u' * n}_{k}"
            self.names_taken.add(name)
            sym = Symbol(name, base.arity + n, terms.DEFINED)
            self.symbols[key] = sym
        return sym

    def term(self, t: Term) -> Term:
        if isinstance(t, Var):
            return t
        head, args = spine(t)
        if args:
            if isinstance(head, Var):
                raise HeadVariablePresentError("head variable in term", [()])
            sym = self.symbol_for(head.sym, len(args))
            return Fun(sym, tuple(self.term(a) for a in head.args + tuple(args)))
        return Fun(t.sym, tuple(self.term(a) for a in t.args))


def uncurry_with_embedding(atrs: Atrs, fuel: int = ETA_FUEL):
    """(eta-saturation, uncurried system, term embedding).

    The embedding flattens every maximal spine f(ts) @ s1 @ ... @ sn into a
    fresh symbol of arity m+n; no auxiliary application rules are needed since
    the saturated system must be head variable free."""
    eta_rules = _eta_closure(atrs, fuel)
    eta = atrs.replace_rules([r for r, _ in eta_rules])
    ok, sites = is_head_variable_free(eta)
    if not ok:
        raise HeadVariablePresentError(
            "eta-saturated system has head variables; uncurrying undefined", sites
        )
    uc = _Uncurrier(eta, _all_arities(eta))
    new_rules = [Rule(uc.term(r.lhs), uc.term(r.rhs)) for r, _ in eta_rules]
    # spines collapse to distinct symbols, so duplicates cannot arise, but an
    # already uncurried rule and its (absent) eta extension stay identical
    deduped = []
    seen = set()
    for rule in new_rules:
        key = _canonical_rule(rule)
        if key not in seen:
            seen.add(key)
            deduped.append(rule)
    result = atrs.replace_rules(deduped)
    return eta, result, uc.term


def uncurry(atrs: Atrs, fuel: int = ETA_FUEL) -> Atrs:
    _, result, _ = uncurry_with_embedding(atrs, fuel)
    return result
