"""The four transformations and their side conditions."""

import itertools
import random

import pytest

from fp2trs import terms, transforms, trs_io
from fp2trs.errors import AmbiguityError, HeadVariablePresentError, SaturationDivergedError
from fp2trs.terms import Atrs, Fun, Rule, Symbol, Var, app, apply_subst, match, normalize
from fp2trs.transforms import (
    applicative_arity,
    eta_saturate,
    inline,
    instantiate,
    is_head_variable_free,
    is_redex_preserving,
    narrowings,
    spine,
    uncurry,
    uncurry_with_embedding,
    usable_rules_syntactic,
)

from conftest import listing

nil = Fun(Symbol("[]", 0))


def _cons(h, t):
    return Fun(Symbol("::", 2), (h, t))


def _nat_list(n):
    t = nil
    for _ in range(n):
        t = _cons(nil, t)
    return t


def _main_term(atrs, arg):
    return Fun(atrs.signature[atrs.main.name], (arg,))


# --- narrowing ----------------------------------------------------------------


@pytest.fixture()
def fix_to_match():
    """The reversal system after inlining walk into fix[walk]."""
    return listing(
        """
        C1(f,g) @ z -> f @ (g @ z)
        C2 @ z -> z
        C3(x) @ z -> x::z
        comp1(f) @ g -> C1(f,g)
        comp @ f -> comp1(f)
        match[walk]([]) -> C2
        match[walk](x::ys) -> comp @ (fix[walk] @ ys) @ C3(x)
        walk @ xs -> match[walk](xs)
        fix[walk] @ xs -> match[walk](xs)
        rev @ l -> fix[walk] @ l @ []
        main(l) -> rev @ l
        """
    )


def test_narrowings_golden(fix_to_match):
    rule = next(r for r in fix_to_match.rules if terms.format_term(r.lhs) == "fix[walk] @ xs")
    out = narrowings(fix_to_match, rule, ())
    rendered = sorted(terms.format_rule(r) for r in out)
    assert rendered == [
        "fix[walk] @ (x::ys) -> comp @ (fix[walk] @ ys) @ C3(x)",
        "fix[walk] @ [] -> C2",
    ]


def test_narrowing_plain_rewrite(fix_to_match):
    """When the subterm is already an instance, the lhs stays unchanged."""
    rule = next(r for r in fix_to_match.rules if r.root.name == "main")
    out = narrowings(fix_to_match, rule, ())
    assert len(out) == 1
    assert terms.format_rule(out[0]) == "main(l) -> fix[walk] @ l @ []"


def test_narrowings_sound_by_instantiation(fix_to_match):
    """Each emitted rule is one plain rewrite of an instance of the original."""
    rule = next(r for r in fix_to_match.rules if terms.format_term(r.lhs) == "fix[walk] @ xs")
    grounds = [nil, _nat_list(1), _cons(_nat_list(1), nil)]
    for narrowed in narrowings(fix_to_match, rule, ()):
        for g in grounds:
            sigma = {x: g for x in terms.term_vars(narrowed.lhs)}
            lhs_inst = apply_subst(narrowed.lhs, sigma)
            rhs_inst = apply_subst(narrowed.rhs, sigma)
            # the instance matches the original lhs, and rewriting the redex
            # in its rhs image with some rule reproduces the narrowed rhs
            orig_sigma = match(rule.lhs, lhs_inst)
            assert orig_sigma is not None
            mid = apply_subst(rule.rhs, orig_sigma)
            candidates = [
                terms.replace_at(mid, (), apply_subst(r.rhs, m))
                for r in fix_to_match.rules
                for m in [match(r.lhs, mid)]
                if m is not None
            ]
            assert rhs_inst in candidates


# --- redex preservation ---------------------------------------------------------


@pytest.fixture()
def erasing_system():
    return trs_io.parse_atrs_listing(
        """
        k(x,y) -> x
        main(0) -> 0
        main(S(n)) -> k(main(n),main(n))
        """,
        {"k": 2, "main": 1, "0": 0, "S": 1},
        data_constructors={"0": 0, "S": 1},
    )


def test_erasing_inline_rejected(erasing_system):
    rule = erasing_system.rules[2]
    assert not is_redex_preserving(erasing_system, rule, ())


def test_all_rev_inlinings_preserve_redexes(fix_to_match):
    for rule in fix_to_match.rules:
        for pos in terms.positions(rule.rhs):
            sub = terms.subterm_at(rule.rhs, pos)
            if isinstance(sub, terms.Var) or not fix_to_match.is_defined_name(sub.sym.name):
                continue
            assert is_redex_preserving(fix_to_match, rule, pos)


def test_non_erasing_rhs_always_preserving():
    atrs = trs_io.parse_atrs_listing(
        "d(x) -> g(x,x)\ng(x,y) -> x::y\nmain(l) -> d(l)",
        {"d": 1, "g": 2, "main": 1},
    )
    rule = atrs.rules[2]
    assert is_redex_preserving(atrs, rule, ())


def test_underspecified_symbol_still_redex_preserving():
    """Sufficient definedness, not redex preservation, fails here: inlining h
    specializes main and loses the linear behaviour, but no binding erases a
    call."""
    atrs = trs_io.parse_atrs_listing(
        "h(x,0) -> x\nmain(0) -> 0\nmain(S(n)) -> h(main(n),n)",
        {"h": 2, "main": 1, "0": 0, "S": 1},
        data_constructors={"0": 0, "S": 1},
    )
    assert is_redex_preserving(atrs, atrs.rules[2], ())


# --- inline ---------------------------------------------------------------------


def test_inline_match_splits_dispatchers(fix_to_match):
    out = inline(fix_to_match, transforms.MATCH_PRED)
    assert out is not None
    rendered = {terms.format_rule(r) for r in out.rules}
    assert "fix[walk] @ [] -> C2" in rendered
    assert "walk @ [] -> C2" in rendered
    # exhaustively inlining match leaves no dispatcher calls in right sides
    current = out
    while True:
        nxt = inline(current, transforms.MATCH_PRED)
        if nxt is None:
            break
        current = nxt
    for rule in current.rules:
        for u in terms.subterms(rule.rhs):
            assert not (
                isinstance(u, Fun) and u.sym.name in current.match_symbols
            )


def test_inline_inapplicable_on_constructor_rhs():
    atrs = trs_io.parse_atrs_listing(
        "main(x) -> x::[]", {"main": 1}
    )
    for pred in transforms.INLINE_PREDICATES:
        assert inline(atrs, pred) is None


def test_inline_step_reflection(fix_to_match):
    out = inline(fix_to_match, transforms.MATCH_PRED)
    for n in range(0, 7):
        before = normalize(fix_to_match, _main_term(fix_to_match, _nat_list(n))).length
        after = normalize(out, _main_term(out, _nat_list(n))).length
        assert before <= 2 * after + 2


def test_inline_lambda_rewrite_skips_head_variables(live_rev):
    """C1(f,g) @ z -> f @ (g @ z) has no lambda-rewrite position: its heads
    are variables."""
    rule = live_rev.rules[0]
    found = transforms._qualifying(live_rev, rule, transforms.LAMBDA_REWRITE_PRED)
    assert found is None


# --- usable rules -----------------------------------------------------------------


def test_usable_rules_keep_all_on_inlined_stage(inlined_rev):
    out = usable_rules_syntactic(inlined_rev)
    assert len(out.rules) == len(inlined_rev.rules)


def test_usable_rules_drop_unreachable():
    atrs = trs_io.parse_atrs_listing(
        "main(x) -> f(x)\nf(x) -> x\ng(x) -> f(x)",
        {"main": 1, "f": 1, "g": 1},
    )
    out = usable_rules_syntactic(atrs)
    assert [r.root.name for r in out.rules] == ["main", "f"]


def test_usable_rules_cover_fired_rules(a_rev):
    kept = usable_rules_syntactic(a_rev)
    kept_pairs = {(r.lhs, r.rhs) for r in kept.rules}
    for n in range(0, 6):
        trace = normalize(a_rev, _main_term(a_rev, _nat_list(n)))
        for step in trace.steps:
            rule = a_rev.rules[step.rule_index]
            assert (rule.lhs, rule.rhs) in kept_pairs


# --- instantiation -----------------------------------------------------------------


def test_instantiate_empty_plan_is_identity(live_rev):
    assert instantiate(live_rev, {}) == live_rev


def test_instantiate_paper_plan(live_rev, instantiated_rev):
    plan = {
        0: [
            {"f": Fun(Symbol("C2", 0)), "g": Fun(Symbol("C3", 1), (Var("x1"),))},
            {
                "f": Fun(Symbol("C1", 2), (Var("f2"), Var("g2"))),
                "g": Fun(Symbol("C3", 1), (Var("x1"),)),
            },
        ]
    }
    out = instantiate(live_rev, plan)
    assert trs_io.isomorphic(out, instantiated_rev) is not None


def test_instantiate_is_step_exact(live_rev, instantiated_rev):
    for n in range(0, 9):
        t1 = normalize(live_rev, _main_term(live_rev, _nat_list(n)))
        t2 = normalize(instantiated_rev, _main_term(instantiated_rev, _nat_list(n)))
        assert t1.length == t2.length
        assert t1.normal_form == t2.normal_form


def test_instantiate_refuses_overlap():
    atrs = trs_io.parse_atrs_listing("f(x) -> x\nmain(y) -> f(y)", {"f": 1, "main": 1})
    plan = {0: [{"x": Fun(Symbol("0", 0))}, {"x": Var("w")}]}
    with pytest.raises(AmbiguityError):
        instantiate(atrs, plan)


def test_instantiate_rejects_foreign_variables(live_rev):
    with pytest.raises(ValueError):
        instantiate(live_rev, {0: [{"nope": nil}]})


# --- applicative arity, eta saturation, uncurrying -----------------------------------


def test_applicative_arity(instantiated_reduced_rev):
    atrs = instantiated_reduced_rev
    assert applicative_arity(atrs, Symbol("fix[walk]", 0)) == 2
    assert applicative_arity(atrs, Symbol("C1", 2)) == 1
    assert applicative_arity(atrs, Symbol("::", 2)) == 0


def test_applicative_arity_brute_force(instantiated_reduced_rev):
    atrs = instantiated_reduced_rev
    best = {}
    for rule in atrs.rules:
        for side in (rule.lhs, rule.rhs):
            for u in terms.subterms(side):
                head, args = spine(u)
                if isinstance(head, Fun):
                    key = head.sym.name
                    best[key] = max(best.get(key, 0), len(args))
    for name, sym in atrs.signature.items():
        if name == "@":
            continue
        assert applicative_arity(atrs, sym) == best.get(name, 0)


def test_eta_saturation_golden(instantiated_reduced_rev, saturated_rev):
    out = eta_saturate(instantiated_reduced_rev)
    assert trs_io.isomorphic(out, saturated_rev) is not None


def test_eta_saturation_fixpoint(saturated_rev):
    assert eta_saturate(saturated_rev) == saturated_rev


def test_eta_saturation_divergence():
    f = Symbol("f", 0)
    a = Symbol("a", 0)
    atrs = Atrs([Rule(Fun(f), app(Fun(f), Fun(a)))], f)
    with pytest.raises(SaturationDivergedError):
        eta_saturate(atrs, fuel=30)


def test_uncurry_golden(saturated_rev, uncurried_rev):
    out = uncurry(saturated_rev)
    assert trs_io.isomorphic(out, uncurried_rev) is not None


def test_uncurry_identity_without_applications(r_rev):
    assert uncurry(r_rev) == r_rev


def test_uncurry_requires_head_variable_freedom(a_rev):
    with pytest.raises(HeadVariablePresentError):
        uncurry(a_rev)


def test_uncurry_step_simulation(instantiated_reduced_rev):
    """Sampled eta-system steps map to valid uncurried steps under the term
    embedding."""
    eta, uncurried, embed = uncurry_with_embedding(instantiated_reduced_rev)
    sampled = 0
    for n in range(0, 7):
        trace = normalize(eta, _main_term(eta, _nat_list(n)))
        current = trace.start
        for step in trace.steps:
            image_before = embed(current)
            image_after = embed(step.result)
            redexes = terms.cbv_redexes(uncurried, image_before)
            successors = [
                terms.replace_at(
                    image_before, pos, apply_subst(uncurried.rules[i].rhs, sig)
                )
                for i, pos, sig in redexes
            ]
            assert image_after in successors
            current = step.result
            sampled += 1
    assert sampled >= 50


def test_head_variable_detection(a_rev, r_rev):
    ok, sites = is_head_variable_free(a_rev)
    assert not ok
    offending = {a_rev.rules[i].root.name for i, _, _ in sites}
    assert "@" in offending  # the composition rule f @ (g @ z)
    ok, sites = is_head_variable_free(r_rev)
    assert ok and sites == []


def test_ground_system_head_variable_free():
    atrs = trs_io.parse_atrs_listing("main(x) -> x", {"main": 1})
    assert is_head_variable_free(atrs)[0]
