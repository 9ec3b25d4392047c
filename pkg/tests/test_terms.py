"""Core term, matching, unification, and CbV rewriting behaviour."""

import itertools
import random

import pytest

from fp2trs import terms
from fp2trs.errors import FuelExhaustedError, InvalidPositionError
from fp2trs.terms import (
    Atrs,
    Fun,
    Rule,
    Symbol,
    Var,
    app,
    apply_subst,
    cbv_redexes,
    check_non_ambiguous,
    format_term,
    match,
    normalize,
    positions,
    replace_at,
    replay_trace,
    subterm_at,
    term_vars,
    unify,
)

f2 = Symbol("f", 2)
g1 = Symbol("g", 1)
a0 = Symbol("a", 0)
b0 = Symbol("b", 0)
cons = Symbol("::", 2)
nil = Symbol("[]", 0)


def t_f(x, y):
    return Fun(f2, (x, y))


def t_g(x):
    return Fun(g1, (x,))


A = Fun(a0)
B = Fun(b0)


# --- positions ------------------------------------------------------------


def test_subterm_at_examples():
    t = t_f(A, t_g(B))
    assert subterm_at(t, (2, 1)) == B
    assert subterm_at(t, ()) == t
    with pytest.raises(InvalidPositionError):
        subterm_at(Fun(g1, (Var("x"),)), (2,))


def test_replace_at_examples():
    assert replace_at(t_g(A), (1,), B) == t_g(B)
    assert replace_at(t_f(A, B), (), B) == B


def _random_term(rng, depth=3):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice([A, B, Var("x"), Var("y")])
    sym = rng.choice([f2, g1, cons])
    return Fun(sym, tuple(_random_term(rng, depth - 1) for _ in range(sym.arity)))


def test_replace_roundtrip_property():
    rng = random.Random(7)
    for _ in range(200):
        t = _random_term(rng)
        for p in positions(t):
            assert replace_at(t, p, subterm_at(t, p)) == t


# --- matching and unification ----------------------------------------------


def test_match_examples():
    c3 = Symbol("C3", 1)
    pattern = app(Fun(c3, (Var("x"),)), Var("z"))
    subject = app(Fun(c3, (A,)), B)
    assert match(pattern, subject) == {"x": A, "z": B}
    assert match(Var("x"), t_g(A)) == {"x": t_g(A)}
    assert match(t_f(Var("x"), Var("x")), t_f(A, B)) is None


def test_match_instance_property():
    rng = random.Random(11)
    for _ in range(200):
        p = _random_term(rng)
        sigma = {"x": _random_term(rng, 2), "y": _random_term(rng, 2)}
        assert match(p, apply_subst(p, sigma)) is not None


def test_unify_paper_example():
    mw = Symbol("match[walk]", 1)
    s = Fun(mw, (Var("xs"),))
    t = Fun(mw, (Fun(cons, (Var("x"), Var("ys"))),))
    mgu = unify(s, t)
    assert mgu == {"xs": Fun(cons, (Var("x"), Var("ys")))}


def test_unify_occurs_check():
    assert unify(Var("x"), t_g(Var("x"))) is None


def _ground_terms(depth):
    if depth == 0:
        return [A, B]
    smaller = _ground_terms(depth - 1)
    out = list(smaller)
    out += [t_g(s) for s in smaller]
    out += [t_f(s, t) for s in smaller for t in smaller]
    return out


def _small_terms(depth):
    base = [A, B, Var("x"), Var("y")]
    if depth == 0:
        return base
    smaller = _small_terms(depth - 1)
    out = list(base)
    out += [t_g(s) for s in smaller]
    return out


def test_unify_mgu_generality_against_enumeration():
    """unify finds a unifier exactly when some ground unifier exists, and the
    result is at least as general as every ground unifier."""
    grounds = _ground_terms(1)
    candidates = [
        {"x": gx, "y": gy} for gx in grounds for gy in grounds
    ]
    pairs = [(s, t) for s in _small_terms(1) for t in _small_terms(1)]
    wrapper = Symbol("pair", 2)
    for s, t in pairs:
        ground_unifiers = [
            sig for sig in candidates if apply_subst(s, sig) == apply_subst(t, sig)
        ]
        mgu = unify(s, t)
        if mgu is None:
            assert not ground_unifiers, (s, t)
            continue
        assert apply_subst(s, mgu) == apply_subst(t, mgu)
        for sig in ground_unifiers:
            lhs = Fun(wrapper, (apply_subst(Var("x"), mgu), apply_subst(Var("y"), mgu)))
            rhs = Fun(wrapper, (sig["x"], sig["y"]))
            assert match(lhs, rhs) is not None, (s, t, mgu, sig)


def test_unify_symmetric():
    rng = random.Random(3)
    for _ in range(300):
        s, t = _random_term(rng, 2), _random_term(rng, 2)
        assert (unify(s, t) is None) == (unify(t, s) is None)


# --- CbV rewriting ----------------------------------------------------------


def test_cbv_redexes_on_a_rev(a_rev):
    main = a_rev.signature["main"]
    start = Fun(main, (Fun(nil),))
    redexes = cbv_redexes(a_rev, start)
    assert len(redexes) == 1
    idx, pos, sigma = redexes[0]
    assert a_rev.rules[idx].root.name == "main"
    assert pos == ()
    assert sigma == {"l": Fun(nil)}


def test_values_are_irreducible(a_rev):
    value = Fun(cons, (Fun(nil), Fun(nil)))
    assert cbv_redexes(a_rev, value) == []


def _brute_force_redexes(atrs, t):
    """Independent oracle: try every rule at every position, filter by the
    value conditions of the CbV relation."""
    out = []
    for pos in positions(t):
        sub = subterm_at(t, pos)
        if isinstance(sub, Var):
            continue
        if not all(
            terms.is_value(atrs, subterm_at(sub, p))
            for p in positions(sub)
            if p != ()
        ):
            continue
        for rule in atrs.rules:
            sigma = match(rule.lhs, sub)
            if sigma is None:
                continue
            if all(terms.is_value(atrs, v) for v in sigma.values()):
                out.append((rule.index, pos, sigma))
    return out


def test_cbv_redexes_agree_with_brute_force(a_rev):
    rng = random.Random(23)
    sig = [s for s in a_rev.signature.values() if s.name != "@"]

    def rand_term(depth):
        if depth == 0:
            return Fun(nil)
        if rng.random() < 0.4:
            return app(rand_term(depth - 1), rand_term(depth - 1))
        sym = rng.choice(sig)
        return Fun(sym, tuple(rand_term(depth - 1) for _ in range(sym.arity)))

    for _ in range(150):
        t = rand_term(3)
        assert sorted(cbv_redexes(a_rev, t), key=str) == sorted(
            _brute_force_redexes(a_rev, t), key=str
        )


def test_normalize_rev_empty_list(a_rev):
    # main -> rev -> fix[walk] -> walk -> match[walk] -> C2 @ [], six steps;
    # verified by hand against the call-by-value relation
    main = a_rev.signature["main"]
    trace = normalize(a_rev, Fun(main, (Fun(nil),)))
    assert trace.normal_form == Fun(nil)
    assert trace.length == 6


def test_normalize_value_is_zero_steps(a_rev):
    v = Fun(cons, (Fun(nil), Fun(nil)))
    assert normalize(a_rev, v).length == 0


def test_policies_agree_on_lists(a_rev):
    main = a_rev.signature["main"]
    for n in range(0, 9):
        lst = Fun(nil)
        for _ in range(n):
            lst = Fun(cons, (Fun(nil), lst))
        t1 = normalize(a_rev, Fun(main, (lst,)), policy=terms.LEFTMOST_INNERMOST)
        t2 = normalize(a_rev, Fun(main, (lst,)), policy=terms.RECORD_ALL)
        assert t1.length == t2.length
        assert t1.normal_form == t2.normal_form


def test_trace_replay(a_rev):
    main = a_rev.signature["main"]
    lst = Fun(cons, (Fun(nil), Fun(cons, (Fun(nil), Fun(nil)))))
    trace = normalize(a_rev, Fun(main, (lst,)))
    assert replay_trace(a_rev, trace)


def test_fuel_exhaustion_carries_partial_trace():
    loop = Symbol("loop", 0)
    atrs = Atrs([Rule(Fun(loop), Fun(loop))], loop)
    with pytest.raises(FuelExhaustedError) as exc:
        normalize(atrs, Fun(loop), fuel=10)
    assert exc.value.partial.length == 10


# --- non-ambiguity ----------------------------------------------------------


def test_non_ambiguous_a_rev(a_rev):
    ok, overlaps = check_non_ambiguous(a_rev)
    assert ok and overlaps == []


def test_root_overlap_detected():
    f1 = Symbol("f", 1)
    atrs = Atrs(
        [Rule(Fun(f1, (Var("x"),)), Var("x")), Rule(Fun(f1, (A,)), A)],
        f1,
    )
    ok, overlaps = check_non_ambiguous(atrs)
    assert not ok
    assert (0, 1) in overlaps


def test_nested_overlap_detected():
    f1 = Symbol("f", 1)
    atrs = Atrs(
        [Rule(Fun(f1, (t_g(Var("x")),)), Var("x")), Rule(t_g(A), A)],
        f1,
    )
    ok, overlaps = check_non_ambiguous(atrs)
    assert not ok
    assert (0, 1) in overlaps


# --- printing ---------------------------------------------------------------


def test_format_infix(a_rev):
    rule = a_rev.rules[6]  # match[walk](x::ys) -> comp @ (fix[walk] @ ys) @ C3(x)
    assert format_term(rule.rhs) == "comp @ (fix[walk] @ ys) @ C3(x)"


def test_format_prefix():
    t = app(Fun(Symbol("C2", 0)), Var("z"))
    assert format_term(t, style="prefix") == "app(C2,z)"
