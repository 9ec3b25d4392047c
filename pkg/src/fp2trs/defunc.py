"""Defunctionalization: translate typed programs to applicative rewrite
systems.

Every lambda, fixpoint, and match expression becomes a closure constructor
applied to its ordered free variables; beta reduction, fixpoint unrolling, and
match dispatch become the constructors' defining rules. Only the least rule
set defining every closure constructor that actually occurs is emitted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import pcf, terms
from .errors import Fp2TrsError


@dataclass
class ClosureConstructor:
    symbol: terms.Symbol
    origin: str  # "lam" | "fix" | "match"
    expr: pcf.Expr
    free_vars: tuple[str, ...]


class _Context:
    def __init__(self, program: pcf.Program):
        self.program = program
        self.order = program.var_order
        self.closures: list[ClosureConstructor] = []
        self.by_key: dict[tuple, ClosureConstructor] = {}
        self.names_taken: set[str] = set(program.con_table) | {"main", terms.APP_NAME}
        self._fresh = itertools.count(1)

    def allocate_name(self, base: str) -> str:
        name, k = base, 1
        while name in self.names_taken:
            k += 1
            name = f"{base}_{k}"
        self.names_taken.add(name)
        return name

    def fresh_rule_var(self, avoid: set[str]) -> str:
        while True:
            name = f"z{next(self._fresh)}"
            if name not in avoid:
                return name

    def closure_for(self, e: pcf.Expr) -> ClosureConstructor:
        key = pcf.expr_key(e)
        cc = self.by_key.get(key)
        if cc is not None:
            return cc
        if isinstance(e, pcf.LamE):
            origin = "lam"
            fvs = tuple(pcf.free_vars(e, self.order))
            base = e.label or "C"
            arity = len(fvs)
        elif isinstance(e, pcf.FixE):
            origin = "fix"
            fvs = tuple(pcf.free_vars(e, self.order))
            base = f"fix[{e.label}]" if e.label else "fix"
            arity = len(fvs)
        elif isinstance(e, pcf.MatchE):
            origin = "match"
            fvs = tuple(pcf.case_table_free_vars(e, self.order))
            base = e.label or "match"
            arity = len(fvs) + 1
        else:
            raise Fp2TrsError(f"no closure constructor for {e!r}")
        sym = terms.Symbol(self.allocate_name(base), arity, terms.CONSTRUCTOR)
        cc = ClosureConstructor(sym, origin, e, fvs)
        self.by_key[key] = cc
        self.closures.append(cc)
        return cc

    def con_symbol(self, cname: str) -> terms.Symbol:
        return terms.Symbol(cname, self.program.con_table[cname], terms.CONSTRUCTOR)


def translate_expr(e: pcf.Expr, ctx: _Context) -> terms.Term:
    """The six-clause translation into applicative terms."""
    if isinstance(e, pcf.VarE):
        return terms.Var(e.name)
    if isinstance(e, pcf.ConE):
        return terms.Fun(ctx.con_symbol(e.cname), tuple(translate_expr(a, ctx) for a in e.args))
    if isinstance(e, pcf.AppE):
        return terms.app(translate_expr(e.fn, ctx), translate_expr(e.arg, ctx))
    if isinstance(e, (pcf.LamE, pcf.FixE)):
        cc = ctx.closure_for(e)
        return terms.Fun(cc.symbol, tuple(terms.Var(x) for x in cc.free_vars))
    if isinstance(e, pcf.MatchE):
        cc = ctx.closure_for(e)
        args = (translate_expr(e.scrutinee, ctx),) + tuple(terms.Var(x) for x in cc.free_vars)
        return terms.Fun(cc.symbol, args)
    raise Fp2TrsError(f"cannot translate {e!r}")


def defining_rules(cc: ClosureConstructor, ctx: _Context) -> list[tuple[terms.Term, terms.Term]]:
    fv_vars = tuple(terms.Var(x) for x in cc.free_vars)
    if cc.origin == "lam":
        e = cc.expr
        lhs = terms.app(terms.Fun(cc.symbol, fv_vars), terms.Var(e.var))
        return [(lhs, translate_expr(e.body, ctx))]
    if cc.origin == "fix":
        e = cc.expr
        # fix(xs) @ z -> [[e[x := fix x.e]]] @ z, z fresh; the unrolled body is
        # a structural copy, so repeated unrolling reuses the same symbols.
        z = ctx.fresh_rule_var(set(cc.free_vars))
        unrolled = pcf.substitute(e.body, {e.var: e})
        lhs = terms.app(terms.Fun(cc.symbol, fv_vars), terms.Var(z))
        rhs = terms.app(translate_expr(unrolled, ctx), terms.Var(z))
        return [(lhs, rhs)]
    if cc.origin == "match":
        e = cc.expr
        rules = []
        for case in e.cases:
            con = ctx.con_symbol(case.cname)
            pattern = terms.Fun(con, tuple(terms.Var(v) for v in case.vars))
            lhs = terms.Fun(cc.symbol, (pattern,) + fv_vars)
            rules.append((lhs, translate_expr(case.body, ctx)))
        return rules
    raise AssertionError(cc.origin)


def defunctionalize(typed: pcf.TypedProgram) -> terms.Atrs:
    """Main rule plus the least set of defining rules closing over every
    closure constructor that occurs; the result is non-ambiguous."""
    program = typed.program
    ctx = _Context(program)

    main_sym = terms.Symbol("main", len(program.params), terms.DEFINED)
    pairs: list[tuple[terms.Term, terms.Term]] = [
        (
            terms.Fun(main_sym, tuple(terms.Var(p) for p in program.params)),
            translate_expr(program.body, ctx),
        )
    ]

    emitted = 0
    while emitted < len(ctx.closures):
        cc = ctx.closures[emitted]
        emitted += 1
        pairs.extend(defining_rules(cc, ctx))

    data_cons = [
        terms.Symbol(name, arity, terms.CONSTRUCTOR)
        for name, arity in sorted(program.con_table.items())
    ]
    atrs = terms.Atrs(
        [terms.Rule(lhs, rhs) for lhs, rhs in pairs],
        main_sym,
        data_constructors=data_cons,
        lam_symbols=[c.symbol.name for c in ctx.closures if c.origin == "lam"],
        fix_symbols=[c.symbol.name for c in ctx.closures if c.origin == "fix"],
        match_symbols=[c.symbol.name for c in ctx.closures if c.origin == "match"],
    )
    terms.assert_non_ambiguous(atrs, "after defunctionalization")
    return atrs
