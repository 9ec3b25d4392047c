"""Source language frontend: an OCaml-like surface syntax for PCF with
constructors and pattern matching, simple-type inference, and the weak
call-by-value evaluator that serves as step-counting oracle.

`let` bindings are textual abbreviations: each use site receives a fresh copy
of the definition, so the desugared program is a single closed expression.
`let rec f x = e` becomes a fixpoint expression; an explicit `fix f -> e` form
is also accepted so that printed programs re-parse.
"""

from __future__ import annotations

import itertools
import os
import re
from dataclasses import dataclass, field
from typing import Optional

from . import terms
from .errors import (
    FuelExhaustedError,
    ParseError,
    StuckTermError,
    TypeInferenceError,
    UnboundVariableError,
)

DEFAULT_FUEL = int(os.environ.get("FP2TRS_FUEL", 10**6))

BUILTIN_CONSTRUCTORS = {"[]": 0, "::": 2, "0": 0, "S": 1}

_expr_ids = itertools.count(1)


class Expr:
    __slots__ = ("eid",)

    def _init_id(self):
        self.eid = next(_expr_ids)


class VarE(Expr):
    __slots__ = ("name",)

    def __init__(self, name):
        self._init_id()
        self.name = name

    def __repr__(self):
        return self.name


class ConE(Expr):
    __slots__ = ("cname", "args")

    def __init__(self, cname, args=()):
        self._init_id()
        self.cname = cname
        self.args = tuple(args)

    def __repr__(self):
        return print_expr(self)


class LamE(Expr):
    __slots__ = ("var", "body", "label")

    def __init__(self, var, body, label=None):
        self._init_id()
        self.var = var
        self.body = body
        self.label = label

    def __repr__(self):
        return print_expr(self)


class AppE(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn, arg):
        self._init_id()
        self.fn = fn
        self.arg = arg

    def __repr__(self):
        return print_expr(self)


class FixE(Expr):
    __slots__ = ("var", "body", "label")

    def __init__(self, var, body, label=None):
        self._init_id()
        self.var = var
        self.body = body
        self.label = label

    def __repr__(self):
        return print_expr(self)


@dataclass(frozen=True)
class Case:
    cname: str
    vars: tuple
    body: Expr


class MatchE(Expr):
    __slots__ = ("scrutinee", "cases", "label")

    def __init__(self, scrutinee, cases, label=None):
        self._init_id()
        self.scrutinee = scrutinee
        self.cases = tuple(cases)
        self.label = label

    def __repr__(self):
        return print_expr(self)


@dataclass
class Program:
    params: list[str]
    body: Expr
    con_table: dict[str, int]
    var_order: dict[str, int]

    def order_of(self, name: str) -> int:
        return self.var_order.get(name, 10**9)


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+|\(\*([^*]|\*+[^)*])*\*+\))
    | (?P<dsemi>;;)
    | (?P<arrow>->)
    | (?P<cons>::)
    | (?P<nil>\[\])
    | (?P<num>\d+)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    | (?P<punct>[()|,=*])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"let", "rec", "fun", "match", "with", "type", "of", "fix"}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> list[Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        lexeme = m.group(0)
        kind = m.lastgroup
        if kind != "ws":
            if kind == "ident" and lexeme in _KEYWORDS:
                kind = lexeme
            elif kind == "punct":
                kind = lexeme
            tokens.append(Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser and desugarer

class _Parser:
    def __init__(self, text: str):
        self.tokens = _lex(text)
        self.pos = 0
        self.con_table = dict(BUILTIN_CONSTRUCTORS)
        self.defs: dict[str, Expr] = {}
        self.var_order: dict[str, int] = {}
        self._var_serial = itertools.count(1)
        self._anon_lambda = itertools.count(1)
        self._used_names: set[str] = set()
        self.current_let: Optional[str] = None

    # token plumbing

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text!r}", tok.line, tok.col)
        return self.next()

    def error(self, msg: str):
        tok = self.peek()
        raise ParseError(msg, tok.line, tok.col)

    # variable bookkeeping; names stay readable but globally unique

    def fresh_var(self, surface: str) -> str:
        name, k = surface, 1
        while name in self._used_names:
            k += 1
            name = f"{surface}_{k}"
        self._used_names.add(name)
        self.var_order[name] = next(self._var_serial)
        return name

    # grammar

    def parse_program(self) -> Program:
        main = None
        while self.peek().kind != "eof":
            if self.peek().kind == "type":
                self.parse_typedef()
            elif self.peek().kind == "let":
                result = self.parse_letdef()
                if result is not None:
                    main = result
            else:
                self.error("expected 'let' or 'type' definition")
            self.expect("dsemi")
        if main is None:
            raise ParseError("program has no 'main' definition")
        params, body = main
        return Program(params, body, dict(self.con_table), dict(self.var_order))

    def parse_typedef(self):
        self.expect("type")
        self.expect("ident")
        self.expect("=")
        while True:
            tok = self.expect("ident")
            if not tok.text[0].isupper():
                raise ParseError("constructor names must be capitalized", tok.line, tok.col)
            arity = 0
            if self.peek().kind == "of":
                self.next()
                arity = 1
                self.expect("ident")
                while self.peek().kind == "*":
                    self.next()
                    self.expect("ident")
                    arity += 1
            if tok.text in self.con_table:
                raise ParseError(f"duplicate constructor {tok.text}", tok.line, tok.col)
            self.con_table[tok.text] = arity
            if self.peek().kind != "|":
                break
            self.next()

    def parse_letdef(self):
        self.expect("let")
        is_rec = False
        if self.peek().kind == "rec":
            self.next()
            is_rec = True
        name_tok = self.expect("ident")
        name = name_tok.text
        if name == "main" and is_rec:
            raise ParseError("'main' must not be recursive", name_tok.line, name_tok.col)
        params = []
        while self.peek().kind == "ident":
            params.append(self.next().text)
        self.expect("=")

        self.current_let = name
        scope: dict[str, str] = {}
        if is_rec:
            rec_var = self.fresh_var(name)
            scope[name] = rec_var
        bound = [(p, self.fresh_var(p)) for p in params]
        scope.update(bound)
        body = self.parse_expr(scope)
        self.current_let = None

        if name == "main":
            return [internal for _, internal in bound], body

        lam = body
        for k, (_, internal) in reversed(list(enumerate(bound))):
            label = name if k == 0 else f"{name}{k}"
            lam = LamE(internal, lam, label)
        if is_rec:
            if not params:
                raise ParseError(f"'let rec {name}' needs at least one parameter",
                                 name_tok.line, name_tok.col)
            lam = FixE(rec_var, lam, name)

        if name in self.defs:
            raise ParseError(f"duplicate definition {name}", name_tok.line, name_tok.col)
        self.defs[name] = lam
        return None

    def parse_expr(self, scope) -> Expr:
        return self.parse_cons(scope)

    def parse_cons(self, scope) -> Expr:
        head = self.parse_app(scope)
        if self.peek().kind == "cons":
            self.next()
            tail = self.parse_cons(scope)
            return ConE("::", (head, tail))
        return head

    def parse_app(self, scope) -> Expr:
        expr = self.parse_atom(scope)
        while self.peek().kind in ("ident", "num", "nil", "("):
            arg = self.parse_atom(scope)
            expr = AppE(expr, arg)
        return expr

    def parse_atom(self, scope) -> Expr:
        tok = self.peek()
        if tok.kind == "ident":
            self.next()
            if tok.text[0].isupper():
                return self.parse_con(tok, scope)
            if tok.text in scope:
                return VarE(scope[tok.text])
            if tok.text in self.defs:
                return self.instantiate(self.defs[tok.text])
            raise UnboundVariableError(f"unbound variable {tok.text}", tok.line, tok.col)
        if tok.kind == "num":
            self.next()
            return _numeral(int(tok.text))
        if tok.kind == "nil":
            self.next()
            return ConE("[]")
        if tok.kind == "(":
            self.next()
            expr = self.parse_expr(scope)
            self.expect(")")
            return expr
        if tok.kind == "fun":
            self.next()
            params = []
            while self.peek().kind == "ident":
                params.append(self.next().text)
            if not params:
                self.error("'fun' needs at least one parameter")
            self.expect("arrow")
            bound = [(p, self.fresh_var(p)) for p in params]
            inner = dict(scope)
            inner.update(bound)
            body = self.parse_expr(inner)
            labels = [f"C{next(self._anon_lambda)}" for _ in bound]
            for label, (_, internal) in zip(reversed(labels), reversed(bound)):
                body = LamE(internal, body, label)
            return body
        if tok.kind == "fix":
            self.next()
            var_tok = self.expect("ident")
            self.expect("arrow")
            internal = self.fresh_var(var_tok.text)
            inner = dict(scope)
            inner[var_tok.text] = internal
            body = self.parse_expr(inner)
            return FixE(internal, body, var_tok.text)
        if tok.kind == "match":
            return self.parse_match(scope)
        self.error(f"unexpected token {tok.text!r}")

    def parse_con(self, tok: Token, scope) -> Expr:
        cname = tok.text
        if cname not in self.con_table:
            raise ParseError(f"unknown constructor {cname}", tok.line, tok.col)
        arity = self.con_table[cname]
        args = []
        if self.peek().kind == "(" and arity > 0:
            self.next()
            args.append(self.parse_expr(scope))
            while self.peek().kind == ",":
                self.next()
                args.append(self.parse_expr(scope))
            self.expect(")")
        if len(args) != arity:
            raise ParseError(
                f"constructor {cname} expects {arity} arguments, got {len(args)}",
                tok.line, tok.col,
            )
        return ConE(cname, args)

    def parse_match(self, scope) -> Expr:
        self.expect("match")
        scrutinee = self.parse_expr(scope)
        self.expect("with")
        if self.peek().kind == "|":
            self.next()
        cases = [self.parse_case(scope)]
        while self.peek().kind == "|":
            self.next()
            cases.append(self.parse_case(scope))
        seen = set()
        for c in cases:
            if c.cname in seen:
                self.error(f"duplicate match case for {c.cname}")
            seen.add(c.cname)
        label = f"match[{self.current_let}]" if self.current_let else "match"
        return MatchE(scrutinee, cases, label)

    def parse_case(self, scope) -> Case:
        tok = self.next()
        if tok.kind == "nil":
            cname, vars_ = "[]", []
        elif tok.kind == "num" and tok.text == "0":
            cname, vars_ = "0", []
        elif tok.kind == "ident" and not tok.text[0].isupper():
            # x::ys pattern
            head = tok.text
            self.expect("cons")
            tail = self.expect("ident").text
            cname, vars_ = "::", [head, tail]
        elif tok.kind == "ident":
            cname = tok.text
            if cname not in self.con_table:
                raise ParseError(f"unknown constructor {cname}", tok.line, tok.col)
            vars_ = []
            if self.peek().kind == "(":
                self.next()
                vars_.append(self.expect("ident").text)
                while self.peek().kind == ",":
                    self.next()
                    vars_.append(self.expect("ident").text)
                self.expect(")")
        else:
            raise ParseError(f"bad pattern {tok.text!r}", tok.line, tok.col)
        if len(vars_) != self.con_table.get(cname, len(vars_)):
            raise ParseError(
                f"pattern {cname} expects {self.con_table[cname]} variables",
                tok.line, tok.col,
            )
        bound = [(v, self.fresh_var(v)) for v in vars_]
        inner = dict(scope)
        inner.update(bound)
        self.expect("arrow")
        body = self.parse_expr(inner)
        return Case(cname, tuple(internal for _, internal in bound), body)

    # fresh copy of a let definition, with all binders renamed

    def instantiate(self, template: Expr) -> Expr:
        def go(e: Expr, ren: dict) -> Expr:
            if isinstance(e, VarE):
                return VarE(ren.get(e.name, e.name))
            if isinstance(e, ConE):
                return ConE(e.cname, tuple(go(a, ren) for a in e.args))
            if isinstance(e, AppE):
                return AppE(go(e.fn, ren), go(e.arg, ren))
            if isinstance(e, LamE):
                fresh = self.fresh_var(_surface(e.var))
                return LamE(fresh, go(e.body, {**ren, e.var: fresh}), e.label)
            if isinstance(e, FixE):
                fresh = self.fresh_var(_surface(e.var))
                return FixE(fresh, go(e.body, {**ren, e.var: fresh}), e.label)
            if isinstance(e, MatchE):
                cases = []
                for c in e.cases:
                    bound = [(v, self.fresh_var(_surface(v))) for v in c.vars]
                    inner = dict(ren)
                    inner.update(bound)
                    cases.append(Case(c.cname, tuple(f for _, f in bound), go(c.body, inner)))
                return MatchE(go(e.scrutinee, ren), tuple(cases), e.label)
            raise AssertionError(e)

        return go(template, {})


def _surface(name: str) -> str:
    return name.rsplit("_", 1)[0] if re.search(r"_\d+$", name) else name


def _numeral(n: int) -> Expr:
    e: Expr = ConE("0")
    for _ in range(n):
        e = ConE("S", (e,))
    return e


def parse_program(text: str) -> Program:
    parser = _Parser(text)
    return parser.parse_program()


# ---------------------------------------------------------------------------
# Free variables and substitution


def free_vars(e: Expr, order=None) -> list[str]:
    """Free variables of e as an ordered sequence (program binder order)."""
    acc: set[str] = set()

    def go(expr: Expr, bound: frozenset):
        if isinstance(expr, VarE):
            if expr.name not in bound:
                acc.add(expr.name)
        elif isinstance(expr, ConE):
            for a in expr.args:
                go(a, bound)
        elif isinstance(expr, AppE):
            go(expr.fn, bound)
            go(expr.arg, bound)
        elif isinstance(expr, LamE):
            go(expr.body, bound | {expr.var})
        elif isinstance(expr, FixE):
            go(expr.body, bound | {expr.var})
        elif isinstance(expr, MatchE):
            go(expr.scrutinee, bound)
            for c in expr.cases:
                go(c.body, bound | set(c.vars))

    go(e, frozenset())
    if order is None:
        return sorted(acc)
    return sorted(acc, key=lambda x: order.get(x, 10**9))


def case_table_free_vars(e: MatchE, order) -> list[str]:
    """Free variables of the case table only (scrutinee excluded)."""
    acc: set[str] = set()
    for c in e.cases:
        for v in free_vars(c.body, order):
            if v not in c.vars:
                acc.add(v)
    return sorted(acc, key=lambda x: order.get(x, 10**9))


def substitute(e: Expr, mapping: dict) -> Expr:
    """Capture-free only because binders are renamed apart program-wide."""
    if not mapping:
        return e
    if isinstance(e, VarE):
        return mapping.get(e.name, e)
    if isinstance(e, ConE):
        return ConE(e.cname, tuple(substitute(a, mapping) for a in e.args))
    if isinstance(e, AppE):
        return AppE(substitute(e.fn, mapping), substitute(e.arg, mapping))
    if isinstance(e, LamE):
        inner = {k: v for k, v in mapping.items() if k != e.var}
        return LamE(e.var, substitute(e.body, inner), e.label)
    if isinstance(e, FixE):
        inner = {k: v for k, v in mapping.items() if k != e.var}
        return FixE(e.var, substitute(e.body, inner), e.label)
    if isinstance(e, MatchE):
        cases = []
        for c in e.cases:
            inner = {k: v for k, v in mapping.items() if k not in c.vars}
            cases.append(Case(c.cname, c.vars, substitute(c.body, inner)))
        return MatchE(substitute(e.scrutinee, mapping), tuple(cases), e.label)
    raise AssertionError(e)


def expr_key(e: Expr):
    """Structural fingerprint; copies of the same expression share a key."""
    if isinstance(e, VarE):
        return ("v", e.name)
    if isinstance(e, ConE):
        return ("c", e.cname) + tuple(expr_key(a) for a in e.args)
    if isinstance(e, AppE):
        return ("a", expr_key(e.fn), expr_key(e.arg))
    if isinstance(e, LamE):
        return ("l", e.var, expr_key(e.body))
    if isinstance(e, FixE):
        return ("f", e.var, expr_key(e.body))
    if isinstance(e, MatchE):
        return ("m", expr_key(e.scrutinee)) + tuple(
            (c.cname, c.vars, expr_key(c.body)) for c in e.cases
        )
    raise AssertionError(e)


def alpha_equal(a: Expr, b: Expr) -> bool:
    """Structural equality modulo bound-variable names; labels ignored."""

    def go(x: Expr, y: Expr, env: dict) -> bool:
        if isinstance(x, VarE) and isinstance(y, VarE):
            return env.get(x.name, x.name) == y.name
        if isinstance(x, ConE) and isinstance(y, ConE):
            return (
                x.cname == y.cname
                and len(x.args) == len(y.args)
                and all(go(a, b2, env) for a, b2 in zip(x.args, y.args))
            )
        if isinstance(x, AppE) and isinstance(y, AppE):
            return go(x.fn, y.fn, env) and go(x.arg, y.arg, env)
        if isinstance(x, LamE) and isinstance(y, LamE):
            return go(x.body, y.body, {**env, x.var: y.var})
        if isinstance(x, FixE) and isinstance(y, FixE):
            return go(x.body, y.body, {**env, x.var: y.var})
        if isinstance(x, MatchE) and isinstance(y, MatchE):
            if len(x.cases) != len(y.cases) or not go(x.scrutinee, y.scrutinee, env):
                return False
            for cx, cy in zip(x.cases, y.cases):
                if cx.cname != cy.cname or len(cx.vars) != len(cy.vars):
                    return False
                inner = dict(env)
                inner.update(zip(cx.vars, cy.vars))
                if not go(cx.body, cy.body, inner):
                    return False
            return True
        return False

    return go(a, b, {})


# ---------------------------------------------------------------------------
# Printing (re-parseable)


def print_expr(e: Expr) -> str:
    return _pe(e, 0)


def _pe(e: Expr, prec: int) -> str:
    # prec levels: 0 top, 1 cons argument, 2 application argument
    if isinstance(e, VarE):
        return e.name
    if isinstance(e, ConE):
        if e.cname == "::":
            s = f"{_pe(e.args[0], 2)}::{_pe(e.args[1], 1)}"
            return f"({s})" if prec >= 2 else s
        if not e.args:
            return e.cname
        return f"{e.cname}({', '.join(_pe(a, 0) for a in e.args)})"
    if isinstance(e, AppE):
        s = f"{_pe(e.fn, 1)} {_pe(e.arg, 2)}"
        return f"({s})" if prec >= 2 else s
    if isinstance(e, LamE):
        s = f"fun {e.var} -> {_pe(e.body, 0)}"
        return f"({s})" if prec >= 1 else s
    if isinstance(e, FixE):
        s = f"fix {e.var} -> {_pe(e.body, 0)}"
        return f"({s})" if prec >= 1 else s
    if isinstance(e, MatchE):
        cases = " | ".join(
            f"{_case_pattern(c)} -> {_pe(c.body, 0)}" for c in e.cases
        )
        return f"(match {_pe(e.scrutinee, 0)} with {cases})"
    raise AssertionError(e)


def _case_pattern(c: Case) -> str:
    if c.cname == "::":
        return f"{c.vars[0]}::{c.vars[1]}"
    if not c.vars:
        return c.cname
    return f"{c.cname}({', '.join(c.vars)})"


def print_program(p: Program) -> str:
    out = []
    declared = [
        (name, arity)
        for name, arity in sorted(p.con_table.items())
        if name not in BUILTIN_CONSTRUCTORS
    ]
    if declared:
        variants = " | ".join(
            name if arity == 0 else f"{name} of {' * '.join(['g'] * arity)}"
            for name, arity in declared
        )
        out.append(f"type data = {variants} ;;")
    params = " ".join(p.params)
    head = f"let main {params} =" if params else "let main ="
    out.append(f"{head} {print_expr(p.body)} ;;")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Simple types


@dataclass(frozen=True)
class SimpleType:
    pass


@dataclass(frozen=True)
class Ground(SimpleType):
    def __repr__(self):
        return "G"


@dataclass(frozen=True)
class Arrow(SimpleType):
    src: SimpleType
    dst: SimpleType

    def __repr__(self):
        src = f"({self.src!r})" if isinstance(self.src, Arrow) else repr(self.src)
        return f"{src} -> {self.dst!r}"


GROUND = Ground()


@dataclass
class TypedProgram:
    program: Program
    types: dict  # expression id -> SimpleType
    var_types: dict  # variable name -> SimpleType

    def type_of(self, e: Expr) -> SimpleType:
        return self.types[e.eid]


class _TypeVar:
    __slots__ = ("ref",)

    def __init__(self):
        self.ref = None  # None = unbound, else a type node


def _prune(t):
    while isinstance(t, _TypeVar) and t.ref is not None:
        t = t.ref
    return t


def _occurs_ty(v, t) -> bool:
    t = _prune(t)
    if t is v:
        return True
    if isinstance(t, tuple):
        return _occurs_ty(v, t[1]) or _occurs_ty(v, t[2])
    return False


def _unify_ty(a, b):
    a, b = _prune(a), _prune(b)
    if a is b:
        return
    if isinstance(a, _TypeVar):
        if _occurs_ty(a, b):
            raise TypeInferenceError("occurs check failed (self-application?)")
        a.ref = b
        return
    if isinstance(b, _TypeVar):
        _unify_ty(b, a)
        return
    if a == "G" and b == "G":
        return
    if isinstance(a, tuple) and isinstance(b, tuple):
        _unify_ty(a[1], b[1])
        _unify_ty(a[2], b[2])
        return
    raise TypeInferenceError("cannot unify ground type with function type")


def _freeze(t) -> SimpleType:
    t = _prune(t)
    if isinstance(t, _TypeVar):
        return GROUND  # unconstrained types default to ground
    if t == "G":
        return GROUND
    return Arrow(_freeze(t[1]), _freeze(t[2]))


def infer_types(program: Program) -> TypedProgram:
    """Monomorphic inference over {Ground, Arrow}; every constructor maps
    ground arguments to ground, main must be first-order."""
    raw: dict[int, object] = {}
    var_ty: dict[str, object] = {}

    def tv(name: str):
        if name not in var_ty:
            var_ty[name] = _TypeVar()
        return var_ty[name]

    def go(e: Expr):
        if isinstance(e, VarE):
            ty = tv(e.name)
        elif isinstance(e, ConE):
            for a in e.args:
                _unify_ty(go(a), "G")
            ty = "G"
        elif isinstance(e, LamE):
            ty = ("->", tv(e.var), go(e.body))
        elif isinstance(e, AppE):
            res = _TypeVar()
            _unify_ty(go(e.fn), ("->", go(e.arg), res))
            ty = res
        elif isinstance(e, FixE):
            body = go(e.body)
            _unify_ty(tv(e.var), body)
            ty = body
        elif isinstance(e, MatchE):
            _unify_ty(go(e.scrutinee), "G")
            res = _TypeVar()
            for c in e.cases:
                for v in c.vars:
                    _unify_ty(tv(v), "G")
                _unify_ty(go(c.body), res)
            ty = res
        else:
            raise AssertionError(e)
        raw[e.eid] = ty
        return ty

    body_ty = go(program.body)
    try:
        _unify_ty(body_ty, "G")
        for p in program.params:
            _unify_ty(tv(p), "G")
    except TypeInferenceError as exc:
        raise TypeInferenceError(f"main is not first-order: {exc}") from exc

    types = {eid: _freeze(t) for eid, t in raw.items()}
    var_types = {name: _freeze(t) for name, t in var_ty.items()}
    return TypedProgram(program, types, var_types)


# ---------------------------------------------------------------------------
# Weak call-by-value evaluation with step counting


def is_value_expr(e: Expr) -> bool:
    if isinstance(e, (LamE, FixE)):
        return True
    if isinstance(e, ConE):
        return all(is_value_expr(a) for a in e.args)
    return False


def _step(e: Expr):
    """One weak CbV step; returns the reduct or None if e is a value.
    Counted steps are exactly beta, fixpoint application, and match dispatch."""
    if isinstance(e, (VarE, LamE, FixE)):
        return None
    if isinstance(e, ConE):
        for i, a in enumerate(e.args):
            r = _step(a)
            if r is not None:
                return ConE(e.cname, e.args[:i] + (r,) + e.args[i + 1:])
        return None
    if isinstance(e, AppE):
        r = _step(e.fn)
        if r is not None:
            return AppE(r, e.arg)
        r = _step(e.arg)
        if r is not None:
            return AppE(e.fn, r)
        fn = e.fn
        if isinstance(fn, LamE):
            return substitute(fn.body, {fn.var: e.arg})
        if isinstance(fn, FixE):
            return AppE(substitute(fn.body, {fn.var: fn}), e.arg)
        raise StuckTermError(f"cannot apply non-function value {print_expr(fn)}")
    if isinstance(e, MatchE):
        r = _step(e.scrutinee)
        if r is not None:
            return MatchE(r, e.cases, e.label)
        s = e.scrutinee
        if not isinstance(s, ConE):
            raise StuckTermError(f"match on non-data value {print_expr(s)}")
        for c in e.cases:
            if c.cname == s.cname:
                return substitute(c.body, dict(zip(c.vars, s.args)))
        raise StuckTermError(f"no match case for constructor {s.cname}")
    raise AssertionError(e)


def data_term_to_expr(t: terms.Term) -> Expr:
    if isinstance(t, terms.Var):
        raise ValueError("data terms must be ground")
    return ConE(t.sym.name, tuple(data_term_to_expr(a) for a in t.args))


def expr_to_data_term(e: Expr, con_table: dict) -> terms.Term:
    if not isinstance(e, ConE):
        raise StuckTermError(f"result is not a data term: {print_expr(e)}")
    sym = terms.Symbol(e.cname, con_table.get(e.cname, len(e.args)), terms.CONSTRUCTOR)
    return terms.Fun(sym, tuple(expr_to_data_term(a, con_table) for a in e.args))


def pcf_eval(
    program: Program,
    inputs: list[terms.Term],
    fuel: int = DEFAULT_FUEL,
) -> tuple[terms.Term, int]:
    """Evaluate the program applied to data inputs; returns (value, steps)."""
    if len(inputs) != len(program.params):
        raise ValueError(
            f"expected {len(program.params)} inputs, got {len(inputs)}"
        )
    e: Expr = program.body
    for p in reversed(program.params):
        e = LamE(p, e)
    for d in inputs:
        e = AppE(e, data_term_to_expr(d))
    steps = 0
    for _ in range(fuel):
        r = _step(e)
        if r is None:
            return expr_to_data_term(e, program.con_table), steps
        e = r
        steps += 1
    raise FuelExhaustedError(f"no value within {fuel} steps", partial=e)


# ---------------------------------------------------------------------------
# Data terms in surface syntax (shared by `eval --input` and tests)


def parse_data_term(text: str, con_table: Optional[dict] = None) -> terms.Term:
    table = dict(BUILTIN_CONSTRUCTORS)
    if con_table:
        table.update(con_table)
    tokens = _lex(text)
    pos = 0

    def peek():
        return tokens[pos]

    def advance():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def expect(kind):
        tok = peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r} in data term", tok.line, tok.col)
        return advance()

    def mk(cname, args=()):
        if cname not in table:
            raise ParseError(f"unknown constructor {cname} in data term")
        if table[cname] != len(args):
            raise ParseError(f"constructor {cname} expects {table[cname]} arguments")
        return terms.Fun(terms.Symbol(cname, table[cname], terms.CONSTRUCTOR), tuple(args))

    def parse_cons():
        head = parse_atom()
        if peek().kind == "cons":
            advance()
            return mk("::", (head, parse_cons()))
        return head

    def parse_atom():
        tok = advance()
        if tok.kind == "nil":
            return mk("[]")
        if tok.kind == "num":
            n = int(tok.text)
            t = mk("0")
            for _ in range(n):
                t = mk("S", (t,))
            return t
        if tok.kind == "(":
            t = parse_cons()
            expect(")")
            return t
        if tok.kind == "ident" and tok.text[0].isupper():
            args = []
            if peek().kind == "(" and table.get(tok.text, 0) > 0:
                advance()
                args.append(parse_cons())
                while peek().kind == ",":
                    advance()
                    args.append(parse_cons())
                expect(")")
            return mk(tok.text, args)
        raise ParseError(f"bad data term at {tok.text!r}", tok.line, tok.col)

    t = parse_cons()
    expect("eof")
    return t


def nat(n: int) -> terms.Term:
    return parse_data_term(str(n))


def nat_list(values: list[int]) -> terms.Term:
    t = parse_data_term("[]")
    cons = terms.Symbol("::", 2, terms.CONSTRUCTOR)
    for v in reversed(values):
        t = terms.Fun(cons, (nat(v), t))
    return t
