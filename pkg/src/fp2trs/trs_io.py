"""Bit-stable serialization of rewrite systems in the (VAR ...) (RULES ...)
exchange format understood by first-order termination and complexity tools,
plus parsers for that format and for the infix rule-listing notation."""

from __future__ import annotations

import re
from typing import Iterable, Optional

from .errors import FormatConstraintError, ParseError
from .terms import (
    APP_NAME,
    APPLICATION,
    CONSTRUCTOR,
    Atrs,
    Fun,
    Rule,
    Symbol,
    Term,
    Var,
    format_rule,
    subterms,
    term_vars,
)

CLASSIC_TRS = "classic_trs"
APPLICATIVE_TRS = "applicative_trs"
INTERNAL_DEBUG = "internal_debug"

FORMATS = (CLASSIC_TRS, APPLICATIVE_TRS, INTERNAL_DEBUG)

_SAFE_NAMES = {"::": "Cons", "[]": "nil", APP_NAME: "app"}


def _sanitize(name: str, taken: set[str]) -> str:
    base = _SAFE_NAMES.get(name)
    if base is None:
        base = re.sub(r"[^A-Za-z0-9_]", "_", name)
        if not base or base[0].isdigit():
            base = f"f_{base}"
    cand, k = base, 1
    while cand in taken:
        k += 1
        cand = f"{base}{k}"
    taken.add(cand)
    return cand


def _name_map(atrs: Atrs, fmt: str) -> dict[str, str]:
    taken: set[str] = set()
    mapping: dict[str, str] = {}
    names = []
    for rule in atrs.rules:
        for side in (rule.lhs, rule.rhs):
            for u in subterms(side):
                if isinstance(u, Fun) and u.sym.name not in names:
                    names.append(u.sym.name)
    if atrs.main.name not in names:
        names.append(atrs.main.name)
    for name in names:
        mapping[name] = _sanitize(name, taken)
    return mapping


def _emit_term(t: Term, mapping: dict[str, str]) -> str:
    if isinstance(t, Var):
        return t.name
    name = mapping[t.sym.name]
    if not t.args:
        return name
    return f"{name}({','.join(_emit_term(a, mapping) for a in t.args)})"


def emit(atrs: Atrs, fmt: str = CLASSIC_TRS) -> str:
    """Deterministic text form; classic_trs rejects systems that still carry
    the application symbol, applicative_trs prints it as binary `app`."""
    if fmt not in FORMATS:
        raise FormatConstraintError(f"unknown format {fmt!r}")
    if fmt == INTERNAL_DEBUG:
        lines = [f"main: {atrs.main.name}"]
        lines += [f"({r.index}) {format_rule(r)}" for r in atrs.rules]
        return "\n".join(lines) + "\n"
    has_app = any(
        isinstance(u, Fun) and u.sym.name == APP_NAME
        for r in atrs.rules
        for side in (r.lhs, r.rhs)
        for u in subterms(side)
    )
    if fmt == CLASSIC_TRS and has_app:
        raise FormatConstraintError(
            "classic_trs requires an application-free system; "
            "use applicative_trs or run the full pipeline first"
        )
    mapping = _name_map(atrs, fmt)
    comment_lines = [f"  main {mapping.get(atrs.main.name, atrs.main.name)}"]
    for orig in mapping:
        comment_lines.append(f"  map {_escape(orig)} {mapping[orig]}")
    var_names = sorted({x for r in atrs.rules for x in term_vars(r.lhs) + term_vars(r.rhs)})
    rule_lines = [
        f"  {_emit_term(r.lhs, mapping)} -> {_emit_term(r.rhs, mapping)}"
        for r in atrs.rules
    ]
    parts = [
        "(COMMENT\n" + "\n".join(comment_lines) + "\n)",
        "(VAR " + " ".join(var_names) + ")",
        "(RULES\n" + "\n".join(rule_lines) + "\n)",
    ]
    return "\n".join(parts) + "\n"


def _escape(name: str) -> str:
    return name.replace(" ", "_")


# ---------------------------------------------------------------------------
# Parsing the exchange format


_TOK = re.compile(r"\s+|->|[(),]|[^\s(),]+")


def _tokenize(text: str) -> list[str]:
    out = []
    for m in _TOK.finditer(text):
        tok = m.group(0)
        if not tok.strip():
            continue
        out.append(tok)
    return out


def parse_trs(text: str) -> Atrs:
    """Inverse of emit on emit's image: restores original symbol names from
    the COMMENT name map; the constructor/defined partition is re-inferred
    from left-hand-side roots."""
    tokens = _tokenize(text)
    pos = 0
    sections: dict[str, list[str]] = {}
    while pos < len(tokens):
        if tokens[pos] != "(":
            raise ParseError(f"expected '(' at token {tokens[pos]!r}")
        pos += 1
        keyword = tokens[pos]
        pos += 1
        depth = 1
        body = []
        while pos < len(tokens):
            if tokens[pos] == "(":
                depth += 1
            elif tokens[pos] == ")":
                depth -= 1
                if depth == 0:
                    pos += 1
                    break
            body.append(tokens[pos])
            pos += 1
        else:
            raise ParseError(f"unterminated ({keyword} ...) block")
        sections[keyword] = body

    if "RULES" not in sections:
        raise ParseError("missing (RULES ...) block")
    variables = set(sections.get("VAR", ()))

    reverse: dict[str, str] = {}
    main_name = None
    comment = sections.get("COMMENT", [])
    i = 0
    while i < len(comment):
        if comment[i] == "main" and i + 1 < len(comment):
            main_name = comment[i + 1]
            i += 2
        elif comment[i] == "map" and i + 2 < len(comment):
            reverse[comment[i + 2]] = comment[i + 1]
            i += 3
        else:
            i += 1

    arities: dict[str, int] = {}

    def restore(name: str) -> str:
        return reverse.get(name, name)

    body = sections["RULES"]
    pos2 = 0

    def peek():
        return body[pos2] if pos2 < len(body) else None

    def advance():
        nonlocal pos2
        tok = body[pos2]
        pos2 += 1
        return tok

    def parse_term() -> Term:
        tok = advance()
        if tok in ("(", ")", ",", "->"):
            raise ParseError(f"unexpected token {tok!r} in term")
        if tok in variables:
            return Var(tok)
        args: list[Term] = []
        if peek() == "(":
            advance()
            if peek() != ")":
                args.append(parse_term())
                while peek() == ",":
                    advance()
                    args.append(parse_term())
            if peek() != ")":
                raise ParseError(f"expected ')' after arguments of {tok}")
            advance()
        name = restore(tok)
        known = arities.setdefault(name, len(args))
        if known != len(args):
            raise ParseError(f"symbol {name} used with arities {known} and {len(args)}")
        sym = Symbol(name, len(args), APPLICATION if name == APP_NAME else CONSTRUCTOR)
        return Fun(sym, tuple(args))

    rules = []
    while peek() is not None:
        lhs = parse_term()
        if peek() != "->":
            raise ParseError("expected '->' in rule")
        advance()
        rhs = parse_term()
        rules.append(Rule(lhs, rhs))

    if main_name is not None:
        main_name = restore(main_name)
    if main_name is None:
        roots = [r.root.name for r in rules]
        main_name = "main" if "main" in roots else roots[0] if roots else "main"
    main_arity = arities.get(main_name, 0)
    main_sym = Symbol(main_name, main_arity)
    data_cons = [
        Symbol(name, arity)
        for name, arity in sorted(arities.items())
        if name not in {r.root.name for r in rules} and name != APP_NAME
    ]
    return Atrs(rules, main_sym, data_constructors=data_cons)


# ---------------------------------------------------------------------------
# Infix listing notation (used for fixtures and --dump output)
#
#   C1(f,g) @ z -> f @ (g @ z)
#   match[walk](x::ys) -> comp @ (fix[walk] @ ys) @ C3(x)

_LIST_TOK = re.compile(r"\s+|->|::|\[\]|@|[(),]|[A-Za-z0-9_'\[\]]+")


def parse_atrs_listing(
    text: str,
    symbols: dict[str, int],
    main: str = "main",
    data_constructors: Optional[dict[str, int]] = None,
    lam_symbols: Iterable[str] = (),
    fix_symbols: Iterable[str] = (),
    match_symbols: Iterable[str] = (),
) -> Atrs:
    """Parse rules written in the infix notation. Tokens found in `symbols`
    are function symbols at the given arity; anything else is a variable."""
    table = dict(symbols)
    table.setdefault("::", 2)
    table.setdefault("[]", 0)
    rules = []
    for line in text.strip().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        lhs_text, arrow, rhs_text = line.partition("->")
        if not arrow:
            raise ParseError(f"rule line without '->': {line!r}")
        rules.append(
            Rule(_parse_listing_term(lhs_text, table), _parse_listing_term(rhs_text, table))
        )
    data = data_constructors
    if data is None:
        data = {"[]": 0, "::": 2}
    data_syms = [Symbol(n, a) for n, a in sorted(data.items())]
    main_sym = Symbol(main, table.get(main, 0))
    return Atrs(
        rules,
        main_sym,
        data_constructors=data_syms,
        lam_symbols=lam_symbols,
        fix_symbols=fix_symbols,
        match_symbols=match_symbols,
    )


def _parse_listing_term(text: str, table: dict[str, int]) -> Term:
    tokens = [t for t in (m.group(0) for m in _LIST_TOK.finditer(text)) if t.strip()]
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def advance():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def expect(tok):
        if peek() != tok:
            raise ParseError(f"expected {tok!r} in {text!r}, found {peek()!r}")
        advance()

    def parse_cons() -> Term:
        left = parse_app()
        if peek() == "::":
            advance()
            right = parse_cons()
            return Fun(Symbol("::", 2), (left, right))
        return left

    def parse_app() -> Term:
        out = parse_atom()
        while peek() == "@":
            advance()
            out = Fun(Symbol(APP_NAME, 2, APPLICATION), (out, parse_atom()))
        return out

    def parse_atom() -> Term:
        tok = advance()
        if tok == "(":
            inner = parse_cons()
            expect(")")
            return inner
        if tok == "[]":
            return Fun(Symbol("[]", 0))
        if tok in table:
            arity = table[tok]
            args: list[Term] = []
            if peek() == "(" and arity > 0:
                advance()
                args.append(parse_cons())
                while peek() == ",":
                    advance()
                    args.append(parse_cons())
                expect(")")
            if len(args) != arity:
                raise ParseError(f"{tok} expects {arity} arguments in {text!r}")
            return Fun(Symbol(tok, arity), tuple(args))
        return Var(tok)

    result = parse_cons()
    if peek() is not None:
        raise ParseError(f"trailing tokens in term {text!r}")
    return result


# ---------------------------------------------------------------------------
# Structural isomorphism of rule systems (golden-listing comparisons)


def _rule_shape(rule: Rule):
    names: dict[str, str] = {}

    def go(t: Term):
        if isinstance(t, Var):
            return names.setdefault(t.name, f"#{len(names)}")
        return ("!", t.sym.arity, tuple(go(a) for a in t.args))

    return go(rule.lhs), go(rule.rhs)


def _rule_syms(rule: Rule) -> list[Symbol]:
    out = []
    for side in (rule.lhs, rule.rhs):
        for u in subterms(side):
            if isinstance(u, Fun):
                out.append(u.sym)
    return out


def isomorphic(a: Atrs, b: Atrs) -> Optional[dict[str, str]]:
    """A bijective symbol renaming making the rule sets equal modulo variable
    renaming, mapping main to main; None when there is none."""
    if len(a.rules) != len(b.rules):
        return None

    mapping: dict[str, str] = {a.main.name: b.main.name}
    used: set[str] = {b.main.name}

    def rule_fits(ra: Rule, rb: Rule, mp: dict, us: set) -> Optional[tuple[dict, set]]:
        if _rule_shape(ra) != _rule_shape(rb):
            return None
        trial, trial_used = dict(mp), set(us)
        for sa, sb in zip(_rule_syms(ra), _rule_syms(rb)):
            if sa.arity != sb.arity:
                return None
            have = trial.get(sa.name)
            if have is None:
                if sb.name in trial_used:
                    return None
                trial[sa.name] = sb.name
                trial_used.add(sb.name)
            elif have != sb.name:
                return None
        return trial, trial_used

    def search(idx: int, remaining: list[Rule], mp: dict, us: set) -> Optional[dict]:
        if idx == len(a.rules):
            return mp
        for k, rb in enumerate(remaining):
            fit = rule_fits(a.rules[idx], rb, mp, us)
            if fit is None:
                continue
            result = search(idx + 1, remaining[:k] + remaining[k + 1:], *fit)
            if result is not None:
                return result
        return None

    return search(0, list(b.rules), mapping, used)
