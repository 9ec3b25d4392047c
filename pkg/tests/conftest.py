"""Shared fixtures: the running-example listings at each pipeline stage and
the corpus programs."""

import pathlib

import pytest

from fp2trs import pcf, pipeline, trs_io

PROGRAMS = pathlib.Path(__file__).resolve().parent.parent / "programs"

REV_SOURCE = (PROGRAMS / "rev.fp").read_text()

CORPUS = ["rev", "foldsum", "map", "isort"]


def corpus_source(name):
    return (PROGRAMS / f"{name}.fp").read_text()


# The list-reversal example as an applicative system, and the stages it
# passes through. Variable names are immaterial; symbol names follow the
# closure constructors (anonymous lambdas C1..C3, let-derived names, fix and
# match tagged with their binding).

_ATRS_SYMS = {
    "C1": 2,
    "C2": 0,
    "C3": 1,
    "comp": 0,
    "comp1": 1,
    "walk": 0,
    "fix[walk]": 0,
    "match[walk]": 1,
    "rev": 0,
    "main": 1,
}

_ORIGIN_KW = dict(
    lam_symbols=["C1", "C2", "C3", "comp", "comp1", "walk", "rev"],
    fix_symbols=["fix[walk]"],
    match_symbols=["match[walk]"],
)

A_REV_TEXT = """
C1(f,g) @ z -> f @ (g @ z)
C2 @ z -> z
C3(x) @ z -> x::z
comp1(f) @ g -> C1(f,g)
comp @ f -> comp1(f)
match[walk]([]) -> C2
match[walk](x::ys) -> comp @ (fix[walk] @ ys) @ C3(x)
walk @ xs -> match[walk](xs)
fix[walk] @ xs -> walk @ xs
rev @ l -> fix[walk] @ l @ []
main(l) -> rev @ l
"""

# after three inlinings: fix[walk] unfolded over the list patterns, the rev
# indirection inlined into main
INLINED_TEXT = """
C1(f,g) @ z -> f @ (g @ z)
C2 @ z -> z
C3(x) @ z -> x::z
comp1(f) @ g -> C1(f,g)
comp @ f -> comp1(f)
match[walk]([]) -> C2
match[walk](x::ys) -> comp @ (fix[walk] @ ys) @ C3(x)
walk @ xs -> match[walk](xs)
fix[walk] @ [] -> C2
fix[walk] @ (x::ys) -> C1(fix[walk] @ ys,C3(x))
rev @ l -> fix[walk] @ l @ []
main(l) -> fix[walk] @ l @ []
"""

# after dead code elimination via the collecting-semantics grammar
LIVE_TEXT = """
C1(f,g) @ x -> f @ (g @ x)
C2 @ z -> z
C3(x) @ z -> x::z
fix[walk] @ [] -> C2
fix[walk] @ (x::ys) -> C1(fix[walk] @ ys,C3(x))
main(l) -> fix[walk] @ l @ []
"""

# the composition rule specialized to the closure shapes that actually occur
INSTANTIATED_TEXT = """
C1(C2,C3(x1)) @ z -> C2 @ (C3(x1) @ z)
C1(C1(f,g),C3(x1)) @ z -> C1(f,g) @ (C3(x1) @ z)
C2 @ z -> z
C3(x) @ z -> x::z
fix[walk] @ [] -> C2
fix[walk] @ (x::ys) -> C1(fix[walk] @ ys,C3(x))
main(l) -> fix[walk] @ l @ []
"""

# the hand-reduced instantiated system (composition results rewritten in
# place, the then-dead C3 application rule dropped)
INSTANTIATED_REDUCED_TEXT = """
C2 @ z -> z
C1(C2,C3(x)) @ z -> x::z
C1(C1(f,g),C3(x)) @ z -> C1(f,g) @ (x::z)
fix[walk] @ [] -> C2
fix[walk] @ (x::ys) -> C1(fix[walk] @ ys,C3(x))
main(l) -> fix[walk] @ l @ []
"""

# its eta saturation adds exactly the two binary applications of fix[walk]
SATURATED_TEXT = INSTANTIATED_REDUCED_TEXT + """
fix[walk] @ [] @ z -> C2 @ z
fix[walk] @ (x::ys) @ z -> C1(fix[walk] @ ys,C3(x)) @ z
"""

UNCURRIED_TEXT = """
C2u(z) -> z
C1u(C2,C3(x),z) -> x::z
C1u(C1(f,g),C3(x),z) -> C1u(f,g,x::z)
fix[walk]u([]) -> C2
fix[walk]u(x::ys) -> C1(fix[walk]u(ys),C3(x))
fix[walk]uu([],z) -> C2u(z)
fix[walk]uu(x::ys,z) -> C1u(fix[walk]u(ys),C3(x),z)
main(l) -> fix[walk]uu(l,[])
"""

R_REV_TEXT = """
C1u(C2,C3(x),z) -> x::z
C1u(C1(f,g),C3(x),z) -> C1u(f,g,x::z)
fix[walk]u([]) -> C2
fix[walk]u(x::ys) -> C1(fix[walk]u(ys),C3(x))
main([]) -> []
main(x::ys) -> C1u(fix[walk]u(ys),C3(x),[])
"""

_UNCURRIED_SYMS = {
    "C1": 2,
    "C2": 0,
    "C3": 1,
    "C1u": 3,
    "C2u": 1,
    "fix[walk]u": 1,
    "fix[walk]uu": 2,
    "main": 1,
}


def listing(text, extra_syms=None, **kwargs):
    syms = dict(_ATRS_SYMS)
    if extra_syms:
        syms.update(extra_syms)
    merged = dict(_ORIGIN_KW)
    merged.update(kwargs)
    return trs_io.parse_atrs_listing(text, syms, **merged)


@pytest.fixture(scope="session")
def a_rev():
    return listing(A_REV_TEXT)


@pytest.fixture(scope="session")
def inlined_rev():
    return listing(INLINED_TEXT)


@pytest.fixture(scope="session")
def live_rev():
    return listing(LIVE_TEXT)


@pytest.fixture(scope="session")
def instantiated_rev():
    return listing(INSTANTIATED_TEXT)


@pytest.fixture(scope="session")
def instantiated_reduced_rev():
    return listing(INSTANTIATED_REDUCED_TEXT)


@pytest.fixture(scope="session")
def saturated_rev():
    return listing(SATURATED_TEXT)


@pytest.fixture(scope="session")
def uncurried_rev():
    return listing(UNCURRIED_TEXT, extra_syms=_UNCURRIED_SYMS)


@pytest.fixture(scope="session")
def r_rev():
    return listing(R_REV_TEXT, extra_syms=_UNCURRIED_SYMS)


@pytest.fixture(scope="session")
def compiled_corpus():
    return {name: pipeline.compile_source(corpus_source(name)) for name in CORPUS}


@pytest.fixture(scope="session")
def compiled_rev(compiled_corpus):
    return compiled_corpus["rev"]


def nat_list(values):
    return pcf.nat_list(values)


def size_inputs(comp, sizes):
    out = []
    for n in sizes:
        values = [(3 * i + n) % 4 for i in range(n)]
        out.append([pcf.nat_list(values) for _ in comp.program.params])
    return out
