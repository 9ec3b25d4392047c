"""fp2trs: compile higher-order functional programs into first-order term
rewrite systems whose runtime complexity reflects the original program's."""

from .pipeline import Compilation, compile_source, evaluate, evaluate_source_pcf
from .strategy import simplify
from .terms import Atrs, Fun, Rule, Symbol, Term, Var, normalize
from .trs_io import emit, parse_trs

__all__ = [
    "Atrs",
    "Compilation",
    "Fun",
    "Rule",
    "Symbol",
    "Term",
    "Var",
    "compile_source",
    "emit",
    "evaluate",
    "evaluate_source_pcf",
    "normalize",
    "parse_trs",
    "simplify",
]

__version__ = "0.1.0"
