"""SMT-LIB2 string-theory subset: parse, print, evaluate, enumerate."""

from strsat.smt.nodes import (
    App,
    BoolLit,
    CheckerExpr,
    CheckerSyntaxError,
    IntLit,
    Node,
    Sort,
    Span,
    StrLit,
    Var,
)
from strsat.smt.parser import parse_checker
from strsat.smt.printer import format_expr, to_smtlib_script
from strsat.smt.evaluator import enumerate_sat, eval_on

__all__ = [
    "App",
    "BoolLit",
    "CheckerExpr",
    "CheckerSyntaxError",
    "IntLit",
    "Node",
    "Sort",
    "Span",
    "StrLit",
    "Var",
    "parse_checker",
    "format_expr",
    "to_smtlib_script",
    "enumerate_sat",
    "eval_on",
]
