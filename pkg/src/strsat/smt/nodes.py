"""AST node types for the supported SMT-LIB string-theory subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union


@dataclass(frozen=True)
class Span:
    """Byte offsets into the original checker text (start <= end)."""

    start: int
    end: int


NO_SPAN = Span(0, 0)


class Sort(Enum):
    BOOL = "Bool"
    INT = "Int"
    STRING = "String"
    REGLAN = "RegLan"


class CheckerSyntaxError(Exception):
    """Parse or sort failure; the message is the syntactic-feedback payload."""

    def __init__(self, message: str, span: Span = NO_SPAN):
        super().__init__(message)
        self.message = message
        self.span = span


# Spans are carried for error reporting but excluded from equality so the
# print/parse round trip compares structurally.


@dataclass(frozen=True)
class Var:
    name: str
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class StrLit:
    value: str
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class App:
    op: str
    args: tuple[Node, ...]
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


Node = Union[Var, StrLit, IntLit, BoolLit, App]


@dataclass(frozen=True)
class CheckerExpr:
    """A well-sorted Boolean expression over one free string variable."""

    root: Node
    var: str = "s"


def rename_var(node: Node, new_name: str) -> Node:
    if isinstance(node, Var):
        return Var(new_name, node.span)
    if isinstance(node, App):
        return App(node.op, tuple(rename_var(a, new_name) for a in node.args), node.span)
    return node


def negated(expr: CheckerExpr) -> CheckerExpr:
    return CheckerExpr(App("not", (expr.root,)), expr.var)
