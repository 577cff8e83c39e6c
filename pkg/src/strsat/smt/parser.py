"""Tokenizer, s-expression reader, and sort-checking builder.

The supported operator family is fixed; anything else (including
quantifiers, which string solvers handle poorly anyway) is rejected with
a message naming the offending operator, so the text can flow back to
the LLM as regeneration feedback.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

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

# --- tokens ---------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    text: str
    span: Span
    is_string: bool = False
    string_value: str | None = None


@dataclass(frozen=True)
class SList:
    items: tuple["Sexp", ...]
    span: Span


Sexp = Union[Atom, SList]

_SYMBOL_END = set('()" \t\r\n;')
_UNICODE_ESCAPE = re.compile(r"\\u\{([0-9a-fA-F]{1,5})\}|\\u([0-9a-fA-F]{4})")


def _decode_string_body(body: str, span: Span) -> str:
    # Doubled quotes were already collapsed by the tokenizer; handle the
    # string-theory \u escapes here.
    for m in re.finditer(r"\\u", body):
        if not _UNICODE_ESCAPE.match(body, m.start()):
            raise CheckerSyntaxError(
                "malformed \\u escape in string literal "
                "(need \\uXXXX or \\u{1-5 hex digits})",
                span,
            )

    def repl(m: re.Match) -> str:
        return chr(int(m.group(1) or m.group(2), 16))

    return _UNICODE_ESCAPE.sub(repl, body)


def tokenize(text: str) -> list[Atom | str | tuple[str, Span]]:
    """Yield a flat token list: '(' / ')' markers (with spans) and atoms."""
    tokens: list[tuple[str, Span] | Atom] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            tokens.append((c, Span(i, i + 1)))
            i += 1
        elif c == '"':
            start = i
            i += 1
            parts: list[str] = []
            while True:
                if i >= n:
                    raise CheckerSyntaxError("unterminated string literal", Span(start, n))
                if text[i] == '"':
                    if i + 1 < n and text[i + 1] == '"':
                        parts.append('"')
                        i += 2
                        continue
                    i += 1
                    break
                parts.append(text[i])
                i += 1
            span = Span(start, i)
            tokens.append(
                Atom(text[start:i], span, is_string=True,
                     string_value=_decode_string_body("".join(parts), span))
            )
        else:
            start = i
            while i < n and text[i] not in _SYMBOL_END:
                i += 1
            tokens.append(Atom(text[start:i], Span(start, i)))
    return tokens


def read_sexp(tokens: list, pos: int) -> tuple[Sexp, int]:
    if pos >= len(tokens):
        raise CheckerSyntaxError("unexpected end of input", Span(0, 0))
    tok = tokens[pos]
    if isinstance(tok, Atom):
        return tok, pos + 1
    marker, span = tok
    if marker == ")":
        raise CheckerSyntaxError("unexpected ')'", span)
    items: list[Sexp] = []
    pos += 1
    while True:
        if pos >= len(tokens):
            raise CheckerSyntaxError("unbalanced parentheses: missing ')'", span)
        nxt = tokens[pos]
        if isinstance(nxt, tuple) and nxt[0] == ")":
            return SList(tuple(items), Span(span.start, nxt[1].end)), pos + 1
        item, pos = read_sexp(tokens, pos)
        items.append(item)


def read_all_sexps(text: str) -> list[Sexp]:
    tokens = tokenize(text)
    forms: list[Sexp] = []
    pos = 0
    while pos < len(tokens):
        form, pos = read_sexp(tokens, pos)
        forms.append(form)
    return forms


# --- operator table -------------------------------------------------------

_ALIASES = {"str.in_re": "str.in.re", "str.to_re": "str.to.re"}
_QUANTIFIERS = {"forall", "exists", "let", "lambda", "match"}

B, I, S, R = Sort.BOOL, Sort.INT, Sort.STRING, Sort.REGLAN

# op -> (min_arity, max_arity | None, fixed arg sorts | uniform sort, result)
_SIGS: dict[str, tuple[int, int | None, object, Sort]] = {
    "and": (1, None, B, B),
    "or": (1, None, B, B),
    "not": (1, 1, (B,), B),
    "=>": (2, None, B, B),
    "ite": (3, 3, None, None),  # special-cased
    "=": (2, None, None, B),  # special-cased (same sort)
    "distinct": (2, None, None, B),
    "str.++": (2, None, S, S),
    "str.len": (1, 1, (S,), I),
    "str.at": (2, 2, (S, I), S),
    "str.substr": (3, 3, (S, I, I), S),
    "str.contains": (2, 2, (S, S), B),
    "str.prefixof": (2, 2, (S, S), B),
    "str.suffixof": (2, 2, (S, S), B),
    "str.indexof": (3, 3, (S, S, I), I),
    "str.replace": (3, 3, (S, S, S), S),
    "str.to.re": (1, 1, (S,), R),
    "str.in.re": (2, 2, (S, R), B),
    "re.++": (2, None, R, R),
    "re.*": (1, 1, (R,), R),
    "re.+": (1, 1, (R,), R),
    "re.opt": (1, 1, (R,), R),
    "re.union": (2, None, R, R),
    "re.inter": (2, None, R, R),
    "re.range": (2, 2, (S, S), R),
    "+": (2, None, I, I),
    "*": (2, None, I, I),
    "-": (1, None, I, I),
    "<=": (2, None, I, B),
    "<": (2, None, I, B),
    ">=": (2, None, I, B),
    ">": (2, None, I, B),
}

_NILARY = {"re.allchar": R, "re.none": R}
_INT_RE = re.compile(r"-?[0-9]+\Z")


class _VarContext:
    """Tracks the single free string variable discovered while building."""

    def __init__(self, expected: str | None):
        self.expected = expected
        self.found: str | None = None

    def use(self, name: str, span: Span) -> None:
        if self.expected is not None and name != self.expected:
            raise CheckerSyntaxError(
                f"expected free variable {self.expected!r}, found {name!r}", span
            )
        if self.found is None:
            self.found = name
        elif self.found != name:
            raise CheckerSyntaxError(
                f"more than one free variable: {self.found!r} and {name!r}", span
            )


def _build(tree: Sexp, ctx: _VarContext) -> tuple[Node, Sort]:
    if isinstance(tree, Atom):
        if tree.is_string:
            return StrLit(tree.string_value or "", tree.span), S
        text = tree.text
        if text == "true":
            return BoolLit(True, tree.span), B
        if text == "false":
            return BoolLit(False, tree.span), B
        if _INT_RE.match(text):
            return IntLit(int(text), tree.span), I
        canon = _ALIASES.get(text, text)
        if canon in _NILARY:
            return App(canon, (), tree.span), _NILARY[canon]
        if canon in _SIGS or canon in _QUANTIFIERS:
            raise CheckerSyntaxError(f"operator {text!r} used without arguments", tree.span)
        return _make_var(text, tree.span, ctx)

    if not tree.items:
        raise CheckerSyntaxError("empty expression '()'", tree.span)
    head = tree.items[0]
    if not isinstance(head, Atom) or head.is_string:
        raise CheckerSyntaxError("expected an operator symbol after '('", tree.span)
    op = _ALIASES.get(head.text, head.text)
    if op in _QUANTIFIERS:
        raise CheckerSyntaxError(
            f"quantified checkers are not supported (operator {head.text!r})", head.span
        )
    if op in _NILARY:
        if len(tree.items) != 1:
            raise CheckerSyntaxError(f"{op} takes no arguments", tree.span)
        return App(op, (), tree.span), _NILARY[op]
    if op not in _SIGS:
        raise CheckerSyntaxError(f"unknown operator {head.text!r}", head.span)

    args = [_build(item, ctx) for item in tree.items[1:]]
    lo, hi, arg_rule, result = _SIGS[op]
    if len(args) < lo or (hi is not None and len(args) > hi):
        want = str(lo) if hi == lo else (f"{lo}+" if hi is None else f"{lo}..{hi}")
        raise CheckerSyntaxError(
            f"{op} expects {want} argument(s), got {len(args)}", tree.span
        )

    if op == "ite":
        (c, cs), (a, as_), (b2, bs) = args
        if cs is not B:
            raise CheckerSyntaxError(f"ite condition must be Bool, got {cs.value}", tree.span)
        if as_ is not bs or as_ is R:
            raise CheckerSyntaxError(
                f"ite branches must share a non-regex sort, got {as_.value} and {bs.value}",
                tree.span,
            )
        return App(op, (c, a, b2), tree.span), as_
    if op in ("=", "distinct"):
        sorts = {sort for _, sort in args}
        if len(sorts) != 1:
            raise CheckerSyntaxError(
                f"{op} arguments must share one sort, got "
                + ", ".join(sorted(s.value for s in sorts)),
                tree.span,
            )
        sort = sorts.pop()
        if sort is R:
            raise CheckerSyntaxError(f"{op} is not supported on regular expressions", tree.span)
        return App(op, tuple(n for n, _ in args), tree.span), B

    if op == "-" and len(args) == 1 and isinstance(args[0][0], IntLit):
        # fold unary minus of a literal so printing round-trips structurally
        return IntLit(-args[0][0].value, tree.span), I

    if isinstance(arg_rule, tuple):
        for idx, ((node, sort), want_sort) in enumerate(zip(args, arg_rule)):
            if sort is not want_sort:
                raise CheckerSyntaxError(
                    f"{op} argument {idx + 1} must be {want_sort.value}, got {sort.value}",
                    _span_of(node, tree.span),
                )
    else:
        for idx, (node, sort) in enumerate(args):
            if sort is not arg_rule:
                raise CheckerSyntaxError(
                    f"{op} argument {idx + 1} must be {arg_rule.value}, got {sort.value}",
                    _span_of(node, tree.span),
                )
    return App(op, tuple(n for n, _ in args), tree.span), result


def _span_of(node: Node, fallback: Span) -> Span:
    span = getattr(node, "span", None)
    return span if span is not None else fallback


def _make_var(name: str, span: Span, ctx: _VarContext) -> tuple[Node, Sort]:
    ctx.use(name, span)
    return Var(name, span), S


def build_expr(tree: Sexp, var: str | None = None) -> CheckerExpr:
    """Build and sort-check one Boolean expression from an s-expression."""
    ctx = _VarContext(var)
    node, sort = _build(tree, ctx)
    if sort is not Sort.BOOL:
        raise CheckerSyntaxError(
            f"checker must be a Boolean expression, got {sort.value}", _span_of(node, Span(0, 0))
        )
    return CheckerExpr(node, ctx.found or var or "s")


def parse_checker(text: str, var: str | None = None) -> CheckerExpr:
    """Parse one checker expression; raises CheckerSyntaxError on any defect."""
    tokens = tokenize(text)
    if not tokens:
        raise CheckerSyntaxError("empty checker text", Span(0, len(text)))
    tree, pos = read_sexp(tokens, 0)
    if pos != len(tokens):
        extra = tokens[pos]
        span = extra.span if isinstance(extra, Atom) else extra[1]
        raise CheckerSyntaxError("unexpected trailing input after expression", span)
    return build_expr(tree, var)
