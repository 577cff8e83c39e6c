"""Canonical printing and SMT-LIB2 script emission.

Output is byte-stable for identical input and round-trips through the
parser.  Aliased operator spellings are normalized to the dotted forms.
"""

from __future__ import annotations

from strsat.smt.nodes import BoolLit, CheckerExpr, IntLit, Node, StrLit, Var


def escape_string(value: str) -> str:
    """SMT-LIB string literal body: doubled quotes, \\u{...} for exotica."""
    out: list[str] = []
    for ch in value:
        if ch == '"':
            out.append('""')
        elif ch == "\\":
            # A lone backslash is legal inside SMT-LIB literals, but escaping
            # it keeps emitted scripts unambiguous for both CVC5 and Z3.
            out.append("\\u{5c}")
        elif 0x20 <= ord(ch) <= 0x7E:
            out.append(ch)
        else:
            out.append(f"\\u{{{ord(ch):x}}}")
    return "".join(out)


def format_expr(node: Node) -> str:
    if isinstance(node, Var):
        return node.name
    if isinstance(node, StrLit):
        return f'"{escape_string(node.value)}"'
    if isinstance(node, IntLit):
        return str(node.value) if node.value >= 0 else f"(- {-node.value})"
    if isinstance(node, BoolLit):
        return "true" if node.value else "false"
    if not node.args:
        return node.op
    return "(" + node.op + " " + " ".join(format_expr(a) for a in node.args) + ")"


def format_checker(expr: CheckerExpr) -> str:
    return format_expr(expr.root)


def to_smtlib_script(
    exprs: list[CheckerExpr] | tuple[CheckerExpr, ...],
    fix: str | None = None,
    logic: str = "QF_SLIA",
) -> str:
    """Emit a complete script: declarations, one assert per expression,
    an equality pin when `fix` is given, then check-sat and get-model.
    """
    var = "s"
    names = {e.var for e in exprs}
    if len(names) > 1:
        raise ValueError(f"mixed free-variable names: {sorted(names)}")
    if names:
        var = names.pop()
    lines = [
        "(set-option :produce-models true)",
        f"(set-logic {logic})",
        f"(declare-const {var} String)",
    ]
    lines.extend(f"(assert {format_expr(e.root)})" for e in exprs)
    if fix is not None:
        lines.append(f'(assert (= {var} "{escape_string(fix)}"))')
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"
