"""Concrete evaluation of checker expressions under s := candidate.

Total and terminating: partial string operations follow the theory's
empty-string / -1 conventions, and regex membership is decided by
character-by-character derivatives of the regex value, so no solver and
no backtracking engine is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Union

from strsat.smt.nodes import App, BoolLit, CheckerExpr, IntLit, Node, StrLit, Var

# --- regex values ---------------------------------------------------------


@dataclass(frozen=True)
class RLit:
    value: str


@dataclass(frozen=True)
class RAll:  # any single character
    pass


@dataclass(frozen=True)
class RNone:  # empty language
    pass


@dataclass(frozen=True)
class RRange:
    lo: str
    hi: str


@dataclass(frozen=True)
class RConcat:
    parts: tuple["Regex", ...]


@dataclass(frozen=True)
class RStar:
    body: "Regex"


@dataclass(frozen=True)
class RUnion:
    parts: tuple["Regex", ...]


@dataclass(frozen=True)
class RInter:
    parts: tuple["Regex", ...]


Regex = Union[RLit, RAll, RNone, RRange, RConcat, RStar, RUnion, RInter]

_EPSILON = RLit("")
_EMPTY = RNone()
_ANY = RAll()


def rconcat(parts: Iterable[Regex]) -> Regex:
    flat: list[Regex] = []
    for p in parts:
        if isinstance(p, RNone):
            return _EMPTY
        if isinstance(p, RConcat):
            flat.extend(p.parts)
        elif isinstance(p, RLit) and p.value == "":
            continue
        else:
            flat.append(p)
    # merge adjacent literals to keep derivatives compact
    merged: list[Regex] = []
    for p in flat:
        if merged and isinstance(p, RLit) and isinstance(merged[-1], RLit):
            merged[-1] = RLit(merged[-1].value + p.value)
        else:
            merged.append(p)
    if not merged:
        return _EPSILON
    if len(merged) == 1:
        return merged[0]
    return RConcat(tuple(merged))


def runion(parts: Iterable[Regex]) -> Regex:
    flat: dict[Regex, None] = {}
    for p in parts:
        if isinstance(p, RNone):
            continue
        if isinstance(p, RUnion):
            for q in p.parts:
                flat.setdefault(q)
        else:
            flat.setdefault(p)
    if not flat:
        return _EMPTY
    if len(flat) == 1:
        return next(iter(flat))
    return RUnion(tuple(flat))


def rinter(parts: Iterable[Regex]) -> Regex:
    flat: dict[Regex, None] = {}
    for p in parts:
        if isinstance(p, RNone):
            return _EMPTY
        if isinstance(p, RInter):
            for q in p.parts:
                flat.setdefault(q)
        else:
            flat.setdefault(p)
    if not flat:
        return RStar(_ANY)  # intersection of nothing: the universal language
    if len(flat) == 1:
        return next(iter(flat))
    return RInter(tuple(flat))


def rstar(body: Regex) -> Regex:
    if isinstance(body, (RNone,)) or (isinstance(body, RLit) and body.value == ""):
        return _EPSILON
    if isinstance(body, RStar):
        return body
    return RStar(body)


def nullable(r: Regex) -> bool:
    if isinstance(r, RLit):
        return r.value == ""
    if isinstance(r, (RAll, RNone, RRange)):
        return False
    if isinstance(r, RConcat):
        return all(nullable(p) for p in r.parts)
    if isinstance(r, RStar):
        return True
    if isinstance(r, RUnion):
        return any(nullable(p) for p in r.parts)
    return all(nullable(p) for p in r.parts)  # RInter


def deriv(r: Regex, c: str) -> Regex:
    if isinstance(r, RLit):
        if r.value and r.value[0] == c:
            return RLit(r.value[1:])
        return _EMPTY
    if isinstance(r, RAll):
        return _EPSILON
    if isinstance(r, RNone):
        return _EMPTY
    if isinstance(r, RRange):
        return _EPSILON if r.lo <= c <= r.hi else _EMPTY
    if isinstance(r, RConcat):
        head, tail = r.parts[0], r.parts[1:]
        first = rconcat([deriv(head, c), *tail])
        if nullable(head):
            return runion([first, deriv(rconcat(tail), c)])
        return first
    if isinstance(r, RStar):
        return rconcat([deriv(r.body, c), r])
    if isinstance(r, RUnion):
        return runion(deriv(p, c) for p in r.parts)
    return rinter(deriv(p, c) for p in r.parts)  # RInter


def regex_member(value: str, r: Regex) -> bool:
    for c in value:
        r = deriv(r, c)
        if isinstance(r, RNone):
            return False
    return nullable(r)


# --- expression evaluation --------------------------------------------------


def build_regex(node: Node, s: str, var: str) -> Regex:
    """Lower a RegLan-sorted AST to a regex value; inner string terms are
    evaluated under the candidate assignment first."""
    assert isinstance(node, App)
    op = node.op
    if op == "str.to.re":
        return RLit(_eval(node.args[0], s, var))
    if op == "re.range":
        lo = _eval(node.args[0], s, var)
        hi = _eval(node.args[1], s, var)
        if len(lo) == 1 and len(hi) == 1 and lo <= hi:
            return RRange(lo, hi)
        return _EMPTY
    if op == "re.allchar":
        return _ANY
    if op == "re.none":
        return _EMPTY
    if op == "re.++":
        return rconcat(build_regex(a, s, var) for a in node.args)
    if op == "re.*":
        return rstar(build_regex(node.args[0], s, var))
    if op == "re.+":
        body = build_regex(node.args[0], s, var)
        return rconcat([body, rstar(body)])
    if op == "re.opt":
        return runion([_EPSILON, build_regex(node.args[0], s, var)])
    if op == "re.union":
        return runion(build_regex(a, s, var) for a in node.args)
    if op == "re.inter":
        return rinter(build_regex(a, s, var) for a in node.args)
    raise AssertionError(f"not a regex operator: {op}")


def _eval(node: Node, s: str, var: str):
    if isinstance(node, Var):
        return s
    if isinstance(node, StrLit):
        return node.value
    if isinstance(node, IntLit):
        return node.value
    if isinstance(node, BoolLit):
        return node.value
    op = node.op
    args = node.args
    if op == "and":
        return all(_eval(a, s, var) for a in args)
    if op == "or":
        return any(_eval(a, s, var) for a in args)
    if op == "not":
        return not _eval(args[0], s, var)
    if op == "=>":
        vals = [_eval(a, s, var) for a in args]
        acc = vals[-1]
        for v in reversed(vals[:-1]):
            acc = (not v) or acc
        return acc
    if op == "=":
        vals = [_eval(a, s, var) for a in args]
        return all(v == vals[0] for v in vals[1:])
    if op == "distinct":
        vals = [_eval(a, s, var) for a in args]
        return len(set(vals)) == len(vals)
    if op == "ite":
        return _eval(args[1] if _eval(args[0], s, var) else args[2], s, var)
    if op == "str.++":
        return "".join(_eval(a, s, var) for a in args)
    if op == "str.len":
        return len(_eval(args[0], s, var))
    if op == "str.at":
        w = _eval(args[0], s, var)
        i = _eval(args[1], s, var)
        return w[i] if 0 <= i < len(w) else ""
    if op == "str.substr":
        w = _eval(args[0], s, var)
        m = _eval(args[1], s, var)
        n = _eval(args[2], s, var)
        if 0 <= m < len(w) and n > 0:
            return w[m : m + n]
        return ""
    if op == "str.contains":
        return _eval(args[1], s, var) in _eval(args[0], s, var)
    if op == "str.prefixof":
        return _eval(args[1], s, var).startswith(_eval(args[0], s, var))
    if op == "str.suffixof":
        return _eval(args[1], s, var).endswith(_eval(args[0], s, var))
    if op == "str.indexof":
        w = _eval(args[0], s, var)
        t = _eval(args[1], s, var)
        i = _eval(args[2], s, var)
        if i < 0 or i > len(w):
            return -1
        return w.find(t, i)
    if op == "str.replace":
        w = _eval(args[0], s, var)
        t = _eval(args[1], s, var)
        u = _eval(args[2], s, var)
        if t == "":
            return u + w
        i = w.find(t)
        return w if i < 0 else w[:i] + u + w[i + len(t) :]
    if op == "str.in.re":
        value = _eval(args[0], s, var)
        return regex_member(value, build_regex(args[1], s, var))
    if op == "+":
        return sum(_eval(a, s, var) for a in args)
    if op == "*":
        acc = 1
        for a in args:
            acc *= _eval(a, s, var)
        return acc
    if op == "-":
        vals = [_eval(a, s, var) for a in args]
        if len(vals) == 1:
            return -vals[0]
        acc = vals[0]
        for v in vals[1:]:
            acc -= v
        return acc
    if op in ("<=", "<", ">=", ">"):
        vals = [_eval(a, s, var) for a in args]
        pairs = zip(vals, vals[1:])
        if op == "<=":
            return all(a <= b for a, b in pairs)
        if op == "<":
            return all(a < b for a, b in pairs)
        if op == ">=":
            return all(a >= b for a, b in pairs)
        return all(a > b for a, b in pairs)
    raise AssertionError(f"unhandled operator: {op}")


def eval_on(expr: CheckerExpr, candidate: str) -> bool:
    """Evaluate a well-sorted checker on a candidate string."""
    return bool(_eval(expr.root, candidate, expr.var))


def enumerate_sat(
    exprs: list[CheckerExpr] | tuple[CheckerExpr, ...],
    alphabet: Iterable[str],
    max_len: int,
) -> str | None:
    """Bounded brute-force search: the first string over `alphabet` with
    length <= max_len satisfying every expression, in shortlex order
    (shorter first, code-point order within a length); None if the bound
    holds none.
    """
    chars = sorted(set(alphabet))
    if not chars:
        raise ValueError("alphabet must be non-empty")
    if any(len(c) != 1 for c in chars):
        raise ValueError("alphabet members must be single characters")
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    for length in range(max_len + 1):
        for tup in product(chars, repeat=length):
            candidate = "".join(tup)
            if all(eval_on(e, candidate) for e in exprs):
                return candidate
    return None
