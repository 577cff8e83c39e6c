"""Independent reference interpreter for checker expressions.

Deliberately written from the operator definitions with a different
algorithm family than the production evaluator: regex membership is
decided by memoized span matching (try every split point) instead of
derivatives, and the partial string operations are spelled out with
explicit loops.  Only used as a testing oracle.
"""

from __future__ import annotations

from strsat.smt.nodes import App, BoolLit, CheckerExpr, IntLit, Node, StrLit, Var


def naive_eval(expr: CheckerExpr, candidate: str) -> bool:
    return bool(_ev(expr.root, candidate))


def _ev(node: Node, s: str):
    if isinstance(node, Var):
        return s
    if isinstance(node, (StrLit, IntLit, BoolLit)):
        return node.value
    op, args = node.op, node.args

    if op == "and":
        for a in args:
            if not _ev(a, s):
                return False
        return True
    if op == "or":
        for a in args:
            if _ev(a, s):
                return True
        return False
    if op == "not":
        return not _ev(args[0], s)
    if op == "=>":
        for a in args[:-1]:
            if not _ev(a, s):
                return True
        return _ev(args[-1], s)
    if op == "=":
        first = _ev(args[0], s)
        return all(_ev(a, s) == first for a in args[1:])
    if op == "distinct":
        seen = []
        for a in args:
            v = _ev(a, s)
            if v in seen:
                return False
            seen.append(v)
        return True
    if op == "ite":
        return _ev(args[1], s) if _ev(args[0], s) else _ev(args[2], s)

    if op == "str.++":
        out = ""
        for a in args:
            out += _ev(a, s)
        return out
    if op == "str.len":
        return len(_ev(args[0], s))
    if op == "str.at":
        w, i = _ev(args[0], s), _ev(args[1], s)
        if i < 0 or i >= len(w):
            return ""
        return w[i : i + 1]
    if op == "str.substr":
        w, m, n = _ev(args[0], s), _ev(args[1], s), _ev(args[2], s)
        if m < 0 or m >= len(w) or n <= 0:
            return ""
        out = ""
        for k in range(m, min(m + n, len(w))):
            out += w[k]
        return out
    if op == "str.contains":
        w, t = _ev(args[0], s), _ev(args[1], s)
        return any(w[i : i + len(t)] == t for i in range(len(w) - len(t) + 1))
    if op == "str.prefixof":
        p, w = _ev(args[0], s), _ev(args[1], s)
        return w[: len(p)] == p
    if op == "str.suffixof":
        p, w = _ev(args[0], s), _ev(args[1], s)
        return p == "" or w[-len(p) :] == p
    if op == "str.indexof":
        w, t, i = _ev(args[0], s), _ev(args[1], s), _ev(args[2], s)
        if i < 0 or i > len(w):
            return -1
        for k in range(i, len(w) - len(t) + 1):
            if w[k : k + len(t)] == t:
                return k
        return -1
    if op == "str.replace":
        w, t, u = _ev(args[0], s), _ev(args[1], s), _ev(args[2], s)
        if t == "":
            return u + w
        for k in range(len(w) - len(t) + 1):
            if w[k : k + len(t)] == t:
                return w[:k] + u + w[k + len(t) :]
        return w
    if op == "str.in.re":
        w = _ev(args[0], s)
        return _match(args[1], s, w, 0, len(w), {})

    if op == "+":
        return sum(_ev(a, s) for a in args)
    if op == "*":
        out = 1
        for a in args:
            out *= _ev(a, s)
        return out
    if op == "-":
        vals = [_ev(a, s) for a in args]
        if len(vals) == 1:
            return -vals[0]
        out = vals[0]
        for v in vals[1:]:
            out -= v
        return out
    if op in ("<=", "<", ">=", ">"):
        vals = [_ev(a, s) for a in args]
        for x, y in zip(vals, vals[1:]):
            if op == "<=" and not x <= y:
                return False
            if op == "<" and not x < y:
                return False
            if op == ">=" and not x >= y:
                return False
            if op == ">" and not x > y:
                return False
        return True
    raise AssertionError(f"naive interpreter: unhandled operator {op}")


def _match(r: Node, s: str, text: str, lo: int, hi: int, memo: dict) -> bool:
    """Does text[lo:hi] belong to the language of regex node r?"""
    key = (id(r), lo, hi)
    if key in memo:
        return memo[key]
    memo[key] = False  # guards self-reference while computing
    assert isinstance(r, App)
    op = r.op
    if op == "str.to.re":
        out = text[lo:hi] == _ev(r.args[0], s)
    elif op == "re.allchar":
        out = hi - lo == 1
    elif op == "re.none":
        out = False
    elif op == "re.range":
        a, b = _ev(r.args[0], s), _ev(r.args[1], s)
        out = (
            hi - lo == 1
            and len(a) == 1
            and len(b) == 1
            and a <= text[lo] <= b
        )
    elif op == "re.union":
        out = any(_match(a, s, text, lo, hi, memo) for a in r.args)
    elif op == "re.inter":
        out = all(_match(a, s, text, lo, hi, memo) for a in r.args)
    elif op == "re.++":
        out = _match_seq(r.args, 0, s, text, lo, hi, memo)
    elif op == "re.*":
        out = _match_star(r.args[0], s, text, lo, hi, memo)
    elif op == "re.+":
        out = any(
            _match(r.args[0], s, text, lo, k, memo)
            and _match_star(r.args[0], s, text, k, hi, memo)
            for k in range(lo, hi + 1)
        )
    elif op == "re.opt":
        out = lo == hi or _match(r.args[0], s, text, lo, hi, memo)
    else:
        raise AssertionError(f"naive interpreter: unhandled regex operator {op}")
    memo[key] = out
    return out


def _match_seq(parts, idx: int, s: str, text: str, lo: int, hi: int, memo: dict) -> bool:
    key = ("seq", id(parts), idx, lo, hi)
    if key in memo:
        return memo[key]
    memo[key] = False
    if idx == len(parts):
        out = lo == hi
    else:
        out = any(
            _match(parts[idx], s, text, lo, k, memo)
            and _match_seq(parts, idx + 1, s, text, k, hi, memo)
            for k in range(lo, hi + 1)
        )
    memo[key] = out
    return out


def _match_star(body: Node, s: str, text: str, lo: int, hi: int, memo: dict) -> bool:
    key = ("star", id(body), lo, hi)
    if key in memo:
        return memo[key]
    memo[key] = False
    if lo == hi:
        out = True
    else:
        out = any(
            _match(body, s, text, lo, k, memo)
            and _match_star(body, s, text, k, hi, memo)
            for k in range(lo + 1, hi + 1)
        )
    memo[key] = out
    return out
