"""Fallback command-line solver for the regular fragment of the emitted
SMT-LIB2 scripts.

Intended for environments without cvc5/z3: it decides conjunctions whose
atoms are regex memberships, substring/prefix/suffix/equality tests
against literals, and string-length bounds, under full Boolean structure
(one free string variable).  Everything is compiled to a DFA over a
partitioned character alphabet; emptiness means unsat, otherwise a
shortest witness is produced for get-model.  Atoms outside the fragment
yield `unknown`, exactly like a real solver giving up.

Usage: strsat-minisolve FILE.smt2
"""

from __future__ import annotations

import sys
from bisect import bisect_right
from collections import deque

from strsat.smt.nodes import App, BoolLit, CheckerSyntaxError, IntLit, Node, StrLit, Var
from strsat.smt.parser import Atom, SList, build_expr, read_all_sexps
from strsat.smt.printer import escape_string

MAX_CODEPOINT = 0x110000
MAX_DFA_STATES = 50_000
MAX_LENGTH_BOUND = 100_000


class Unsupported(Exception):
    pass


# --- character classes ------------------------------------------------------


class ClassTable:
    """Partition of the code-point space such that every character
    predicate appearing in the formula is constant on each class."""

    def __init__(self, boundaries: set[int]):
        pts = {0, MAX_CODEPOINT}
        for b in boundaries:
            if 0 < b < MAX_CODEPOINT:
                pts.add(b)
        self.starts = sorted(pts)  # class i covers [starts[i], starts[i+1])
        self.count = len(self.starts) - 1

    def class_of(self, ch: str) -> int:
        return bisect_right(self.starts, ord(ch)) - 1

    def classes_in_range(self, lo: str, hi: str) -> set[int]:
        a, b = ord(lo), ord(hi)
        return {
            i
            for i in range(self.count)
            if self.starts[i] >= a and self.starts[i] <= b
        }

    def all_classes(self) -> set[int]:
        return set(range(self.count))

    def representative(self, cls: int) -> str:
        lo, hi = self.starts[cls], self.starts[cls + 1]
        for pref in ((0x61, 0x7B), (0x41, 0x5B), (0x30, 0x3A), (0x20, 0x7F)):
            start = max(lo, pref[0])
            if start < min(hi, pref[1]):
                return chr(start)
        return chr(lo)


def collect_boundaries(node: Node, out: set[int]) -> None:
    if isinstance(node, StrLit):
        for ch in node.value:
            out.add(ord(ch))
            out.add(ord(ch) + 1)
    elif isinstance(node, App):
        if node.op == "re.range":
            lits = [a for a in node.args if isinstance(a, StrLit)]
            if len(lits) == 2 and len(lits[0].value) == 1 and len(lits[1].value) == 1:
                out.add(ord(lits[0].value))
                out.add(ord(lits[1].value) + 1)
        for a in node.args:
            collect_boundaries(a, out)


# --- NFA fragments ----------------------------------------------------------


class Builder:
    def __init__(self, table: ClassTable):
        self.table = table
        self.eps: list[set[int]] = []
        self.trans: list[dict[int, set[int]]] = []

    def state(self) -> int:
        self.eps.append(set())
        self.trans.append({})
        return len(self.eps) - 1

    def edge(self, a: int, cls: int, b: int) -> None:
        self.trans[a].setdefault(cls, set()).add(b)

    def eps_edge(self, a: int, b: int) -> None:
        self.eps[a].add(b)

    # fragments are (start, accept) pairs with a single accept state

    def f_empty_word(self) -> tuple[int, int]:
        s = self.state()
        return s, s

    def f_none(self) -> tuple[int, int]:
        return self.state(), self.state()

    def f_classes(self, classes: set[int]) -> tuple[int, int]:
        a, b = self.state(), self.state()
        for cls in classes:
            self.edge(a, cls, b)
        return a, b

    def f_lit(self, word: str) -> tuple[int, int]:
        a = self.state()
        cur = a
        for ch in word:
            nxt = self.state()
            self.edge(cur, self.table.class_of(ch), nxt)
            cur = nxt
        return a, cur

    def f_concat(self, frags: list[tuple[int, int]]) -> tuple[int, int]:
        if not frags:
            return self.f_empty_word()
        for (_, acc), (start, _) in zip(frags, frags[1:]):
            self.eps_edge(acc, start)
        return frags[0][0], frags[-1][1]

    def f_union(self, frags: list[tuple[int, int]]) -> tuple[int, int]:
        a, b = self.state(), self.state()
        for start, acc in frags:
            self.eps_edge(a, start)
            self.eps_edge(acc, b)
        return a, b

    def f_star(self, frag: tuple[int, int]) -> tuple[int, int]:
        a, b = self.state(), self.state()
        self.eps_edge(a, frag[0])
        self.eps_edge(frag[1], b)
        self.eps_edge(a, b)
        self.eps_edge(frag[1], frag[0])
        return a, b

    def f_dfa(self, dfa: "DFA") -> tuple[int, int]:
        """Embed a DFA back as a fragment (used under re.inter)."""
        base = len(self.eps)
        for _ in range(len(dfa.delta)):
            self.state()
        acc = self.state()
        for i, row in enumerate(dfa.delta):
            for cls, j in enumerate(row):
                self.edge(base + i, cls, base + j)
            if dfa.accept[i]:
                self.eps_edge(base + i, acc)
        return base + dfa.start, acc

    def closure(self, states: set[int]) -> frozenset[int]:
        seen = set(states)
        stack = list(states)
        while stack:
            s = stack.pop()
            for t in self.eps[s]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)


class DFA:
    """Total DFA over class ids."""

    def __init__(self, delta: list[list[int]], accept: list[bool], start: int):
        self.delta = delta
        self.accept = accept
        self.start = start

    @staticmethod
    def universal(n_classes: int) -> "DFA":
        return DFA([[0] * n_classes], [True], 0)

    @staticmethod
    def empty(n_classes: int) -> "DFA":
        return DFA([[0] * n_classes], [False], 0)

    def complement(self) -> "DFA":
        return DFA(self.delta, [not a for a in self.accept], self.start)

    def is_empty_language(self) -> bool:
        seen = {self.start}
        queue = deque([self.start])
        while queue:
            s = queue.popleft()
            if self.accept[s]:
                return False
            for t in self.delta[s]:
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
        return True

    def shortest_word(self, table: ClassTable) -> str | None:
        if self.accept[self.start]:
            return ""

        def niceness(cls: int) -> tuple[int, int]:
            ch = table.representative(cls)
            if "a" <= ch <= "z":
                return (0, ord(ch))
            if "A" <= ch <= "Z":
                return (1, ord(ch))
            if "0" <= ch <= "9":
                return (2, ord(ch))
            if 0x20 < ord(ch) <= 0x7E:
                return (3, ord(ch))
            return (4, ord(ch))

        order = sorted(range(len(self.delta[0])), key=niceness)
        seen = {self.start}
        queue = deque([(self.start, "")])
        while queue:
            s, word = queue.popleft()
            for cls in order:
                t = self.delta[s][cls]
                if t in seen:
                    continue
                nxt = word + table.representative(cls)
                if self.accept[t]:
                    return nxt
                seen.add(t)
                queue.append((t, nxt))
        return None


def determinize(builder: Builder, frag: tuple[int, int], n_classes: int) -> DFA:
    start = builder.closure({frag[0]})
    index: dict[frozenset[int], int] = {start: 0}
    delta: list[list[int]] = []
    accept: list[bool] = []
    order = [start]
    pos = 0
    while pos < len(order):
        subset = order[pos]
        pos += 1
        row = []
        for cls in range(n_classes):
            nxt: set[int] = set()
            for s in subset:
                nxt |= builder.trans[s].get(cls, set())
            closed = builder.closure(nxt) if nxt else frozenset()
            if closed not in index:
                index[closed] = len(order)
                order.append(closed)
                if len(order) > MAX_DFA_STATES:
                    raise Unsupported("state blowup during determinization")
            row.append(index[closed])
        delta.append(row)
        accept.append(frag[1] in subset)
    return DFA(delta, accept, 0)


def product(a: DFA, b: DFA, mode: str) -> DFA:
    n_classes = len(a.delta[0]) if a.delta else 0
    index: dict[tuple[int, int], int] = {(a.start, b.start): 0}
    order = [(a.start, b.start)]
    delta: list[list[int]] = []
    accept: list[bool] = []
    pos = 0
    while pos < len(order):
        i, j = order[pos]
        pos += 1
        row = []
        for cls in range(n_classes):
            pair = (a.delta[i][cls], b.delta[j][cls])
            if pair not in index:
                index[pair] = len(order)
                order.append(pair)
                if len(order) > MAX_DFA_STATES:
                    raise Unsupported("state blowup during product")
            row.append(index[pair])
        delta.append(row)
        if mode == "and":
            accept.append(a.accept[i] and b.accept[j])
        else:
            accept.append(a.accept[i] or b.accept[j])
    return DFA(delta, accept, 0)


# --- translation ------------------------------------------------------------


def _lit(node: Node) -> str:
    if isinstance(node, StrLit):
        return node.value
    raise Unsupported("non-literal string argument")


def _is_var(node: Node) -> bool:
    return isinstance(node, Var)


class Translator:
    def __init__(self, table: ClassTable):
        self.table = table

    def regex_fragment(self, node: Node, b: Builder) -> tuple[int, int]:
        assert isinstance(node, App)
        op = node.op
        if op == "str.to.re":
            return b.f_lit(_lit(node.args[0]))
        if op == "re.range":
            lo, hi = _lit(node.args[0]), _lit(node.args[1])
            if len(lo) == 1 and len(hi) == 1 and lo <= hi:
                return b.f_classes(self.table.classes_in_range(lo, hi))
            return b.f_none()
        if op == "re.allchar":
            return b.f_classes(self.table.all_classes())
        if op == "re.none":
            return b.f_none()
        if op == "re.++":
            return b.f_concat([self.regex_fragment(a, b) for a in node.args])
        if op == "re.union":
            return b.f_union([self.regex_fragment(a, b) for a in node.args])
        if op == "re.*":
            return b.f_star(self.regex_fragment(node.args[0], b))
        if op == "re.+":
            inner = self.regex_fragment(node.args[0], b)
            rep = b.f_star(self.regex_fragment(node.args[0], b))
            return b.f_concat([inner, rep])
        if op == "re.opt":
            return b.f_union([b.f_empty_word(), self.regex_fragment(node.args[0], b)])
        if op == "re.inter":
            dfas = [self.regex_dfa(a) for a in node.args]
            acc = dfas[0]
            for d in dfas[1:]:
                acc = product(acc, d, "and")
            return b.f_dfa(acc)
        raise Unsupported(f"regex operator {op}")

    def regex_dfa(self, node: Node) -> DFA:
        b = Builder(self.table)
        frag = self.regex_fragment(node, b)
        return determinize(b, frag, self.table.count)

    def word_dfa(self, words: list[str]) -> DFA:
        b = Builder(self.table)
        frag = b.f_union([b.f_lit(w) for w in words]) if words else b.f_none()
        return determinize(b, frag, self.table.count)

    def pattern_dfa(self, before: bool, word: str, after: bool) -> DFA:
        b = Builder(self.table)
        parts = []
        if before:
            parts.append(b.f_star(b.f_classes(self.table.all_classes())))
        parts.append(b.f_lit(word))
        if after:
            parts.append(b.f_star(b.f_classes(self.table.all_classes())))
        return determinize(b, b.f_concat(parts), self.table.count)

    def length_dfa(self, op: str, k: int) -> DFA:
        # language of strings whose length satisfies `len <op> k`
        if op in ("<", "<=") and (k < 0 or (op == "<" and k == 0)):
            return DFA.empty(self.table.count)
        if op == "=" and k < 0:
            return DFA.empty(self.table.count)
        if op in (">", ">=") and k <= 0:
            if op == ">=" or k < 0:
                return DFA.universal(self.table.count)
        if k > MAX_LENGTH_BOUND:
            raise Unsupported("length bound too large")
        cap = max(k + 1, 1)
        n = self.table.count
        delta = []
        accept = []
        for i in range(cap + 1):
            nxt = min(i + 1, cap)
            delta.append([nxt] * n)
            if op == "=":
                accept.append(i == k)
            elif op == "<":
                accept.append(i < k)
            elif op == "<=":
                accept.append(i <= k)
            elif op == ">":
                accept.append(i > k)
            else:
                accept.append(i >= k)
        return DFA(delta, accept, 0)

    def bool_dfa(self, node: Node) -> DFA:
        n = self.table.count
        if isinstance(node, BoolLit):
            return DFA.universal(n) if node.value else DFA.empty(n)
        if not isinstance(node, App):
            raise Unsupported("bare boolean variable")
        op = node.op
        if op == "not":
            return self.bool_dfa(node.args[0]).complement()
        if op == "and":
            acc = self.bool_dfa(node.args[0])
            for a in node.args[1:]:
                acc = product(acc, self.bool_dfa(a), "and")
            return acc
        if op == "or":
            acc = self.bool_dfa(node.args[0])
            for a in node.args[1:]:
                acc = product(acc, self.bool_dfa(a), "or")
            return acc
        if op == "=>":
            acc = self.bool_dfa(node.args[-1])
            for a in reversed(node.args[:-1]):
                acc = product(self.bool_dfa(a).complement(), acc, "or")
            return acc
        if op == "ite":
            c = self.bool_dfa(node.args[0])
            t = self.bool_dfa(node.args[1])
            e = self.bool_dfa(node.args[2])
            return product(product(c, t, "and"), product(c.complement(), e, "and"), "or")
        if op in ("=", "distinct"):
            return self.equality_dfa(node)
        if op == "str.in.re":
            if not _is_var(node.args[0]):
                raise Unsupported("membership of a compound string term")
            return self.regex_dfa(node.args[1])
        if op == "str.contains":
            hay, needle = node.args
            if _is_var(hay):
                return self.pattern_dfa(True, _lit(needle), True)
            if _is_var(needle):
                lit = _lit(hay)
                factors = sorted({lit[i:j] for i in range(len(lit) + 1) for j in range(i, len(lit) + 1)})
                return self.word_dfa(factors)
            return self.constant(_lit(needle) in _lit(hay))
        if op == "str.prefixof":
            pre, full = node.args
            if _is_var(full):
                return self.pattern_dfa(False, _lit(pre), True)
            if _is_var(pre):
                lit = _lit(full)
                return self.word_dfa([lit[:i] for i in range(len(lit) + 1)])
            return self.constant(_lit(full).startswith(_lit(pre)))
        if op == "str.suffixof":
            suf, full = node.args
            if _is_var(full):
                return self.pattern_dfa(True, _lit(suf), False)
            if _is_var(suf):
                lit = _lit(full)
                return self.word_dfa([lit[i:] for i in range(len(lit) + 1)])
            return self.constant(_lit(full).endswith(_lit(suf)))
        if op in ("<=", "<", ">=", ">"):
            return self.int_comparison(op, node.args)
        raise Unsupported(f"operator {op}")

    def constant(self, value: bool) -> DFA:
        return DFA.universal(self.table.count) if value else DFA.empty(self.table.count)

    def equality_dfa(self, node: App) -> DFA:
        args = node.args
        sorts = {self._arg_kind(a) for a in args}
        if sorts == {"string"}:
            if node.op == "distinct" and len(args) > 2:
                raise Unsupported("n-ary distinct over strings")
            pieces = []
            for x, y in zip(args, args[1:]):
                pieces.append(self.string_eq(x, y))
            acc = pieces[0]
            for p in pieces[1:]:
                acc = product(acc, p, "and")
            return acc.complement() if node.op == "distinct" else acc
        if sorts == {"int"}:
            if len(args) != 2:
                raise Unsupported("n-ary integer equality")
            d = self.int_comparison("=", args)
            return d.complement() if node.op == "distinct" else d
        if sorts == {"bool"}:
            if len(args) != 2:
                raise Unsupported("n-ary boolean equality")
            a, b = (self.bool_dfa(x) for x in args)
            iff = product(product(a, b, "and"), product(a.complement(), b.complement(), "and"), "or")
            return iff.complement() if node.op == "distinct" else iff
        raise Unsupported("mixed or unsupported equality")

    def _arg_kind(self, node: Node) -> str:
        if isinstance(node, (StrLit, Var)):
            return "string"
        if isinstance(node, IntLit):
            return "int"
        if isinstance(node, BoolLit):
            return "bool"
        if isinstance(node, App):
            if node.op == "ite":
                return self._arg_kind(node.args[1])
            if node.op in ("str.len", "str.indexof", "+", "-", "*"):
                return "int"
            if node.op in ("str.++", "str.at", "str.substr", "str.replace"):
                return "string"
            return "bool"
        raise Unsupported("unknown argument kind")

    def string_eq(self, x: Node, y: Node) -> DFA:
        if _is_var(x) and _is_var(y):
            return DFA.universal(self.table.count)
        if _is_var(x):
            return self.word_dfa([_lit(y)])
        if _is_var(y):
            return self.word_dfa([_lit(x)])
        return self.constant(_lit(x) == _lit(y))

    def int_comparison(self, op: str, args: tuple[Node, ...]) -> DFA:
        if len(args) != 2:
            raise Unsupported("chained integer comparison")
        a, b = args

        def as_len(node: Node) -> bool:
            return (
                isinstance(node, App)
                and node.op == "str.len"
                and _is_var(node.args[0])
            )

        if as_len(a) and isinstance(b, IntLit):
            return self.length_dfa(op, b.value)
        if isinstance(a, IntLit) and as_len(b):
            flipped = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "="}[op]
            return self.length_dfa(flipped, a.value)
        if isinstance(a, IntLit) and isinstance(b, IntLit):
            table = {
                "<": a.value < b.value,
                "<=": a.value <= b.value,
                ">": a.value > b.value,
                ">=": a.value >= b.value,
                "=": a.value == b.value,
            }
            return self.constant(table[op])
        raise Unsupported("integer arithmetic beyond length-vs-constant")


# --- script driver ----------------------------------------------------------


def solve_script(text: str) -> tuple[str, str | None]:
    """Returns (status, witness) where status is sat/unsat/unknown."""
    try:
        forms = read_all_sexps(text)
    except CheckerSyntaxError as exc:
        return "unknown", f"parse error: {exc.message}"

    var: str | None = None
    asserts: list[Node] = []
    for form in forms:
        if not isinstance(form, SList) or not form.items:
            continue
        head = form.items[0]
        if not isinstance(head, Atom):
            continue
        cmd = head.text
        if cmd in ("set-logic", "set-option", "check-sat", "get-model", "exit", "echo"):
            continue
        if cmd in ("declare-const", "declare-fun"):
            if len(form.items) >= 2 and isinstance(form.items[1], Atom):
                name = form.items[1].text
                if var is not None and var != name:
                    return "unknown", "more than one declared variable"
                var = name
            continue
        if cmd == "assert":
            if len(form.items) != 2:
                return "unknown", "malformed assert"
            try:
                expr = build_expr(form.items[1], var)
            except CheckerSyntaxError as exc:
                return "unknown", f"unsupported assertion: {exc.message}"
            asserts.append(expr.root)
            continue
        return "unknown", f"unsupported command {cmd}"

    boundaries: set[int] = set()
    for node in asserts:
        collect_boundaries(node, boundaries)
    table = ClassTable(boundaries)
    translator = Translator(table)
    try:
        dfa = DFA.universal(table.count)
        for node in asserts:
            dfa = product(dfa, translator.bool_dfa(node), "and")
    except Unsupported as exc:
        return "unknown", str(exc)
    witness = dfa.shortest_word(table)
    if witness is None:
        return "unsat", None
    return "sat", witness


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 1:
        print("usage: strsat-minisolve FILE.smt2", file=sys.stderr)
        return 2
    try:
        with open(args[0], encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read script: {exc}", file=sys.stderr)
        return 2
    status, detail = solve_script(text)
    print(status)
    if status == "sat" and "(get-model)" in text:
        var = "s"
        for form in read_all_sexps(text):
            if (
                isinstance(form, SList)
                and len(form.items) >= 2
                and isinstance(form.items[0], Atom)
                and form.items[0].text in ("declare-const", "declare-fun")
                and isinstance(form.items[1], Atom)
            ):
                var = form.items[1].text
                break
        print("(")
        print(f'  (define-fun {var} () String "{escape_string(detail or "")}")')
        print(")")
    elif status == "unknown" and detail:
        print(f"; {detail}", file=sys.stderr)
    sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
