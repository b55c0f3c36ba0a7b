r"""Text syntax for lattice expressions.

Grammar (lowest precedence first, all binary operators left-associative):

    expr    := addsub (("\/" | "/\") addsub)*
    addsub  := term (("+" | "-") term)*
    term    := factor ("*" factor)*        at most one non-numeric factor
    factor  := "-" factor | number | atom
             | "abs(" expr ")" | "pos(" expr ")" | "neg(" expr ")"
             | "(" expr ")"
    atom    := "d(e" integer ")" | "d([" number ("," number)* "])"

A bare numeric term is rejected: constants are not positively
homogeneous, so they do not belong to the expression space.  Unary
minus is sugar for multiplication by -1.

The ambient dimension is resolved after parsing: explicit coefficient
lists must all share one length, which becomes n and must cover every
basis index; with no lists, n is the largest basis index mentioned.
pos(...)/neg(...) expand to joins against the zero atom of that
dimension.
"""

from __future__ import annotations

import re

from . import expressions as ex
from .errors import ParseError

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<op>\\/|/\\|[+\-*(),\[\]])
  | (?P<word>[A-Za-z_][A-Za-z_0-9]*)
    """,
    re.VERBOSE,
)


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"_Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def _tokenize(src: str):
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unrecognized character {src[pos]!r}", line, col)
        text = m.group(0)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def bump(self) -> _Token:
        t = self.cur
        self.i += 1
        return t

    def fail(self, message, expected=None):
        raise ParseError(message, self.cur.line, self.cur.col, expected)

    def expect(self, text):
        if self.cur.text != text:
            self.fail(f"found {self.cur.text or 'end of input'!r}", expected=repr(text))
        return self.bump()

    # Provisional nodes are plain tuples; dimension is resolved later.
    def parse_expr(self):
        node = self.parse_addsub()
        run_op, run = None, None
        while self.cur.text in ("\\/", "/\\"):
            op = self.bump().text
            rhs = self.parse_addsub()
            if op == run_op:
                run.append(rhs)
            else:
                kind = "join" if op == "\\/" else "meet"
                run = [node, rhs]
                node = (kind, run)
                run_op = op
        return node

    def parse_addsub(self):
        first = self.parse_term()
        terms = [first]
        while self.cur.text in ("+", "-"):
            op = self.bump().text
            t = self.parse_term()
            terms.append(t if op == "+" else ("scale", -1.0, t))
        if len(terms) == 1:
            return first
        return ("sum", terms)

    def parse_term(self):
        where = self.cur
        factors = [self.parse_factor()]
        while self.cur.text == "*":
            self.bump()
            factors.append(self.parse_factor())
        coeff = 1.0
        body = None
        for f in factors:
            if isinstance(f, tuple) and f[0] == "number":
                coeff *= f[1]
            elif body is None:
                body = f
            else:
                self.fail("a term may contain at most one non-numeric factor")
        if body is None:
            raise ParseError(
                "term contains only numeric factors; constants are not expressions",
                where.line,
                where.col,
            )
        if coeff == 1.0 and len(factors) == 1:
            return body
        return ("scale", coeff, body)

    def parse_factor(self):
        t = self.cur
        if t.text == "-":
            self.bump()
            inner = self.parse_factor()
            if isinstance(inner, tuple) and inner[0] == "number":
                return ("number", -inner[1])
            return ("scale", -1.0, inner)
        if t.kind == "number":
            self.bump()
            return ("number", float(t.text))
        if t.text == "(":
            self.bump()
            node = self.parse_expr()
            self.expect(")")
            return node
        if t.kind == "word":
            if t.text in ("abs", "pos", "neg"):
                self.bump()
                self.expect("(")
                node = self.parse_expr()
                self.expect(")")
                return (t.text, node)
            if t.text == "d":
                return self.parse_atom()
            self.fail(f"unknown name {t.text!r}", expected="'abs', 'pos', 'neg' or 'd'")
        self.fail(
            f"found {t.text or 'end of input'!r}",
            expected="a number, 'd(...)', 'abs(', 'pos(', 'neg(', '-' or '('",
        )

    def parse_atom(self):
        self.expect("d")
        self.expect("(")
        t = self.cur
        if t.kind == "word" and re.fullmatch(r"e\d+", t.text):
            self.bump()
            idx = int(t.text[1:])
            if idx < 1:
                raise ParseError("basis index must be at least 1", t.line, t.col)
            self.expect(")")
            return ("basis", idx, (t.line, t.col))
        if t.text == "[":
            self.bump()
            values = [self.parse_signed_number()]
            while self.cur.text == ",":
                self.bump()
                values.append(self.parse_signed_number())
            self.expect("]")
            self.expect(")")
            return ("list", values)
        self.fail(f"found {t.text or 'end of input'!r}", expected="'e<k>' or '['")

    def parse_signed_number(self) -> float:
        sign = 1.0
        while self.cur.text == "-":
            self.bump()
            sign = -sign
        t = self.cur
        if t.kind != "number":
            self.fail(f"found {t.text or 'end of input'!r}", expected="a number")
        self.bump()
        return sign * float(t.text)


def _scan(node, max_basis, list_lens):
    kind = node[0]
    if kind == "basis":
        return max(max_basis, node[1]), list_lens
    if kind == "list":
        return max_basis, list_lens + [len(node[1])]
    if kind == "scale":
        return _scan(node[2], max_basis, list_lens)
    if kind in ("sum", "join", "meet"):
        for c in node[1]:
            max_basis, list_lens = _scan(c, max_basis, list_lens)
        return max_basis, list_lens
    if kind in ("abs", "pos", "neg"):
        return _scan(node[1], max_basis, list_lens)
    raise AssertionError(kind)


def _build(node, n: int) -> ex.LatticeExpr:
    kind = node[0]
    if kind == "basis":
        return ex.generator(node[1], n)
    if kind == "list":
        return ex.Atom(node[1])
    if kind == "scale":
        return ex.Scale(node[1], _build(node[2], n))
    if kind == "sum":
        return ex.Sum(*[_build(c, n) for c in node[1]])
    if kind == "join":
        return ex.Join(*[_build(c, n) for c in node[1]])
    if kind == "meet":
        return ex.Meet(*[_build(c, n) for c in node[1]])
    if kind == "abs":
        return ex.Abs(_build(node[1], n))
    if kind == "pos":
        return ex.pos_part(_build(node[1], n))
    if kind == "neg":
        return ex.neg_part(_build(node[1], n))
    raise AssertionError(kind)


def parse(src: str, n: int | None = None) -> ex.LatticeExpr:
    """Parse source text into a lattice expression.

    n forces the ambient dimension; by default it is inferred (see the
    module docstring).  Raises ParseError with line/column on bad input.
    """
    tokens = _tokenize(src)
    p = _Parser(tokens)
    node = p.parse_expr()
    if p.cur.kind != "eof":
        p.fail(f"trailing input starting at {p.cur.text!r}")

    max_basis, list_lens = _scan(node, 0, [])
    if list_lens:
        first = list_lens[0]
        for length in list_lens[1:]:
            if length != first:
                raise ParseError(
                    f"coefficient lists disagree on dimension: {first} vs {length}", 1, 1
                )
        inferred = first
        if max_basis > inferred:
            raise ParseError(
                f"basis index {max_basis} exceeds the list dimension {inferred}", 1, 1
            )
    else:
        inferred = max_basis
    if n is not None:
        if n < max_basis:
            raise ParseError(f"basis index {max_basis} exceeds requested dimension {n}", 1, 1)
        if list_lens and n != inferred:
            raise ParseError(
                f"requested dimension {n} conflicts with coefficient lists of length {inferred}",
                1,
                1,
            )
        inferred = n
    if inferred < 1:
        raise ParseError("expression mentions no atoms; dimension undetermined", 1, 1)
    return _build(node, inferred)
