"""Reader and writer for query files.

Example::

    inputs: r [0, 100], rv [-200, 200];
    outputs: a [-100, 100];
    falsify: r > 0 & 200*r >= rv^2 & !(a = -100)

``#`` starts a comment that runs to the end of the line.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from ._rational import fmt
from .formula import (And, ArgmaxIs, Atom, Formula, Iff, Implies, Not, Or,
                      QuerySpec, to_text)
from .poly import Poly


class QuerySyntaxError(ValueError):
    """Raised for malformed query files; carries a 1-based line and column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__("line %d, column %d: %s" % (line, col, message))
        self.message = message
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<kw>(?:inputs|outputs|falsify|prove)\s*:)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9']*)
  | (?P<op><->|->|<=|>=|!=|==|[<>=!&|()+\-*/^\[\],;])
""", re.VERBOSE)


class _Tok:
    __slots__ = ("kind", "text", "pos", "line", "col")

    def __init__(self, kind, text, pos, line, col):
        self.kind, self.text, self.pos, self.line, self.col = kind, text, pos, line, col

    def __repr__(self):
        return "%s(%r)" % (self.kind, self.text)


def _tokenize(text: str) -> List[_Tok]:
    toks: List[_Tok] = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise QuerySyntaxError("unexpected character %r" % text[pos], line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            if kind == "kw":
                s = re.sub(r"\s+", "", s)
            elif kind == "op" and s == "==":
                s = "="
            toks.append(_Tok(kind, s, pos, line, pos - line_start + 1))
        nl = m.group().count("\n")
        if nl:
            line += nl
            line_start = m.start() + m.group().rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", pos, line, pos - line_start + 1))
    return toks


class _Fail(Exception):
    """Internal backtracking signal."""

    def __init__(self, tok: _Tok, message: str):
        self.tok = tok
        self.message = message


_RELS = ("<", "<=", "=", "!=", ">=", ">")


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.declared: Dict[str, Tuple[Fraction, Fraction]] = {}
        self.outputs: Tuple[str, ...] = ()
        self.furthest: Optional[_Fail] = None

    # helpers --------------------------------------------------------------
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, message: str, tok: Optional[_Tok] = None):
        e = _Fail(tok or self.tok, message)
        if self.furthest is None or e.tok.pos >= self.furthest.tok.pos:
            self.furthest = e
        raise e

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "kw"):
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            self.fail("expected %r, found %s" % (text, self._describe(self.tok)))

    @staticmethod
    def _describe(tok: _Tok) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def hard(self, fn):
        """Run ``fn`` turning backtracking failures into user errors."""
        try:
            return fn()
        except _Fail:
            e = self.furthest
            raise QuerySyntaxError(e.message, e.tok.line, e.tok.col) from None

    # file -----------------------------------------------------------------
    def parse_file(self) -> QuerySpec:
        self.hard(lambda: self.expect("inputs:"))
        inputs = self.hard(self.declist)
        self.hard(lambda: self.expect(";"))
        self.hard(lambda: self.expect("outputs:"))
        outputs = self.hard(self.declist)
        self.hard(lambda: self.expect(";"))
        self.outputs = tuple(outputs)
        tok = self.tok
        if self.accept("falsify:"):
            mode = "falsify"
        elif self.accept("prove:"):
            mode = "prove"
        else:
            raise QuerySyntaxError("expected 'falsify:' or 'prove:', found %s" % self._describe(tok),
                                   tok.line, tok.col)
        f = self.hard(self.expr)
        self.accept(";")
        if self.tok.kind != "eof":
            e = self.furthest if (self.furthest and self.furthest.tok.pos >= self.tok.pos) else None
            if e is not None:
                raise QuerySyntaxError(e.message, e.tok.line, e.tok.col)
            raise QuerySyntaxError("unexpected %s" % self._describe(self.tok), self.tok.line, self.tok.col)
        both = set(inputs) & set(outputs)
        if both:
            raise QuerySyntaxError("variable declared as input and output: %s" % ", ".join(sorted(both)),
                                   1, 1)
        return QuerySpec(f, tuple(inputs), tuple(outputs), dict(self.declared), mode)

    def declist(self) -> List[str]:
        names = [self.decl()]
        while self.accept(","):
            names.append(self.decl())
        return names

    def decl(self) -> str:
        tok = self.tok
        if tok.kind != "ident":
            self.fail("expected a variable name, found %s" % self._describe(tok))
        name = tok.text
        if name == "argmax_out":
            self.fail("'argmax_out' is reserved", tok)
        if name in self.declared:
            self.fail("variable %r declared twice" % name, tok)
        self.i += 1
        if self.tok.text != "[":
            self.fail("missing range for variable %r" % name)
        self.expect("[")
        lo = self.signed_number()
        self.expect(",")
        hi = self.signed_number()
        self.expect("]")
        if lo > hi:
            self.fail("empty range [%s, %s] for %r" % (fmt(lo), fmt(hi), name), tok)
        self.declared[name] = (lo, hi)
        return name

    def signed_number(self) -> Fraction:
        neg = False
        while self.tok.text in ("-", "+") and self.tok.kind == "op":
            neg ^= self.tok.text == "-"
            self.i += 1
        v = self.number()
        if self.accept("/"):
            d = self.number()
            if d == 0:
                self.fail("division by zero")
            v = v / d
        return -v if neg else v

    def number(self) -> Fraction:
        tok = self.tok
        if tok.kind != "num":
            self.fail("expected a number, found %s" % self._describe(tok))
        self.i += 1
        return Fraction(tok.text)

    # formulas ---------------------------------------------------------------
    def expr(self) -> Formula:
        lhs = self.implication()
        while self.accept("<->"):
            lhs = Iff(lhs, self.implication())
        return lhs

    def implication(self) -> Formula:
        lhs = self.disjunction()
        if self.accept("->"):
            return Implies(lhs, self.implication())
        return lhs

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.accept("|"):
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(parts)

    def conjunction(self) -> Formula:
        parts = [self.unary()]
        while self.accept("&"):
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(parts)

    def unary(self) -> Formula:
        if self.accept("!"):
            return Not(self.unary())
        if self.tok.text == "(":
            # either a parenthesised formula or a comparison starting with "("
            save = self.i
            try:
                return self.comparison()
            except _Fail:
                self.i = save
            self.expect("(")
            f = self.expr()
            self.expect(")")
            return f
        return self.comparison()

    def comparison(self) -> Formula:
        tok = self.tok
        if tok.kind == "ident" and tok.text == "argmax_out":
            self.i += 1
            self.expect("=")
            itok = self.tok
            if itok.kind != "num" or not re.fullmatch(r"\d+", itok.text):
                self.fail("argmax_out expects an integer output index")
            self.i += 1
            k = int(itok.text)
            if not self.outputs:
                self.fail("argmax_out needs declared outputs", tok)
            if not 1 <= k <= len(self.outputs):
                self.fail("argmax index %d out of range 1..%d" % (k, len(self.outputs)), itok)
            return ArgmaxIs(k, self.outputs)
        lhs = self.poly()
        rtok = self.tok
        if rtok.kind != "op" or rtok.text not in _RELS:
            self.fail("expected a comparison operator, found %s" % self._describe(rtok))
        self.i += 1
        rhs = self.poly()
        return Atom(lhs - rhs, rtok.text)

    # polynomials ------------------------------------------------------------
    def poly(self) -> Poly:
        neg = False
        if self.tok.text in ("-", "+") and self.tok.kind == "op":
            neg = self.tok.text == "-"
            self.i += 1
        acc = self.product()
        if neg:
            acc = -acc
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            t = self.product()
            acc = acc + t if op == "+" else acc - t
        return acc

    def product(self) -> Poly:
        acc = self.power()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.tok.text
            optok = self.tok
            self.i += 1
            rhs = self.power()
            if op == "*":
                acc = acc * rhs
            else:
                if not rhs.is_constant():
                    self.fail("division is only allowed by constants", optok)
                d = rhs.constant()
                if d == 0:
                    self.fail("division by zero", optok)
                acc = acc.scale(1 / d)
        return acc

    def power(self) -> Poly:
        base = self.factor()
        if self.accept("^"):
            etok = self.tok
            if etok.kind != "num" or not re.fullmatch(r"\d+", etok.text):
                self.fail("exponent must be a non-negative integer")
            self.i += 1
            base = base ** int(etok.text)
        return base

    def factor(self) -> Poly:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Poly.const(Fraction(tok.text))
        if tok.kind == "ident":
            if tok.text not in self.declared:
                self.fail("undeclared variable %r" % tok.text)
            self.i += 1
            return Poly.var(tok.text)
        if self.accept("("):
            p = self.poly()
            self.expect(")")
            return p
        if tok.kind == "op" and tok.text == "-":
            self.i += 1
            return -self.power()
        self.fail("expected a term, found %s" % self._describe(tok))


def parse(text: str) -> QuerySpec:
    """Parse query-file text into a :class:`QuerySpec`."""
    return _Parser(text).parse_file()


def parse_formula(text: str, ranges: Dict[str, Tuple], outputs=()) -> Formula:
    """Parse a bare formula against already-declared variables (used in tests)."""
    p = _Parser(text)
    p.declared = {k: tuple(map(Fraction, v)) for k, v in ranges.items()}
    p.outputs = tuple(outputs)
    f = p.hard(p.expr)
    if p.tok.kind != "eof":
        raise QuerySyntaxError("unexpected %s" % p._describe(p.tok), p.tok.line, p.tok.col)
    return f


def load(path) -> QuerySpec:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def format_query(spec: QuerySpec) -> str:
    """Render a QuerySpec back into query-file syntax."""
    def decl(v):
        lo, hi = spec.ranges[v]
        return "%s [%s, %s]" % (v, fmt(lo), fmt(hi))

    return "inputs: %s;\noutputs: %s;\n%s: %s\n" % (
        ", ".join(decl(v) for v in spec.inputs),
        ", ".join(decl(v) for v in spec.outputs),
        spec.mode,
        to_text(spec.formula),
    )
