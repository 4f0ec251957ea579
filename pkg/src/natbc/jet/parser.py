"""Recursive-descent parser for jet expressions.

Grammar::

    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := '-' factor | base ('^' exponent)?
    exponent := '-'? integer | '(' '-'? number ('/' number)? ')'
    base     := number | ident | '(' expr ')' | fn '(' expr ')'

``u_x^2/2`` therefore reads as ``(u_x^2)/2``; fractional exponents need
parentheses, e.g. ``(1 + u_x^2)^(-3/2)``.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .expr import UNARY_FUNCTIONS, Constant, Expr, Var, add, div, mul, neg, power, unary
from .space import JetNameError, JetSpace

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


class ParseError(ValueError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}")


def _number(text: str):
    if re.fullmatch(r"\d+", text):
        return Fraction(int(text))
    return float(text)


class _Parser:
    def __init__(self, source: str, space: JetSpace):
        self.src = source
        self.space = space
        self.tokens = []
        pos = 0
        while pos < len(source):
            if source[pos:].strip() == "":
                break
            m = _TOKEN.match(source, pos)
            if not m or m.end() == pos:
                raise ParseError(f"unexpected character {source[pos:].lstrip()[:1]!r}", pos, source)
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.k = 0

    def peek(self):
        return self.tokens[self.k] if self.k < len(self.tokens) else (None, None, len(self.src))

    def take(self):
        t = self.peek()
        self.k += 1
        return t

    def expect(self, op):
        kind, text, pos = self.take()
        if text != op or kind != "op":
            raise ParseError(f"expected {op!r}, found {text!r}", pos, self.src)

    def parse(self) -> Expr:
        if not self.tokens:
            raise ParseError("empty expression", 0, self.src)
        e = self.expr()
        kind, text, pos = self.peek()
        if kind is not None:
            raise ParseError(f"unexpected {text!r}", pos, self.src)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            t = self.term()
            e = add(e, t) if op == "+" else add(e, neg(t))
        return e

    def term(self):
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            kind, op, pos = self.take()
            f = self.factor()
            if op == "*":
                e = mul(e, f)
            else:
                try:
                    e = div(e, f)
                except ZeroDivisionError:
                    raise ParseError("division by zero literal", pos, self.src) from None
        return e

    def factor(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return neg(self.factor())
        b = self.base()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            p = self.exponent()
            b = power(b, p)
        return b

    def exponent(self) -> Fraction:
        kind, text, pos = self.peek()
        if text == "(":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            num = self._exp_number()
            if self.peek()[1] == "/":
                self.take()
                den = self._exp_number()
                if den == 0:
                    raise ParseError("zero denominator in exponent", pos, self.src)
                num = num / den
            self.expect(")")
            return sign * num
        sign = 1
        if text == "-":
            self.take()
            sign = -1
        return sign * self._exp_number()

    def _exp_number(self) -> Fraction:
        kind, text, pos = self.take()
        if kind != "num":
            raise ParseError(f"expected a number in exponent, found {text!r}", pos, self.src)
        return Fraction(text)

    def base(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Constant(_number(text))
        if kind == "id":
            if text in UNARY_FUNCTIONS and self.peek()[1] == "(":
                self.take()
                arg = self.expr()
                self.expect(")")
                return unary(text, arg)
            try:
                return Var(self.space.resolve(text))
            except JetNameError as exc:
                raise ParseError(str(exc), pos, self.src) from None
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind is None:
            raise ParseError("unexpected end of input", pos, self.src)
        raise ParseError(f"unexpected {text!r}", pos, self.src)


def parse(source: str, space: JetSpace | None = None, *, n: int = 1, m: int = 1, r: int = 1) -> Expr:
    """Parse ``source`` into an Expr over the given jet space (or ``JetSpace(n, m, r)``)."""
    if space is None:
        space = JetSpace(n, m, r)
    return _Parser(source, space).parse()
