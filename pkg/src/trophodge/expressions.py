"""Tiny expression grammar for edge-coefficient functions.

The grammar covers real literals, the chart variable ``x``, the operators
``+ - * / ^`` (integer powers only), unary minus, ``exp`` and parentheses.
That is enough to write every coefficient used in this package, e.g. the
Fubini-Study weight ``2*exp(2*x)/(1+exp(2*x))^2``, while keeping symbolic
differentiation exact and trivial.

Evaluation is numpy-vectorized: ``node.eval(x)`` accepts floats or arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = ["Expression", "ExpressionError", "parse_expression", "to_source"]


class ExpressionError(ValueError):
    """Syntax or name error in an expression, with a byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class Expression:
    """Base node of the expression tree."""

    def eval(self, x):
        raise NotImplementedError

    def diff(self) -> "Expression":
        raise NotImplementedError

    def __call__(self, x):
        return self.eval(x)


@dataclass(frozen=True)
class Num(Expression):
    value: float

    def eval(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value) if np.ndim(x) else self.value

    def diff(self):
        return Num(0.0)


@dataclass(frozen=True)
class Var(Expression):
    def eval(self, x):
        return np.asarray(x, dtype=float) if np.ndim(x) else float(x)

    def diff(self):
        return Num(1.0)


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression

    def eval(self, x):
        return -self.arg.eval(x)

    def diff(self):
        return _neg(self.arg.diff())


@dataclass(frozen=True)
class Add(Expression):
    left: Expression
    right: Expression

    def eval(self, x):
        return self.left.eval(x) + self.right.eval(x)

    def diff(self):
        return _add(self.left.diff(), self.right.diff())


@dataclass(frozen=True)
class Sub(Expression):
    left: Expression
    right: Expression

    def eval(self, x):
        return self.left.eval(x) - self.right.eval(x)

    def diff(self):
        return _sub(self.left.diff(), self.right.diff())


@dataclass(frozen=True)
class Mul(Expression):
    left: Expression
    right: Expression

    def eval(self, x):
        return self.left.eval(x) * self.right.eval(x)

    def diff(self):
        return _add(_mul(self.left.diff(), self.right), _mul(self.left, self.right.diff()))


@dataclass(frozen=True)
class Div(Expression):
    left: Expression
    right: Expression

    def eval(self, x):
        return self.left.eval(x) / self.right.eval(x)

    def diff(self):
        num = _sub(_mul(self.left.diff(), self.right), _mul(self.left, self.right.diff()))
        return Div(num, Pow(self.right, 2))


@dataclass(frozen=True)
class Pow(Expression):
    base: Expression
    exponent: int

    def eval(self, x):
        return self.base.eval(x) ** self.exponent

    def diff(self):
        if self.exponent == 0:
            return Num(0.0)
        inner = self.base.diff()
        outer = _mul(Num(float(self.exponent)), _pow(self.base, self.exponent - 1))
        return _mul(outer, inner)


@dataclass(frozen=True)
class Exp(Expression):
    arg: Expression

    def eval(self, x):
        return np.exp(self.arg.eval(x))

    def diff(self):
        return _mul(self, self.arg.diff())


def _is_zero(e: Expression) -> bool:
    return isinstance(e, Num) and e.value == 0.0


def _is_one(e: Expression) -> bool:
    return isinstance(e, Num) and e.value == 1.0


def _neg(e):
    if isinstance(e, Num):
        return Num(-e.value)
    return Neg(e)


def _add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return Add(a, b)


def _sub(a, b):
    if _is_zero(b):
        return a
    if _is_zero(a):
        return _neg(b)
    return Sub(a, b)


def _mul(a, b):
    if _is_zero(a) or _is_zero(b):
        return Num(0.0)
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    return Mul(a, b)


def _pow(base, n):
    if n == 0:
        return Num(1.0)
    if n == 1:
        return base
    return Pow(base, n)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, value, pos = self.peek()
        if kind != "op" or value != op:
            raise ExpressionError(f"expected {op!r}", pos)
        return self.advance()

    def parse(self) -> Expression:
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "eof":
            raise ExpressionError(f"unexpected trailing input {value!r}", pos)
        return node

    def expr(self) -> Expression:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                rhs = self.term()
                node = Add(node, rhs) if value == "+" else Sub(node, rhs)
            else:
                return node

    def term(self) -> Expression:
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                rhs = self.unary()
                node = Mul(node, rhs) if value == "*" else Div(node, rhs)
            else:
                return node

    def unary(self) -> Expression:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return _pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        # Integer powers only; a '^' chain associates to the right.
        sign = 1
        kind, value, pos = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            sign = -1
            kind, value, pos = self.peek()
        if kind != "num" or any(c in value for c in ".eE"):
            raise ExpressionError("exponent must be an integer literal", pos)
        self.advance()
        n = sign * int(value)
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            n = n ** self.exponent()
        return n

    def atom(self) -> Expression:
        kind, value, pos = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "name":
            self.advance()
            if value == "x":
                return Var()
            if value == "exp":
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Exp(arg)
            raise ExpressionError(f"unknown identifier {value!r}", pos)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionError(f"expected a value, found {value!r}" if value else "unexpected end of input", pos)


def parse_expression(text: str) -> Expression:
    """Parse ``text`` into an expression tree.

    Raises ExpressionError with the byte offset of the first problem.
    """
    return _Parser(text).parse()


def to_source(node: Expression) -> str:
    """Print a tree back to grammar source (round-trips through the parser)."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        return f"-({to_source(node.arg)})"
    if isinstance(node, Add):
        return f"({to_source(node.left)}+{to_source(node.right)})"
    if isinstance(node, Sub):
        return f"({to_source(node.left)}-{to_source(node.right)})"
    if isinstance(node, Mul):
        return f"({to_source(node.left)}*{to_source(node.right)})"
    if isinstance(node, Div):
        return f"({to_source(node.left)}/{to_source(node.right)})"
    if isinstance(node, Pow):
        # the base gets its own parentheses: '^' binds tighter than
        # unary minus, so -(x)^2 would reparse as -(x^2)
        if node.exponent < 0:
            return f"(({to_source(node.base)})^-{-node.exponent})"
        return f"(({to_source(node.base)})^{node.exponent})"
    if isinstance(node, Exp):
        return f"exp({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")
