"""Arithmetic expressions in ``x`` and ``y`` for data functions.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | primary
    primary := NUMBER | 'x' | 'y' | 'pi' | NAME '(' args ')' | '(' expr ')'

Functions: sin cos exp log abs sqrt (one argument), min max (two or more).
Evaluation is vectorized over numpy arrays.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

UNARY_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log,
               "abs": np.abs, "sqrt": np.sqrt}
VARIADIC_FUNCS = {"min": np.minimum, "max": np.maximum}

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)"
                    r"|(?P<op>[-+*/(),]))")


class ExpressionError(ValueError):
    """Parse or evaluation error; ``offset`` is a byte offset into the source."""

    def __init__(self, message: str, offset: int | None = None, source: str | None = None):
        self.offset = offset
        self.source = source
        where = "" if offset is None else f" at offset {offset}"
        super().__init__(f"{message}{where}")


@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        return repr(self.value)

    def eval(self, x, y):
        return np.full(np.broadcast(x, y).shape, self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name

    def eval(self, x, y):
        if self.name == "pi":
            return np.full(np.broadcast(x, y).shape, np.pi)
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return (x if self.name == "x" else y).copy()


@dataclass(frozen=True)
class Neg:
    operand: object

    def __str__(self):
        return f"(-{self.operand})"

    def eval(self, x, y):
        return -self.operand.eval(x, y)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"

    def eval(self, x, y):
        a = self.left.eval(x, y)
        b = self.right.eval(x, y)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if np.any(b == 0):
            raise ExpressionError("division by zero")
        return a / b


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple

    def __str__(self):
        return f"{self.name}({', '.join(str(a) for a in self.args)})"

    def eval(self, x, y):
        vals = [a.eval(x, y) for a in self.args]
        if self.name in VARIADIC_FUNCS:
            out = vals[0]
            for v in vals[1:]:
                out = VARIADIC_FUNCS[self.name](out, v)
            return out
        v = vals[0]
        if self.name == "log" and np.any(v <= 0):
            raise ExpressionError("log of a nonpositive value")
        if self.name == "sqrt" and np.any(v < 0):
            raise ExpressionError("sqrt of a negative value")
        return UNARY_FUNCS[self.name](v)


class Expression:
    """Parsed expression; callable as ``expr(x, y)``."""

    def __init__(self, tree, source: str):
        self.tree = tree
        self.source = source

    def __call__(self, x, y):
        with np.errstate(all="ignore"):
            return self.tree.eval(x, y)

    def __str__(self):
        return str(self.tree)

    def __repr__(self):
        return f"Expression({self.source!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)


def _tokenize(text: str):
    tokens = []
    pos = 0
    raw = text.encode("utf-8")
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionError(f"unexpected character {text[start]!r}",
                                  len(text[:start].encode("utf-8")), text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), len(text[:start].encode("utf-8"))))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.take()
        if val != value:
            what = "end of input" if kind == "end" else repr(val)
            if value == ")":
                raise ExpressionError(f"unbalanced parentheses: expected ')' but found {what}", off, self.text)
            raise ExpressionError(f"expected {value!r} but found {what}", off, self.text)

    def parse(self):
        tree = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            if val == ")":
                raise ExpressionError("unbalanced parentheses: unmatched ')'", off, self.text)
            raise ExpressionError(f"unexpected token {val!r}", off, self.text)
        return tree

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.primary()

    def primary(self):
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in ("x", "y", "pi"):
                return Var(val)
            if val in UNARY_FUNCS or val in VARIADIC_FUNCS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if val in UNARY_FUNCS and len(args) != 1:
                    raise ExpressionError(f"{val} takes one argument, got {len(args)}", off, self.text)
                if val in VARIADIC_FUNCS and len(args) < 2:
                    raise ExpressionError(f"{val} takes at least two arguments", off, self.text)
                return Call(val, tuple(args))
            raise ExpressionError(f"unknown identifier {val!r}", off, self.text)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExpressionError(f"unexpected token {what}", off, self.text)


def parse_expression(text) -> Expression:
    """Parse ``text``; numbers are accepted as constant expressions."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    if not isinstance(text, str):
        raise ExpressionError(f"expression must be a string or number, got {type(text).__name__}")
    return Expression(_Parser(text).parse(), text)
