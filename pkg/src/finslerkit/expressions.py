"""Tiny arithmetic-expression parser for generator formulas in s and t.

Supports ``+ - * / ^`` with parentheses, numeric literals, the variables
``s`` and ``t``, and the functions ``sqrt``, ``exp`` and ``log``.  Compiled
expressions evaluate on floats, numpy arrays and jets alike.
"""

from __future__ import annotations

import re

from finslerkit import jets

__all__ = ["parse_expression", "ExpressionError"]

_FUNCTIONS = {"sqrt": jets.sqrt, "exp": jets.exp, "log": jets.log}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


class ExpressionError(ValueError):
    """Malformed generator expression."""


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExpressionError(f"unexpected character at position {pos}: {text[pos:]!r}")
        if m.lastgroup == "num":
            out.append(("num", float(m.group("num"))))
        elif m.lastgroup == "name":
            out.append(("name", m.group("name")))
        else:
            op = m.group("op")
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise ExpressionError(f"expected {kind}, got {tok}")
        if value is not None and tok[1] != value:
            raise ExpressionError(f"expected {value!r}, got {tok}")
        self.pos += 1
        return tok

    # expr := term (('+'|'-') term)*
    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = ("+" if op == "+" else "-", node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take()[1]
            rhs = self.factor()
            node = (op, node, rhs)
        return node

    # factor := unary ('^' factor)?   (right associative)
    def factor(self):
        node = self.unary()
        if self.peek() == ("op", "^"):
            self.take()
            return ("^", node, self.factor())
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return ("neg", self.unary())
        return self.primary()

    def primary(self):
        kind, value = self.peek()
        if kind == "num":
            self.take()
            return ("const", value)
        if kind == "name":
            self.take()
            if self.peek() == ("op", "("):
                if value not in _FUNCTIONS:
                    raise ExpressionError(f"unknown function {value!r}")
                self.take(value="(")
                arg = self.expr()
                self.take(value=")")
                return ("call", value, arg)
            if value not in ("s", "t"):
                raise ExpressionError(f"unknown variable {value!r} (expected s or t)")
            return ("var", value)
        if (kind, value) == ("op", "("):
            self.take()
            node = self.expr()
            self.take(value=")")
            return node
        raise ExpressionError(f"unexpected token {self.tokens[self.pos]}")


def _evaluate(node, s, t):
    op = node[0]
    if op == "const":
        return node[1]
    if op == "var":
        return s if node[1] == "s" else t
    if op == "neg":
        return -_evaluate(node[1], s, t)
    if op == "call":
        return _FUNCTIONS[node[1]](_evaluate(node[2], s, t))
    a = _evaluate(node[1], s, t)
    b = _evaluate(node[2], s, t)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    if op == "^":
        if node[2][0] == "const" and float(node[2][1]).is_integer():
            return a ** int(node[2][1])
        return a**b
    raise ExpressionError(f"unknown node {op!r}")


def parse_expression(text: str):
    """Compile an expression in s, t into a callable ``f(s, t)``."""
    parser = _Parser(_tokenize(text))
    tree = parser.expr()
    parser.take(kind="end")

    def func(s, t, _tree=tree):
        return _evaluate(_tree, s, t)

    func.expression = text
    return func
