"""Arithmetic expressions over ``x`` used for symbols, probes and parameters.

Grammar (``^`` binds tightest and is right-associative, then unary minus,
then ``* /``, then ``+ -``)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := "-" unary | power
    power := atom ("^" unary)?
    atom  := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

Names are ``pi``, the allowed variables (``x`` by default) and the unary
functions ``sin cos exp abs sqrt``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "sqrt": np.sqrt,
}
CONSTANTS = {"pi": math.pi}
MAX_DEPTH = 100
MAX_TREE_DEPTH = 400


class ExpressionError(ValueError):
    """Parse errors carry a byte offset; evaluation errors have ``position=None``."""

    def __init__(self, message: str, text: str = "", position: int | None = None):
        self.position = None if position is None else len(text[:position].encode("utf-8"))
        self.reason = message
        super().__init__(message if position is None else f"{message} at byte {self.position}")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Name, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExpressionError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: frozenset[str]):
        self.text = text
        self.variables = variables
        self.tokens = _tokenize(text)
        self.i = 0
        self.depth = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = self.peek() if tok is None else tok
        raise ExpressionError(message, self.text, tok[2])

    def expect(self, op):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != op:
            self.fail(f"expected {op!r}")
        return self.take()

    def enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail("expression nested too deeply")

    def parse(self) -> Node:
        if self.peek()[0] == "end":
            self.fail("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self):
        self.enter()
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        self.depth -= 1
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            self.enter()
            node = Neg(self.unary())
            self.depth -= 1
            return node
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            self.enter()
            node = BinOp("^", base, self.unary())
            self.depth -= 1
            return node
        return base

    def atom(self):
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            v = float(value)
            if not math.isfinite(v):
                self.fail("number out of range", tok)
            return Num(v)
        if kind == "name":
            if value in FUNCTIONS:
                if self.peek()[:2] != ("op", "("):
                    self.fail(f"function {value!r} takes one argument in parentheses")
                self.take()
                arg = self.expr()
                if self.peek()[:2] == ("op", ","):
                    self.fail(f"function {value!r} takes exactly one argument")
                self.expect(")")
                return Call(value, arg)
            if value in CONSTANTS or value in self.variables:
                if self.peek()[:2] == ("op", "("):
                    self.fail(f"{value!r} is not a function")
                return Name(value)
            self.fail(f"unknown identifier {value!r}", tok)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.fail("unexpected end of expression", tok)
        self.fail(f"unexpected {value!r}", tok)


@dataclass(frozen=True)
class Expression:
    text: str
    ast: Node
    variables: frozenset[str] = frozenset({"x"})

    def __call__(self, x=None, **env):
        if x is not None:
            env["x"] = x
        return evaluate(self.ast, env)

    def __str__(self):
        return to_text(self.ast)


def parse_expression(text: str, variables: Iterable[str] = ("x",)) -> Expression:
    """Parse ``text``; raises :class:`ExpressionError` with a byte offset on failure."""
    if not isinstance(text, str):
        raise ExpressionError("expression must be a string", "", 0)
    variables = frozenset(variables)
    ast = _Parser(text, variables).parse()
    if _tree_depth(ast) > MAX_TREE_DEPTH:
        raise ExpressionError("expression nested too deeply", text, 0)
    return Expression(text, ast, variables)


def _tree_depth(root: Node) -> int:
    deepest = 0
    stack = [(root, 1)]
    while stack:
        node, depth = stack.pop()
        deepest = max(deepest, depth)
        if isinstance(node, (Neg, Call)):
            stack.append((node.operand if isinstance(node, Neg) else node.arg, depth + 1))
        elif isinstance(node, BinOp):
            stack.append((node.left, depth + 1))
            stack.append((node.right, depth + 1))
    return deepest


def to_text(node: Node) -> str:
    """Canonical text; ``parse_expression(to_text(ast)).ast == ast``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    return f"({to_text(node.left)} {node.op} {to_text(node.right)})"


def evaluate(node: Node, env: Mapping[str, object]):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.name in CONSTANTS:
            return CONSTANTS[node.name]
        if node.name not in env:
            raise ExpressionError(f"no value bound to {node.name!r}")
        return env[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.operand, env)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](evaluate(node.arg, env))
    a = evaluate(node.left, env)
    b = evaluate(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return np.divide(a, b)
    return np.power(np.asarray(a, dtype=float), b)


def evaluate_on(expr: Expression, x, **env) -> np.ndarray:
    """Evaluate on an array and reject non-finite results (e.g. sqrt of a negative)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        y = np.broadcast_to(np.asarray(expr(x, **env), dtype=float), x.shape)
    bad = ~np.isfinite(y)
    if np.any(bad):
        at = x[np.argmax(bad)] if x.ndim == 1 else None
        where = f" at x={at:.6g}" if at is not None else ""
        raise ExpressionError(f"{expr.text!r} is not finite on its domain{where}")
    return np.array(y)
