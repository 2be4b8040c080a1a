"""Arithmetic expressions for potentials, densities and non-affine maps.

Grammar (highest binding first)::

    primary := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
    power   := primary ['^' unary]          # right associative
    unary   := '-' unary | power
    term    := unary (('*' | '/') unary)*
    expr    := term (('+' | '-') term)*

Names are the coordinates ``x`` and ``y`` and the constants ``pi`` and ``e``.
Functions are ``exp``, ``ln``, ``sin``, ``cos`` and ``abs``. Evaluation is
vectorised over numpy arrays.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import ExpressionDomainError, ExpressionSyntaxError, UnknownIdentifier

VARIABLES = ("x", "y")
CONSTANTS = {"pi": np.pi, "e": np.e}
FUNCTIONS = {
    "exp": np.exp,
    "ln": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
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


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = val or "end of input"
            raise ExpressionSyntaxError(f"expected {value!r}, found {found!r}", pos)

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
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in VARIABLES or val in CONSTANTS:
                return Var(val)
            raise UnknownIdentifier(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExpressionSyntaxError(f"unexpected {val or 'end of input'!r}", pos)


def parse_expression(text: str) -> Node:
    """Parse ``text`` into an AST; raises ExpressionSyntaxError with a position."""
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    p = _Parser(text)
    node = p.expr()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ExpressionSyntaxError(f"unexpected {val!r}", pos)
    return node


def evaluate(node: Node, env: Mapping[str, object] | None = None):
    """Evaluate ``node`` with variables taken from ``env`` (scalars or arrays)."""
    env = env or {}
    with np.errstate(all="ignore"):
        return _eval(node, env)


def _eval(node, env):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        if node.name in CONSTANTS:
            return np.float64(CONSTANTS[node.name])
        if node.name not in env:
            raise UnknownIdentifier(f"variable {node.name!r} is not bound", 0)
        return np.asarray(env[node.name], dtype=float)
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Call):
        arg = _eval(node.arg, env)
        if node.func == "ln" and np.any(arg <= 0):
            raise ExpressionDomainError("ln of a non-positive value")
        return FUNCTIONS[node.func](arg)
    left = _eval(node.left, env)
    right = _eval(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if np.any(right == 0):
            raise ExpressionDomainError("division by zero")
        return left / right
    out = np.power(left, right)
    if not np.all(np.isfinite(out)):
        raise ExpressionDomainError("power outside its domain")
    return out


def variables(node: Node) -> set:
    """Coordinate names the expression depends on."""
    if isinstance(node, Var):
        return {node.name} if node.name in VARIABLES else set()
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, Call):
        return variables(node.arg)
    return variables(node.left) | variables(node.right)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def unparse(node: Node) -> str:
    """Render ``node`` with the minimal parentheses that re-parse to the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({unparse(node.arg)})"
    if isinstance(node, Neg):
        inner = unparse(node.operand)
        return f"-{inner}" if _prec(node.operand) >= 3 else f"-({inner})"
    p = _PREC[node.op]
    left, right = unparse(node.left), unparse(node.right)
    if node.op == "^":
        if _prec(node.left) < 5:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"
