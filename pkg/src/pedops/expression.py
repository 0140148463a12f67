"""Arithmetic expressions in one variable x.

Grammar (recursive descent, '^' right-associative, no implicit products)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' factor)?
    base   := number | 'x' | ident '(' expr ')' | '(' expr ')' | '-' base

Unary minus binds tighter than '^', so ``-x^2`` is ``(-x)^2``. Write
``-(x^2)`` for the other reading.
"""

import re
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ExpressionSyntaxError

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()−])
""", re.VERBOSE)


def _tokenize(src):
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {src[pos]!r}", _offset(src, pos),
                                        {"number", "x", "function", "(", "-"})
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            if text == "−":
                text = "-"
            tokens.append((kind, text, pos))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


def _offset(src, pos):
    """Character position -> UTF-8 byte offset."""
    return len(src[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, expected):
        _, text, pos = self.peek()
        found = repr(text) if text else "end of input"
        raise ExpressionSyntaxError(f"{message}, found {found}", _offset(self.src, pos), expected)

    def expect(self, text):
        if self.peek()[1] != text or self.peek()[0] == "end":
            self.fail(f"expected {text!r}", {text})
        self.advance()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("unexpected trailing input", {"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.base()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.advance()
            node = BinOp("^", node, self.factor())
        return node

    def base(self):
        kind, text, pos = self.peek()
        if kind == "number":
            self.advance()
            return Num(float(text))
        if kind == "ident":
            self.advance()
            if text == "x":
                return Var()
            if text not in FUNCTIONS:
                raise ExpressionSyntaxError(f"unknown identifier {text!r}", _offset(self.src, pos),
                                            {"x", *FUNCTIONS})
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Call(text, arg)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.base())
        self.fail("expected an operand", {"number", "x", "function", "(", "-"})


def parse_expression(src):
    if not src or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0, {"number", "x", "function", "(", "-"})
    return _Parser(src).parse()


def to_text(node):
    """Fully parenthesized text that parses back to an equal tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        return "-" + _as_base(node.operand)
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def _as_base(node):
    text = to_text(node)
    if isinstance(node, (Num, Var, Call, Neg)) or text.startswith("("):
        return text
    return f"({text})"


def _first_bad(x, mask):
    x = np.asarray(x, dtype=float)
    mask = np.broadcast_to(mask, x.shape)
    return float(x.ravel()[np.flatnonzero(mask.ravel())[0]])


def _raise_at(x, mask, message, node):
    point = _first_bad(x, mask)
    raise EvaluationError(f"{message} at x = {point!r} in {to_text(node)}", point=point, node=node)


def evaluate(node, x):
    """Evaluate on a scalar or numpy array; domain violations raise EvaluationError."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval(node, x)
    return out


def _check(value, x, node):
    bad = ~np.isfinite(value)
    if np.any(bad):
        _raise_at(x, bad, "non-finite value", node)
    return value


def _eval(node, xs):
    if isinstance(node, Num):
        return np.full(xs.shape, node.value)
    if isinstance(node, Var):
        return xs
    if isinstance(node, Neg):
        return -_eval(node.operand, xs)
    if isinstance(node, BinOp):
        left = _eval(node.left, xs)
        right = _eval(node.right, xs)
        if node.op == "+":
            return _check(left + right, xs, node)
        if node.op == "-":
            return _check(left - right, xs, node)
        if node.op == "*":
            return _check(left * right, xs, node)
        if node.op == "/":
            zero = right == 0
            if np.any(zero):
                _raise_at(xs, zero, "division by zero", node)
            return _check(left / right, xs, node)
        # '^'
        bad = (left < 0) & (right != np.round(right))
        if np.any(bad):
            _raise_at(xs, bad, "negative base with non-integer exponent", node)
        bad = (left == 0) & (right < 0)
        if np.any(bad):
            _raise_at(xs, bad, "zero raised to a negative power", node)
        return _check(np.power(left, right), xs, node)
    if isinstance(node, Call):
        arg = _eval(node.arg, xs)
        if node.name == "log":
            bad = arg <= 0
            if np.any(bad):
                _raise_at(xs, bad, "log of a nonpositive argument", node)
            return np.log(arg)
        if node.name == "sqrt":
            bad = arg < 0
            if np.any(bad):
                _raise_at(xs, bad, "sqrt of a negative argument", node)
            return np.sqrt(arg)
        if node.name == "exp":
            return _check(np.exp(arg), xs, node)
        return {"sin": np.sin, "cos": np.cos, "abs": np.abs}[node.name](arg)
    raise TypeError(f"not an expression node: {node!r}")
