"""Evaluable real functions: named built-ins or parsed expressions."""

from dataclasses import dataclass

import numpy as np

from .expression import evaluate, parse_expression, to_text


def _const(x):
    return np.ones_like(np.asarray(x, dtype=float))


BUILTINS = {
    "constant": (_const, "1"),
    "identity": (lambda x: np.asarray(x, dtype=float), "x"),
    "square": (lambda x: np.asarray(x, dtype=float) ** 2, "x^2"),
    "cube": (lambda x: np.asarray(x, dtype=float) ** 3, "x^3"),
    "quartic": (lambda x: np.asarray(x, dtype=float) ** 4, "x^4"),
    "exp_neg": (lambda x: np.exp(-np.asarray(x, dtype=float)), "exp(-x)"),
    "sin": (lambda x: np.sin(np.asarray(x, dtype=float)), "sin(x)"),
    "abs_shift": (lambda x: np.abs(np.asarray(x, dtype=float) - 0.5), "abs(x - 0.5)"),
    "sqrt": (lambda x: np.sqrt(np.asarray(x, dtype=float)), "sqrt(x)"),
}


@dataclass(frozen=True)
class FunctionSpec:
    """A deterministic real function of one variable, vectorized over numpy arrays."""

    name: str
    builtin_id: str = None
    ast: object = None

    def __call__(self, x):
        if self.ast is not None:
            return evaluate(self.ast, x)
        return BUILTINS[self.builtin_id][0](x)

    @property
    def text(self):
        if self.ast is not None:
            return to_text(self.ast)
        return BUILTINS[self.builtin_id][1]


def builtin(builtin_id):
    if builtin_id not in BUILTINS:
        raise KeyError(f"unknown builtin function {builtin_id!r}")
    return FunctionSpec(name=builtin_id, builtin_id=builtin_id)


def from_expression(src):
    return FunctionSpec(name=src, ast=parse_expression(src))


def function_spec(text):
    """A builtin id if `text` names one, otherwise a parsed expression."""
    if text in BUILTINS:
        return builtin(text)
    return from_expression(text)
