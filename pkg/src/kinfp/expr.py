"""Small arithmetic interpreter for coefficient and data expressions.

Grammar: numbers, the variables t x y v u, the constant pi, the binary
operators + - * / and ^ (power), unary minus and the functions exp, sin,
cos, abs. Anything else is rejected at parse time.
"""
from __future__ import annotations

import ast
from typing import Callable

import numpy as np

VARIABLES = ("t", "x", "y", "v", "u")
FUNCTIONS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "abs": np.abs}
CONSTANTS = {"pi": np.pi}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class ExpressionError(ValueError):
    pass


def _check(node, text):
    if isinstance(node, ast.Expression):
        return _check(node.body, text)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"only numeric literals are allowed in {text!r}")
        return
    if isinstance(node, ast.Name):
        if node.id not in VARIABLES and node.id not in CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
        return
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left, text)
        _check(node.right, text)
        return
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        _check(node.operand, text)
        return
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError(f"unknown function in {text!r}")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"functions take exactly one argument in {text!r}")
        _check(node.args[0], text)
        return
    raise ExpressionError(f"unsupported syntax {type(node).__name__} in {text!r}")


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else CONSTANTS[node.id]
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        val = _eval(node.operand, env)
        return -val if isinstance(node.op, ast.USub) else val
    return FUNCTIONS[node.func.id](_eval(node.args[0], env))


class Expression:
    """Parsed expression; call with keyword variables or as ``fn(t, x, v)``."""

    def __init__(self, text: str):
        if not isinstance(text, str) or not text.strip():
            raise ExpressionError("empty expression")
        self.text = text
        try:
            tree = ast.parse(text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
        _check(tree, text)
        self._tree = tree
        self.names = sorted({n.id for n in ast.walk(tree) if isinstance(n, ast.Name) and n.id in VARIABLES})
        if not self.names:
            # lets the solver recognize constant (and vanishing) coefficients
            self.constant_value = float(self.evaluate())

    def evaluate(self, **env):
        missing = [n for n in self.names if n not in env]
        if missing:
            raise ExpressionError(f"{self.text!r} needs values for {missing}")
        with np.errstate(all="ignore"):
            return _eval(self._tree, {k: np.asarray(v, dtype=float) for k, v in env.items()})

    def __call__(self, t, x, v):
        shape = np.broadcast(np.asarray(t), np.asarray(x), np.asarray(v)).shape
        out = self.evaluate(t=t, x=x, v=v, y=x, u=v)
        return np.broadcast_to(out, shape) if np.ndim(out) < len(shape) else out

    def __repr__(self):
        return f"Expression({self.text!r})"


def compile_expression(text) -> Callable:
    """An evaluator (t, x, v) for a string; numbers become constant evaluators."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    return Expression(text)
