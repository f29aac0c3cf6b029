"""
Closed-form scalar fields of one variable ``x``.

Drifts, weights, potentials and Lyapunov functions are written as strings
such as ``"-sin(x) + 0.3"`` or ``"exp(0.3*x**2)"``.  The accepted grammar is
deliberately small: numbers, ``x``, ``pi``, ``+ - * / **``, and the functions
``sin cos exp log sqrt abs``.  Strings are checked against this whitelist with
:mod:`ast` before being handed to sympy, which supplies exact derivatives and
vectorized evaluation.
"""
from __future__ import annotations

import ast
from functools import cached_property

import numpy as np
import sympy as sp

FUNCTIONS = {
    "sin": sp.sin,
    "cos": sp.cos,
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "abs": sp.Abs,
}
_X = sp.Symbol("x", real=True)
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


class ExpressionError(ValueError):
    pass


def _validate(text: str) -> None:
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression {text!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ExpressionError(
                f"{type(node).__name__} is not allowed in expression {text!r}"
            )
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ExpressionError(f"only numeric constants are allowed in {text!r}")
        if isinstance(node, ast.Name) and node.id not in FUNCTIONS and node.id not in ("x", "pi"):
            raise ExpressionError(f"unknown name {node.id!r} in expression {text!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError(f"unsupported function call in {text!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"functions take exactly one argument in {text!r}")


class Expr:
    """A validated scalar expression in ``x``.

    >>> Expr("x**2").derivative()(np.array([1.0, 2.0]))
    array([2., 4.])
    """

    def __init__(self, text):
        if isinstance(text, (int, float)):
            text = repr(float(text))
        text = str(text).strip()
        _validate(text)
        self.text = text
        namespace = dict(FUNCTIONS, x=_X, pi=sp.pi)
        self._sym = sp.sympify(text, locals=namespace, rational=False)

    @classmethod
    def _from_sympy(cls, sym) -> "Expr":
        obj = cls.__new__(cls)
        obj.text = str(sym)
        obj._sym = sym
        return obj

    @cached_property
    def _fn(self):
        return sp.lambdify(_X, self._sym, modules="numpy")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            out = self._fn(x)
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()

    def derivative(self, order: int = 1) -> "Expr":
        return Expr._from_sympy(sp.diff(self._sym, _X, order))

    @property
    def is_zero(self) -> bool:
        return self._sym == 0

    @property
    def constant_value(self):
        """The value if the expression does not depend on ``x``, else ``None``."""
        if self._sym.free_symbols:
            return None
        return float(self._sym)

    def __repr__(self):
        return f"Expr({self.text!r})"

    def __eq__(self, other):
        return isinstance(other, Expr) and sp.simplify(self._sym - other._sym) == 0

    def __hash__(self):
        return hash(self.text)


def as_expr(spec) -> Expr:
    return spec if isinstance(spec, Expr) else Expr(spec)
