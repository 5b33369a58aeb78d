"""Whitelisted arithmetic expressions in one variable ``z`` (or a few named ones).

User-supplied index functions arrive as strings such as ``"0.5 + 0.3*sin(z)/(1+z**2)"``.
They are parsed with :mod:`ast` and only numeric literals, the variable ``z``,
the constants ``pi`` and ``e``, the operators ``+ - * / **`` and the functions
``pow, cos, sin, exp, abs`` are accepted. The compiled callable is vectorised
over numpy arrays.
"""

import ast

import numpy as np

from .errors import ParseError

_FUNCS = {
    "cos": np.cos,
    "sin": np.sin,
    "exp": np.exp,
    "abs": np.abs,
    "pow": np.power,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_UNARY = {ast.UAdd: np.positive, ast.USub: np.negative}


def _build(node, names):
    if isinstance(node, ast.Expression):
        return _build(node.body, names)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ParseError(f"unsupported literal {node.value!r}")
        value = float(node.value)
        return lambda env: value
    if isinstance(node, ast.Name):
        if node.id in names:
            key = node.id
            return lambda env: env[key]
        if node.id in _CONSTS:
            value = _CONSTS[node.id]
            return lambda env: value
        raise ParseError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _build(node.left, names), _build(node.right, names)
        return lambda env: op(left(env), right(env))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        op = _UNARY[type(node.op)]
        inner = _build(node.operand, names)
        return lambda env: op(inner(env))
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ParseError(f"unsupported function in {ast.unparse(node)!r}")
        if node.keywords:
            raise ParseError("keyword arguments are not allowed")
        func = _FUNCS[node.func.id]
        nargs = 2 if node.func.id == "pow" else 1
        if len(node.args) != nargs:
            raise ParseError(f"{node.func.id} takes {nargs} argument(s)")
        args = [_build(arg, names) for arg in node.args]
        return lambda env: func(*(arg(env) for arg in args))
    raise ParseError(f"unsupported syntax {ast.unparse(node)!r}")


def compile_expression(text, variables=("z",)):
    """Compile ``text`` into a vectorised function of the given variables (positional, in order)."""
    names = tuple(variables)
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse expression {text!r}: {exc.msg}") from None
    body = _build(tree, names)

    def evaluate(*args):
        if len(args) != len(names):
            raise TypeError(f"expected {len(names)} argument(s): {', '.join(names)}")
        arrays = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in args))
        with np.errstate(all="ignore"):
            out = body(dict(zip(names, arrays)))
            return np.broadcast_to(out, arrays[0].shape).astype(float)

    return evaluate
