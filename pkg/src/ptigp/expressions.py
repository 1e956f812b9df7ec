"""Safe evaluation of small arithmetic expressions from configuration files.

Only literals, whitelisted names, whitelisted numpy functions, arithmetic
operators and (for matrices) nested list displays are accepted.  Nothing is
passed to ``eval``.
"""

import ast
import operator

import numpy as np

FUNCTIONS = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "arcsin", "arccos", "arctan", "sinh", "cosh", "tanh",
                 "exp", "log", "sqrt", "abs", "conj", "real", "imag")
}
CONSTANTS = {"pi": np.pi, "e": np.e, "inf": np.inf}

_BINARY = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


class ExpressionError(ValueError):
    pass


def parse(text):
    try:
        return ast.parse(text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from exc


def _eval(node, names):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name):
        if node.id in names:
            return names[node.id]
        if node.id in CONSTANTS:
            return CONSTANTS[node.id]
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
        return _BINARY[type(node.op)](_eval(node.left, names), _eval(node.right, names))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval(node.operand, names))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS \
            and not node.keywords:
        return FUNCTIONS[node.func.id](*(_eval(a, names) for a in node.args))
    raise ExpressionError(f"unsupported expression element {ast.dump(node)[:60]}")


def evaluate(text, names=None):
    """Value of a scalar expression such as ``"sqrt(5)"`` or ``"pi / 2"``."""
    return _eval(parse(text), names or {})


def evaluate_real(text, names=None):
    value = evaluate(text, names)
    if np.iscomplexobj(value) and np.any(np.imag(value) != 0):
        raise ExpressionError(f"{text!r} is not real")
    return float(np.real(value))


def matrix_template(text):
    """Parse a nested list display into a grid of expression nodes."""
    node = parse(text)
    if not isinstance(node, ast.List) or not node.elts:
        raise ExpressionError("a matrix must be written as [[...], [...]]")
    rows = []
    for row in node.elts:
        if not isinstance(row, ast.List):
            raise ExpressionError("each matrix row must be a list")
        rows.append(list(row.elts))
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ExpressionError(f"matrix must be square, got row lengths {[len(r) for r in rows]}")
    return rows


def evaluate_matrix(rows, names, shape):
    """Evaluate a template for every point; entries broadcast to `shape`."""
    n = len(rows)
    out = np.empty(shape + (n, n), dtype=complex)
    for i, row in enumerate(rows):
        for j, node in enumerate(row):
            out[..., i, j] = np.broadcast_to(_eval(node, names), shape)
    return out
