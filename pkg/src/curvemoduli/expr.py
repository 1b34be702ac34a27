"""Parser for polynomial expressions in ``z``, ``1/z`` and ``w``.

Accepted: numbers, imaginary literals such as ``2i`` or ``0.5-1.5i``, the
names ``z`` and ``w``, ``+ - *``, division by a monomial, and integer powers
(``^`` or ``**``; negative powers only of monomials).  The result is a dict
``{(j, k): coefficient}`` for the terms ``z**j w**k``.
"""

from __future__ import annotations

import ast
import re

from .errors import ConfigError

_IMAG = re.compile(r"(?<![\w.])((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i\b")
_BARE_I = re.compile(r"(?<![\w.])i\b")

Poly = dict


def _clean(p: Poly) -> Poly:
    return {k: v for k, v in p.items() if v != 0}


def _add(a: Poly, b: Poly, sign=1) -> Poly:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + sign * v
    return _clean(out)


def _mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for (j1, k1), v1 in a.items():
        for (j2, k2), v2 in b.items():
            key = (j1 + j2, k1 + k2)
            out[key] = out.get(key, 0) + v1 * v2
    return _clean(out)


def _monomial_inverse(p: Poly) -> Poly:
    if len(p) != 1:
        raise ConfigError("only division by a single monomial is supported")
    (j, k), v = next(iter(p.items()))
    if k != 0:
        raise ConfigError("negative powers of w are not allowed")
    return {(-j, 0): 1 / v}


def _eval(node) -> Poly:
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) \
            and not isinstance(node.value, bool):
        return _clean({(0, 0): complex(node.value)})
    if isinstance(node, ast.Name):
        if node.id == "z":
            return {(1, 0): 1 + 0j}
        if node.id == "w":
            return {(0, 1): 1 + 0j}
        raise ConfigError(f"unknown name {node.id!r} in expression")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        p = _eval(node.operand)
        return {k: -v for k, v in p.items()} if isinstance(node.op, ast.USub) else p
    if isinstance(node, ast.BinOp):
        a = _eval(node.left)
        if isinstance(node.op, ast.Pow):
            e = _eval(node.right)
            if set(e) - {(0, 0)} or e.get((0, 0), 0).imag != 0 or e.get((0, 0), 0).real % 1 != 0:
                raise ConfigError("exponents must be integer constants")
            m = int(e.get((0, 0), 0).real)
            base = a if m >= 0 else _monomial_inverse(a)
            out: Poly = {(0, 0): 1 + 0j}
            for _ in range(abs(m)):
                out = _mul(out, base)
            return out
        b = _eval(node.right)
        if isinstance(node.op, ast.Add):
            return _add(a, b)
        if isinstance(node.op, ast.Sub):
            return _add(a, b, -1)
        if isinstance(node.op, ast.Mult):
            return _mul(a, b)
        if isinstance(node.op, ast.Div):
            return _mul(a, _monomial_inverse(b))
    raise ConfigError(f"unsupported syntax in expression: {ast.dump(node)[:60]}")


def parse_polynomial(text: str) -> Poly:
    """``"w^2 - z/4 + (1-2i)/z"`` -> ``{(0, 2): 1, (1, 0): -0.25, (-1, 0): 1-2j}``."""
    src = _BARE_I.sub("1j", _IMAG.sub(r"\1j", text)).replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from exc
    return _eval(tree)


def evaluate(poly: Poly, z, w=0):
    """Evaluate a parsed polynomial (numpy broadcasting)."""
    out = 0
    for (j, k), v in poly.items():
        out = out + v * z ** j * w ** k
    return out
