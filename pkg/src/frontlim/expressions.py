"""Tiny expression grammar for initial data and speed fields.

Deliberately small: coordinates (``x`` in 1D, ``x1``/``x2``), the point
norm ``|x|``, numeric constants, ``+ - *``, and the functions ``tanh``,
``min``, ``max`` and ``abs`` (``|expr|`` is absolute value). Anything
richer comes in as a field file. No division, no powers, no other names;
rejecting them keeps configs unambiguous and runs reproducible.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import SpecError

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|([A-Za-z_][A-Za-z_0-9]*)"
                    r"|(.))")

_FUNCTIONS = ("tanh", "min", "max", "abs")


def _tokenize(src: str):
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            raise SpecError("expression: cannot tokenize %r" % src[pos:])
        num, name, sym = m.groups()
        if num is not None:
            tokens.append(("num", float(num)))
        elif name is not None:
            tokens.append(("name", name))
        elif sym.strip():
            if sym not in "+-*(),|":
                raise SpecError(
                    "expression: operator %r is not in the grammar "
                    "(allowed: + - * parentheses | , tanh min max abs)" % sym
                )
            tokens.append(("sym", sym))
        pos = m.end()
    tokens.append(("end", None))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise SpecError("expression: expected %s, found %r" % (kind, tok[1]))
        if value is not None and tok[1] != value:
            raise SpecError("expression: expected %r, found %r" % (value, tok[1]))
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise SpecError("expression: trailing input at %r" % (self.peek()[1],))
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ("sym", "+") or self.peek() == ("sym", "-"):
            op = self.take()[1]
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() == ("sym", "*"):
            self.take()
            node = ("*", node, self.unary())
        return node

    def unary(self):
        if self.peek() == ("sym", "-"):
            self.take()
            return ("neg", self.unary())
        return self.atom()

    def atom(self):
        kind, value = self.peek()
        if kind == "num":
            self.take()
            return ("const", value)
        if kind == "sym" and value == "(":
            self.take()
            node = self.expr()
            self.take("sym", ")")
            return node
        if kind == "sym" and value == "|":
            self.take()
            if self.peek() == ("name", "x") and self.tokens[self.pos + 1] == ("sym", "|"):
                self.take()
                self.take()
                return ("norm",)
            node = self.expr()
            self.take("sym", "|")
            return ("abs", node)
        if kind == "name":
            self.take()
            if value in _FUNCTIONS:
                self.take("sym", "(")
                args = [self.expr()]
                while self.peek() == ("sym", ","):
                    self.take()
                    args.append(self.expr())
                self.take("sym", ")")
                if value == "tanh" and len(args) != 1:
                    raise SpecError("expression: tanh takes one argument")
                if value == "abs" and len(args) != 1:
                    raise SpecError("expression: abs takes one argument")
                if value in ("min", "max") and len(args) < 2:
                    raise SpecError("expression: %s needs at least two arguments" % value)
                return (value, *args)
            if value in ("x", "x1", "x2"):
                return ("var", value)
            raise SpecError("expression: unknown name %r" % value)
        raise SpecError("expression: unexpected token %r" % (value,))


def _evaluate(node, pts: np.ndarray) -> np.ndarray:
    op = node[0]
    if op == "const":
        return np.full(pts.shape[0], node[1])
    if op == "var":
        name = node[1]
        if name == "x":
            if pts.shape[1] != 1:
                raise SpecError("expression: bare 'x' is only defined in 1D; "
                                "use x1/x2")
            return pts[:, 0].copy()
        axis = int(name[1]) - 1
        if axis >= pts.shape[1]:
            raise SpecError("expression: %s is out of range for a %dD grid"
                            % (name, pts.shape[1]))
        return pts[:, axis].copy()
    if op == "norm":
        return np.linalg.norm(pts, axis=1)
    if op == "neg":
        return -_evaluate(node[1], pts)
    if op == "abs":
        return np.abs(_evaluate(node[1], pts))
    if op == "tanh":
        return np.tanh(_evaluate(node[1], pts))
    if op in ("min", "max"):
        vals = [_evaluate(a, pts) for a in node[1:]]
        out = vals[0]
        for v in vals[1:]:
            out = np.minimum(out, v) if op == "min" else np.maximum(out, v)
        return out
    if op in ("+", "-", "*"):
        a = _evaluate(node[1], pts)
        b = _evaluate(node[2], pts)
        return a + b if op == "+" else (a - b if op == "-" else a * b)
    raise SpecError("expression: unhandled node %r" % (op,))


def compile_expression(src: str):
    """Compile an expression to a points -> values function.

    The returned callable takes an (m, dim) point array and returns an
    (m,) array. Parse errors raise SpecError naming the offending token.
    """
    node = _Parser(_tokenize(src)).parse()

    def fn(pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return _evaluate(node, pts)

    fn.source = src
    return fn
