"""Immersion expression language: parser, canonical printer, forward-mode jets.

Grammar (whitespace insignificant, unary minus binds looser than ^):

    expr    := term (("+"|"-") term)*
    term    := factor (("*"|"/") factor)*
    factor  := "-" factor | power
    power   := primary ("^" factor)?
    primary := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

so "-u^2" parses as -(u^2) and "^" is right-associative.  Functions:
sin cos tan sinh cosh tanh exp log sqrt abs; constants pi and e.

Jets carry value, gradient and Hessian with respect to the chart variables
and evaluate over arbitrary numpy batch shapes in one pass.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ParseError

FUNCTION_NAMES = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}
RESERVED = set(FUNCTION_NAMES) | set(CONSTANTS)


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class Neg:
    child: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


def is_constant(node):
    """True when the subtree references no chart variable."""
    if isinstance(node, (Num, Const)):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, Neg):
        return is_constant(node.child)
    if isinstance(node, BinOp):
        return is_constant(node.left) and is_constant(node.right)
    if isinstance(node, Call):
        return is_constant(node.arg)
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Lexer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source):
    tokens = []
    pos = 0
    # Typographic minus is accepted as a synonym for '-'.
    source = source.replace("−", "-")
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            if source[pos:].strip() == "":
                break
            bad = source[pos:].lstrip()
            offset = n - len(bad)
            raise ParseError(f"unexpected character {bad[0]!r}", offset)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source, var_names):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0
        self.vars = {name: i for i, name in enumerate(var_names)}

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, text, offset = self.peek()
        if kind != "op" or text != op:
            raise ParseError(f"expected {op!r}", offset)
        return self.advance()

    def parse(self):
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {text!r}", offset)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.factor())
            else:
                return node

    def factor(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self):
        node = self.primary()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return BinOp("^", node, self.factor())
        return node

    def primary(self):
        kind, text, offset = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            nkind, ntext, _ = self.peek()
            if nkind == "op" and ntext == "(":
                if text not in FUNCTION_NAMES:
                    raise ParseError(f"unknown function {text!r}", offset)
                self.advance()
                akind, atext, aoffset = self.peek()
                if akind == "op" and atext == ")":
                    raise ParseError("empty function argument", aoffset)
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            if text in CONSTANTS:
                return Const(text)
            if text in self.vars:
                return Var(text, self.vars[text])
            raise ParseError(f"undeclared identifier {text!r}", offset)
        if kind == "op" and text == "(":
            ikind, itext, ioffset = self.peek()
            if ikind == "op" and itext == ")":
                raise ParseError("empty parentheses", ioffset)
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "end":
            raise ParseError("unexpected end of input", offset)
        raise ParseError(f"unexpected token {text!r}", offset)


def parse_expression(source, var_names):
    """Parse an expression over the declared variables into an AST."""
    if not source or not source.strip():
        raise ParseError("empty expression", 0)
    for name in var_names:
        if name in RESERVED:
            raise ParseError(f"variable name {name!r} shadows a builtin", 0)
    return _Parser(source, tuple(var_names)).parse()


def to_source(node):
    """Canonical fully-parenthesized printer; parse(to_source(t)) == t."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = to_source(node.child)
        if isinstance(node.child, (Num, Const, Var, Call)):
            return f"-{inner}"
        return f"-({inner})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Plain float evaluation

_PLAIN_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "sinh": math.sinh, "cosh": math.cosh, "tanh": math.tanh,
    "exp": math.exp, "log": math.log, "sqrt": math.sqrt, "abs": abs,
}


def evaluate(node, env):
    """Evaluate with plain floats; env maps variable names to values."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        return float(env[node.name])
    if isinstance(node, Neg):
        return -evaluate(node.child, env)
    if isinstance(node, BinOp):
        a = evaluate(node.left, env)
        b = evaluate(node.right, env)
        try:
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                return a / b
            return a ** b
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise EvaluationError(f"{exc} in {to_source(node)!r}", node) from exc
    if isinstance(node, Call):
        x = evaluate(node.arg, env)
        try:
            return _PLAIN_FUNCS[node.func](x)
        except (ValueError, OverflowError) as exc:
            raise EvaluationError(f"{exc} in {to_source(node)!r}", node) from exc
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Batched jets

_JET_FUNCS = {
    # name: (f, f', f'')
    "sin": (np.sin, np.cos, lambda x: -np.sin(x)),
    "cos": (np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)),
    "tan": (np.tan, lambda x: 1.0 + np.tan(x) ** 2,
            lambda x: 2.0 * np.tan(x) * (1.0 + np.tan(x) ** 2)),
    "sinh": (np.sinh, np.cosh, np.sinh),
    "cosh": (np.cosh, np.sinh, np.cosh),
    "tanh": (np.tanh, lambda x: 1.0 - np.tanh(x) ** 2,
             lambda x: -2.0 * np.tanh(x) * (1.0 - np.tanh(x) ** 2)),
    "exp": (np.exp, np.exp, np.exp),
    "log": (np.log, lambda x: 1.0 / x, lambda x: -1.0 / x ** 2),
    "sqrt": (np.sqrt, lambda x: 0.5 / np.sqrt(x),
             lambda x: -0.25 * x ** -1.5),
    "abs": (np.abs, np.sign, lambda x: np.zeros_like(x)),
}


class Jet2:
    """Second-order forward-mode value: f, grad f (m,...), Hess f (m,m,...)."""

    __slots__ = ("v", "g", "h")

    def __init__(self, v, g, h):
        self.v = v
        self.g = g
        self.h = h

    def __add__(self, o):
        if isinstance(o, Jet2):
            return Jet2(self.v + o.v, self.g + o.g, self.h + o.h)
        return Jet2(self.v + o, self.g, self.h)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Jet2):
            return Jet2(self.v - o.v, self.g - o.g, self.h - o.h)
        return Jet2(self.v - o, self.g, self.h)

    def __rsub__(self, o):
        return Jet2(o - self.v, -self.g, -self.h)

    def __neg__(self):
        return Jet2(-self.v, -self.g, -self.h)

    def __mul__(self, o):
        if isinstance(o, Jet2):
            outer = self.g[:, None] * o.g[None, :]
            return Jet2(self.v * o.v,
                        self.g * o.v + o.g * self.v,
                        self.h * o.v + o.h * self.v + outer + np.swapaxes(outer, 0, 1))
        return Jet2(self.v * o, self.g * o, self.h * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Jet2):
            return self * o._recip()
        return Jet2(self.v / o, self.g / o, self.h / o)

    def __rtruediv__(self, o):
        return self._recip() * o

    def _recip(self):
        inv = 1.0 / self.v
        return self._chain(inv, -inv * inv, 2.0 * inv ** 3)

    def _chain(self, f0, f1, f2):
        outer = self.g[:, None] * self.g[None, :]
        return Jet2(f0, f1 * self.g, f1 * self.h + f2 * outer)

    def scalar_pow(self, p):
        if p == 0:
            return Jet2(np.ones_like(self.v), np.zeros_like(self.g), np.zeros_like(self.h))
        if p == 1:
            return self
        f1 = p * self.v ** (p - 1)
        f2 = p * (p - 1) * self.v ** (p - 2)
        return self._chain(self.v ** p, f1, f2)

    def apply(self, name):
        f0, f1, f2 = _JET_FUNCS[name]
        return self._chain(f0(self.v), f1(self.v), f2(self.v))


class Jet1:
    """First-order forward-mode value: f and grad f (m,...)."""

    __slots__ = ("v", "g")

    def __init__(self, v, g):
        self.v = v
        self.g = g

    def __add__(self, o):
        if isinstance(o, Jet1):
            return Jet1(self.v + o.v, self.g + o.g)
        return Jet1(self.v + o, self.g)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Jet1):
            return Jet1(self.v - o.v, self.g - o.g)
        return Jet1(self.v - o, self.g)

    def __rsub__(self, o):
        return Jet1(o - self.v, -self.g)

    def __neg__(self):
        return Jet1(-self.v, -self.g)

    def __mul__(self, o):
        if isinstance(o, Jet1):
            return Jet1(self.v * o.v, self.g * o.v + o.g * self.v)
        return Jet1(self.v * o, self.g * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Jet1):
            inv = 1.0 / o.v
            return Jet1(self.v * inv, (self.g * o.v - o.g * self.v) * inv * inv)
        return Jet1(self.v / o, self.g / o)

    def __rtruediv__(self, o):
        inv = 1.0 / self.v
        return Jet1(o * inv, -o * self.g * inv * inv)

    def scalar_pow(self, p):
        if p == 0:
            return Jet1(np.ones_like(self.v), np.zeros_like(self.g))
        if p == 1:
            return self
        return Jet1(self.v ** p, p * self.v ** (p - 1) * self.g)

    def apply(self, name):
        f0, f1, _ = _JET_FUNCS[name]
        return Jet1(f0(self.v), f1(self.v) * self.g)


def _eval_jet(node, var_jets):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        return var_jets[node.index]
    if isinstance(node, Neg):
        return -_eval_jet(node.child, var_jets)
    if isinstance(node, BinOp):
        if node.op == "^":
            base = _eval_jet(node.left, var_jets)
            if is_constant(node.right):
                p = evaluate(node.right, {})
                if isinstance(base, (int, float)):
                    return base ** p
                if float(p).is_integer():
                    return base.scalar_pow(p)
                if np.any(np.asarray(base.v) < 0):
                    raise EvaluationError(
                        "negative base with non-integer exponent in "
                        f"{to_source(node)!r}", node)
                return base.scalar_pow(p)
            expo = _eval_jet(node.right, var_jets)
            if isinstance(base, (int, float)):
                if base <= 0:
                    raise EvaluationError(
                        f"non-positive base with variable exponent in {to_source(node)!r}",
                        node)
                return (expo * math.log(base)).apply("exp")
            if np.any(np.asarray(base.v) <= 0):
                raise EvaluationError(
                    f"non-positive base with variable exponent in {to_source(node)!r}",
                    node)
            return (expo * base.apply("log")).apply("exp")
        a = _eval_jet(node.left, var_jets)
        b = _eval_jet(node.right, var_jets)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Call):
        x = _eval_jet(node.arg, var_jets)
        if isinstance(x, (int, float)):
            return _PLAIN_FUNCS[node.func](x)
        return x.apply(node.func)
    raise TypeError(f"not an expression node: {node!r}")


def _find_bad_node(node, env):
    """Locate the deepest subexpression that evaluates non-finite at env."""
    for child in _children(node):
        bad = _find_bad_node(child, env)
        if bad is not None:
            return bad
    try:
        val = evaluate(node, env)
    except EvaluationError:
        return node
    if not math.isfinite(val):
        return node
    return None


def _children(node):
    if isinstance(node, Neg):
        return (node.child,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Call):
        return (node.arg,)
    return ()


def _seed_jets(values, order):
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    batch = values.shape[1:]
    jets = []
    for i in range(m):
        g = np.zeros((m,) + batch)
        g[i] = 1.0
        if order == 2:
            jets.append(Jet2(values[i], g, np.zeros((m, m) + batch)))
        else:
            jets.append(Jet1(values[i], g))
    return jets


def _broadcast_jet(res, m, batch, order):
    """Promote a constant scalar result to a full jet."""
    if order == 2:
        if isinstance(res, Jet2):
            return res
        v = np.broadcast_to(np.asarray(res, dtype=float), batch).copy()
        return Jet2(v, np.zeros((m,) + batch), np.zeros((m, m) + batch))
    if isinstance(res, Jet1):
        return res
    v = np.broadcast_to(np.asarray(res, dtype=float), batch).copy()
    return Jet1(v, np.zeros((m,) + batch))


def _raise_on_nonfinite(node, res, var_names, values):
    bad = np.asarray(res.v)
    if np.all(np.isfinite(bad)) and np.all(np.isfinite(res.g)):
        return
    flat = bad.reshape(-1)
    idx = int(np.flatnonzero(~np.isfinite(flat))[0]) if not np.all(
        np.isfinite(flat)) else 0
    vals = np.asarray(values).reshape(len(var_names), -1)[:, idx]
    env = dict(zip(var_names, vals))
    culprit = _find_bad_node(node, env) or node
    raise EvaluationError(
        f"non-finite value from {to_source(culprit)!r} at "
        + ", ".join(f"{k}={v:.6g}" for k, v in env.items()),
        culprit)


def eval_jet2(node, var_names, values):
    """Value, gradient and Hessian of an AST over a batch of points.

    values has shape (m,) + batch; returns a Jet2 with matching shapes.
    """
    with np.errstate(all="ignore"):
        res = _eval_jet(node, _seed_jets(values, 2))
    values = np.asarray(values, dtype=float)
    res = _broadcast_jet(res, values.shape[0], values.shape[1:], 2)
    _raise_on_nonfinite(node, res, var_names, values)
    return res


def eval_jet1(node, var_names, values):
    """Value and gradient only (cheaper; used in flow integration)."""
    with np.errstate(all="ignore"):
        res = _eval_jet(node, _seed_jets(values, 1))
    values = np.asarray(values, dtype=float)
    res = _broadcast_jet(res, values.shape[0], values.shape[1:], 1)
    _raise_on_nonfinite(node, res, var_names, values)
    return res
