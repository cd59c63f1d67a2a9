"""Pointwise operator expressions phi(x, u).

Grammar (standard precedence, left associative, whitespace ignored)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := ['-'] primary
    primary := number | 'x' | 'u' | ident '(' args ')' | '(' expr ')'

Functions: sin, cos, tanh, abs (unary) and min, max (binary).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import FixpointError

FUNCTIONS = {"sin": 1, "cos": 1, "tanh": 1, "abs": 1, "min": 2, "max": 2}
VARIABLES = ("x", "u")


class ParseError(FixpointError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvaluationError(FixpointError, ArithmeticError):
    def __init__(self, message: str, path: str, atom: Optional[int] = None):
        where = f" at node {path}" if path else ""
        if atom is not None:
            where += f", atom {atom}"
        super().__init__(message + where)
        self.path = path
        self.atom = atom


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    text: str = field(compare=False)


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
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]


def Add(a, b):
    return BinOp("+", a, b)


def Sub(a, b):
    return BinOp("-", a, b)


def Mul(a, b):
    return BinOp("*", a, b)


def Div(a, b):
    return BinOp("/", a, b)


def number(v: float) -> Num:
    return Num(float(v), repr(float(v)) if not float(v).is_integer() else str(int(v)))


# -- lexer -------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/(),])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    """Return (kind, text, offset) triples, ending with an ('end', '', len) marker."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self):
        if self.peek()[0] == "end":
            raise ParseError("empty expression", 0)
        node = self.expr()
        kind, tok, off = self.peek()
        if kind != "end":
            if tok == ")":
                raise ParseError("unbalanced parenthesis: unmatched ')'", off)
            raise ParseError(f"unexpected token {tok!r}", off)
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
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.primary())
        return self.primary()

    def expect_close(self, open_offset):
        kind, tok, off = self.peek()
        if tok != ")" or kind != "op":
            if kind == "end":
                raise ParseError("unbalanced parenthesis: '(' never closed", open_offset)
            raise ParseError(f"expected ')' but found {tok!r}", off)
        self.advance()

    def primary(self):
        kind, tok, off = self.advance()
        if kind == "num":
            return Num(float(tok), tok)
        if kind == "ident":
            if tok in VARIABLES:
                if self.peek()[1] == "(":
                    raise ParseError(f"{tok!r} is a variable, not a function", off)
                return Var(tok)
            if tok not in FUNCTIONS:
                raise ParseError(f"unknown identifier {tok!r}", off)
            kind2, tok2, off2 = self.advance()
            if tok2 != "(":
                raise ParseError(f"expected '(' after {tok!r}", off2)
            args = [self.expr()]
            while self.peek()[1] == ",":
                self.advance()
                args.append(self.expr())
            self.expect_close(off2)
            if len(args) != FUNCTIONS[tok]:
                raise ParseError(
                    f"{tok} takes {FUNCTIONS[tok]} argument(s), got {len(args)}", off
                )
            return Call(tok, tuple(args))
        if tok == "(":
            node = self.expr()
            self.expect_close(off)
            return node
        if kind == "end":
            raise ParseError("unexpected end of expression", off)
        if tok == ")":
            raise ParseError("unbalanced parenthesis: unmatched ')'", off)
        raise ParseError(f"unexpected token {tok!r}", off)


def parse(text: str) -> Node:
    """Parse an operator expression into an AST."""
    return _Parser(text).parse()


# -- printing ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    return 3


def pretty(node: Node) -> str:
    """Render with the fewest parentheses that parse back to the same tree."""
    if isinstance(node, Num):
        return node.text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({', '.join(pretty(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = pretty(node.operand)
        if isinstance(node.operand, (Num, Var, Call)):
            return "-" + inner
        return f"-({inner})"
    p = _PREC[node.op]
    left = pretty(node.left)
    if _prec(node.left) < p:
        left = f"({left})"
    right = pretty(node.right)
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def uses_variable(node: Node, name: str) -> bool:
    if isinstance(node, Var):
        return node.name == name
    if isinstance(node, Num):
        return False
    if isinstance(node, Neg):
        return uses_variable(node.operand, name)
    if isinstance(node, BinOp):
        return uses_variable(node.left, name) or uses_variable(node.right, name)
    return any(uses_variable(a, name) for a in node.args)


# -- evaluation --------------------------------------------------------------

_SCALAR_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "tanh": math.tanh,
    "abs": abs,
    "min": min,
    "max": max,
}


def eval_ast(node: Node, x: float, s: float, _path: str = "root") -> float:
    """Evaluate at a single point, with ``u`` bound to ``s``."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else s
    if isinstance(node, Neg):
        return -eval_ast(node.operand, x, s, _path + ".operand")
    if isinstance(node, Call):
        args = [eval_ast(a, x, s, f"{_path}.args[{i}]") for i, a in enumerate(node.args)]
        return float(_SCALAR_FUNCS[node.func](*args))
    a = eval_ast(node.left, x, s, _path + ".left")
    b = eval_ast(node.right, x, s, _path + ".right")
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if b == 0:
        raise EvaluationError("division by zero", _path)
    return a / b


_ARRAY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "abs": np.abs,
    "min": np.minimum,
    "max": np.maximum,
}


def evaluate(node: Node, x, s, _path: str = "root"):
    """Vectorised evaluation; ``x`` and ``s`` broadcast against each other.

    Division by zero raises EvaluationError naming the node and the first
    offending atom (last-axis index).
    """
    if isinstance(node, Num):
        return np.broadcast_to(np.float64(node.value), np.broadcast(x, s).shape)
    if isinstance(node, Var):
        v = x if node.name == "x" else s
        return np.broadcast_to(np.asarray(v, dtype=float), np.broadcast(x, s).shape)
    if isinstance(node, Neg):
        return -evaluate(node.operand, x, s, _path + ".operand")
    if isinstance(node, Call):
        args = [evaluate(a, x, s, f"{_path}.args[{i}]") for i, a in enumerate(node.args)]
        return _ARRAY_FUNCS[node.func](*args)
    a = evaluate(node.left, x, s, _path + ".left")
    b = evaluate(node.right, x, s, _path + ".right")
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    zero = b == 0
    if np.any(zero):
        first = np.argwhere(np.atleast_1d(zero))[0]
        raise EvaluationError("division by zero", _path, atom=int(first[-1]))
    return a / b


# -- interval Lipschitz bound ------------------------------------------------


class _Interval:
    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        self.lo = float(lo)
        self.hi = float(lo if hi is None else hi)

    def __add__(self, o):
        return _Interval(self.lo + o.lo, self.hi + o.hi)

    def __sub__(self, o):
        return _Interval(self.lo - o.hi, self.hi - o.lo)

    def __neg__(self):
        return _Interval(-self.hi, -self.lo)

    def __mul__(self, o):
        c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi]
        c = [0.0 if math.isnan(v) else v for v in c]  # 0 * inf
        return _Interval(min(c), max(c))

    def contains_zero(self):
        return self.lo <= 0.0 <= self.hi

    def reciprocal(self):
        return _Interval(1.0 / self.hi, 1.0 / self.lo)

    def hull(self, o):
        return _Interval(min(self.lo, o.lo), max(self.hi, o.hi))

    def mag(self):
        return max(abs(self.lo), abs(self.hi))


def _contains_point(iv, base, period=2 * math.pi):
    """Does iv contain base + k*period for some integer k?"""
    k = math.ceil((iv.lo - base) / period)
    return base + k * period <= iv.hi


def _isin(iv):
    if iv.hi - iv.lo >= 2 * math.pi:
        return _Interval(-1, 1)
    vals = [math.sin(iv.lo), math.sin(iv.hi)]
    lo, hi = min(vals), max(vals)
    if _contains_point(iv, math.pi / 2):
        hi = 1.0
    if _contains_point(iv, -math.pi / 2):
        lo = -1.0
    return _Interval(lo, hi)


def _icos(iv):
    return _isin(iv + _Interval(math.pi / 2))


def _bound(node, X, S):
    """Return (value interval, d/du interval) or None when no rule applies."""
    if isinstance(node, Num):
        return _Interval(node.value), _Interval(0.0)
    if isinstance(node, Var):
        return (X, _Interval(0.0)) if node.name == "x" else (S, _Interval(1.0))
    if isinstance(node, Neg):
        r = _bound(node.operand, X, S)
        return None if r is None else (-r[0], -r[1])
    if isinstance(node, Call):
        rs = [_bound(a, X, S) for a in node.args]
        if any(r is None for r in rs):
            return None
        (a, da) = rs[0]
        if node.func == "sin":
            return _isin(a), _icos(a) * da
        if node.func == "cos":
            return _icos(a), -_isin(a) * da
        if node.func == "tanh":
            t = _Interval(math.tanh(a.lo), math.tanh(a.hi))
            sq_hi = 0.0 if a.contains_zero() else min(t.lo**2, t.hi**2)
            sq_lo = max(t.lo**2, t.hi**2)
            return t, _Interval(1.0 - sq_lo, 1.0 - sq_hi) * da
        if node.func == "abs":
            if a.lo >= 0:
                return a, da
            if a.hi <= 0:
                return -a, -da
            return _Interval(0.0, a.mag()), da.hull(-da)
        (b, db) = rs[1]
        if node.func == "min":
            val = _Interval(min(a.lo, b.lo), min(a.hi, b.hi))
            if a.hi < b.lo:
                return val, da
            if b.hi < a.lo:
                return val, db
            return val, da.hull(db)
        val = _Interval(max(a.lo, b.lo), max(a.hi, b.hi))
        if a.lo > b.hi:
            return val, da
        if b.lo > a.hi:
            return val, db
        return val, da.hull(db)
    l = _bound(node.left, X, S)
    r = _bound(node.right, X, S)
    if l is None or r is None:
        return None
    (a, da), (b, db) = l, r
    if node.op == "+":
        return a + b, da + db
    if node.op == "-":
        return a - b, da - db
    if node.op == "*":
        return a * b, da * b + a * db
    if b.contains_zero():
        return None
    inv = b.reciprocal()
    if db.lo == db.hi == 0.0:
        return a * inv, da * inv
    return a * inv, (da * b - a * db) * inv * inv


def lipschitz_bound_in_u(node: Node, K) -> Optional[float]:
    """Upper bound on |d phi / du| over the box K, or None when unknown.

    x ranges over the hull of K's grid, u over [min lower, max upper].
    A bound <= 1 is a sufficient condition for strong nonexpansiveness on K.
    """
    X = _Interval(*K.lower.grid.hull)
    S = _Interval(float(np.min(K.lower.values)), float(np.max(K.upper.values)))
    r = _bound(node, X, S)
    if r is None:
        return None
    m = r[1].mag()
    return None if math.isnan(m) else m
