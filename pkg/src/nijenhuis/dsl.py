"""Scalar expression language over named chart coordinates.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | atom ("^" integer)?
    atom   := number | ident | ident "(" expr ")" | "(" expr ")"

Functions are ``sin``, ``cos``, ``exp`` and ``log``.  ``^`` binds tighter than
unary minus and only accepts a non-negative integer literal as exponent.
Coordinate names are case-sensitive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import jets
from .errors import DomainError, DimensionError, ParseError, SourceSpan, UnknownFunction, UnknownIdentifier
from .jets import Jet2

MAX_DEPTH = 256
FUNCTIONS = ("sin", "cos", "exp", "log")


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: float
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var(Expr):
    name: str
    index: int
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    arg: Expr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)
_INT = re.compile(r"\d+")


@dataclass
class _Tok:
    kind: str
    text: str
    start: int
    end: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos == len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", SourceSpan(pos, pos + 1), text)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind), m.end(kind)))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text), len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, coords: Sequence[str]):
        self.text = text
        self.coords = {name: i for i, name in enumerate(coords)}
        self.toks = _tokenize(text)
        self.i = 0
        self.nesting = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None, cls=ParseError):
        tok = tok or self.tok
        return cls(msg, SourceSpan(tok.start, max(tok.end, tok.start)), self.text)

    def advance(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def parse(self) -> Expr:
        if self.tok.kind == "eof":
            raise self.error("empty expression")
        node, depth = self.expr()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected token {self.tok.text!r}")
        return node

    def _check_depth(self, depth: int, start: int):
        if depth > MAX_DEPTH:
            raise ParseError(f"expression deeper than {MAX_DEPTH}", SourceSpan(start, self.tok.start), self.text)

    def expr(self):
        start = self.tok.start
        left, depth = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            right, rd = self.term()
            depth = max(depth, rd) + 1
            self._check_depth(depth, start)
            left = Binary(op, left, right, span=SourceSpan(start, self.toks[self.i - 1].end))
        return left, depth

    def term(self):
        start = self.tok.start
        left, depth = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            right, rd = self.factor()
            depth = max(depth, rd) + 1
            self._check_depth(depth, start)
            left = Binary(op, left, right, span=SourceSpan(start, self.toks[self.i - 1].end))
        return left, depth

    def factor(self):
        # leading minus signs are collected in a loop to keep recursion shallow
        minus = []
        while self.tok.kind == "op" and self.tok.text == "-":
            minus.append(self.advance().start)
        node, depth = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            t = self.tok
            if t.kind != "num" or not _INT.fullmatch(t.text):
                raise self.error("exponent must be an integer literal", t)
            self.advance()
            depth += 1
            node = Binary("^", node, Const(float(int(t.text)), span=SourceSpan(t.start, t.end)),
                          span=SourceSpan(_span_start(node), t.end))
        end = self.toks[self.i - 1].end
        for s in reversed(minus):
            depth += 1
            node = Unary("-", node, span=SourceSpan(s, end))
        self._check_depth(depth, minus[0] if minus else _span_start(node))
        return node, depth

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(float(t.text), span=SourceSpan(t.start, t.end)), 1
        if t.kind == "id":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                if t.text not in FUNCTIONS:
                    raise self.error(f"unknown function {t.text!r}", t, UnknownFunction)
                arg, depth = self.paren()
                return Call(t.text, arg, span=SourceSpan(t.start, self.toks[self.i - 1].end)), depth + 1
            if t.text not in self.coords:
                raise self.error(f"unknown identifier {t.text!r}", t, UnknownIdentifier)
            return Var(t.text, self.coords[t.text], span=SourceSpan(t.start, t.end)), 1
        if t.kind == "op" and t.text == "(":
            return self.paren()
        if t.kind == "eof":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected token {t.text!r}")

    def paren(self):
        open_tok = self.advance()
        self.nesting += 1
        if self.nesting > MAX_DEPTH:
            raise self.error(f"parentheses nested deeper than {MAX_DEPTH}", open_tok)
        node, depth = self.expr()
        if self.tok.kind != "op" or self.tok.text != ")":
            raise ParseError("unbalanced parenthesis", SourceSpan(open_tok.start, self.tok.end), self.text)
        self.advance()
        self.nesting -= 1
        return node, depth


def _span_start(node: Expr) -> int:
    return node.span.start if node.span is not None else 0


def parse(text: str, coords: Sequence[str]) -> Expr:
    """Parse ``text`` into an expression over the declared coordinate names."""
    if not isinstance(text, str):
        text = str(text)
    try:
        return _Parser(text, coords).parse()
    except RecursionError:
        raise ParseError("expression nested too deeply", SourceSpan(0, len(text)), text) from None


# ---------------------------------------------------------------- printing

def to_string(e: Expr) -> str:
    """Fully parenthesised source form; parsing it back evaluates identically."""
    if isinstance(e, Const):
        s = repr(float(e.value))
        return f"({s})" if s.startswith("-") else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        return f"(-{to_string(e.arg)})"
    if isinstance(e, Call):
        return f"{e.fn}({to_string(e.arg)})"
    if isinstance(e, Binary):
        if e.op == "^":
            return f"({to_string(e.left)})^{int(e.right.value)}"
        return f"({to_string(e.left)} {e.op} {to_string(e.right)})"
    raise TypeError(f"not an expression: {e!r}")


def variables(e: Expr) -> set[int]:
    """Coordinate indices the expression depends on."""
    out: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.index)
        elif isinstance(node, (Unary, Call)):
            stack.append(node.arg)
        elif isinstance(node, Binary):
            stack.extend((node.left, node.right))
    return out


# ---------------------------------------------------------------- evaluation

_REAL_FN = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log}
_JET_FN = {"sin": jets.jet_sin, "cos": jets.jet_cos, "exp": jets.jet_exp, "log": jets.jet_log}


def _point_array(point, n_min: int) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.shape[-1] < n_min:
        raise DimensionError(f"point has {p.shape[-1]} coordinates, expression needs {n_min}")
    return p


def _raise_domain(node: Expr, p: np.ndarray, message: str, mask: np.ndarray):
    pt = p if p.ndim == 1 else p[tuple(np.argwhere(mask)[0])]
    raise DomainError(message, to_string(node), pt)


class _Evaluator:
    def __init__(self, p: np.ndarray, jet: bool):
        self.p = p
        self.jet = jet
        self.shape = p.shape[:-1]
        self.n = p.shape[-1]
        self.cache: dict[int, object] = {}
        # keep nodes alive so id() keys are not recycled during evaluation
        self.alive: list[Expr] = []

    def __call__(self, node: Expr):
        key = id(node)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        out = self._eval(node)
        self.cache[key] = out
        self.alive.append(node)
        return out

    def _eval(self, node: Expr):
        if isinstance(node, Const):
            if self.jet:
                return Jet2.constant(node.value, self.n, self.shape)
            return np.full(self.shape, float(node.value))
        if isinstance(node, Var):
            if node.index >= self.n:
                raise DimensionError(f"variable {node.name} has index {node.index} outside dimension {self.n}")
            if self.jet:
                return jets.jet_lift_var(node.index, self.p)
            return self.p[..., node.index].copy()
        if isinstance(node, Unary):
            return -self(node.arg)
        if isinstance(node, Call):
            a = self(node.arg)
            if node.fn == "log":
                v = a.value if self.jet else a
                if np.any(v <= 0):
                    _raise_domain(node, self.p, "log of non-positive value", v <= 0)
            return _JET_FN[node.fn](a) if self.jet else _REAL_FN[node.fn](a)
        if isinstance(node, Binary):
            a = self(node.left)
            if node.op == "^":
                k = int(node.right.value)
                return jets.jet_pow(a, k) if self.jet else a**k
            b = self(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                v = b.value if self.jet else b
                if np.any(v == 0):
                    _raise_domain(node, self.p, "division by zero", v == 0)
                return a / b
        raise TypeError(f"cannot evaluate {node!r}")


def _needed_dim(exprs: Iterable[Expr]) -> int:
    m = 0
    for e in exprs:
        v = variables(e)
        if v:
            m = max(m, max(v) + 1)
    return m


def eval_real(e: Expr, point):
    """Evaluate at one point (shape ``(n,)``) or a batch (shape ``(..., n)``)."""
    p = _point_array(point, _needed_dim([e]))
    out = _Evaluator(p, jet=False)(e)
    return float(out) if p.ndim == 1 else out


def eval_jet(e: Expr, point) -> Jet2:
    """Value, gradient and Hessian of ``e`` at ``point`` (batched like :func:`eval_real`)."""
    p = _point_array(point, _needed_dim([e]))
    return _Evaluator(p, jet=True)(e)


def eval_real_many(exprs: Sequence[Expr], point) -> np.ndarray:
    """Evaluate several expressions sharing one cache; result has shape ``S + (len(exprs),)``."""
    p = _point_array(point, _needed_dim(exprs))
    ev = _Evaluator(p, jet=False)
    return np.stack([np.asarray(ev(e), dtype=float) for e in exprs], axis=-1)


def eval_jet_many(exprs: Sequence[Expr], point) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stacked ``(values, grads, hessians)`` of several expressions at the same points.

    Shapes are ``S + (m,)``, ``S + (m, n)`` and ``S + (m, n, n)``.
    """
    p = _point_array(point, _needed_dim(exprs))
    ev = _Evaluator(p, jet=True)
    js = [ev(e) for e in exprs]
    return (np.stack([j.value for j in js], axis=-1),
            np.stack([j.grad for j in js], axis=-2),
            np.stack([j.hess for j in js], axis=-3))


def compile_real(e: Expr) -> Callable[[np.ndarray], float]:
    return lambda p: eval_real(e, p)


# ---------------------------------------------------------------- symbolic helpers
# Smart constructors fold constants and drop neutral elements; they are used for
# derived objects (derivatives, lifts, brackets) and never by the parser.

ZERO = Const(0.0)
ONE = Const(1.0)


def const(c: float) -> Const:
    return Const(float(c))


def _is_const(e: Expr, c: float | None = None) -> bool:
    return isinstance(e, Const) and (c is None or e.value == c)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    return Binary("/", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary):
        return a.arg
    return Unary("-", a)


def power(a: Expr, k: int) -> Expr:
    if k < 0:
        raise ValueError("only non-negative integer exponents are representable")
    if k == 0:
        return ONE
    if k == 1:
        return a
    if isinstance(a, Const):
        return Const(a.value**k)
    return Binary("^", a, Const(float(k)))


def call(fn: str, a: Expr) -> Expr:
    if fn not in FUNCTIONS:
        raise ValueError(f"unknown function {fn!r}")
    return Call(fn, a)


def total(terms: Iterable[Expr]) -> Expr:
    out: Expr = ZERO
    for t in terms:
        out = add(out, t)
    return out


def diff(e: Expr, index: int, _memo: dict | None = None) -> Expr:
    """Symbolic partial derivative with respect to coordinate ``index``."""
    memo = {} if _memo is None else _memo
    key = id(e)
    if key in memo:
        return memo[key][1]
    if index not in variables(e):
        out: Expr = ZERO
    elif isinstance(e, Var):
        out = ONE if e.index == index else ZERO
    elif isinstance(e, Unary):
        out = neg(diff(e.arg, index, memo))
    elif isinstance(e, Call):
        u = e.arg
        du = diff(u, index, memo)
        outer = {"sin": call("cos", u), "cos": neg(call("sin", u)), "exp": e, "log": div(ONE, u)}[e.fn]
        out = mul(outer, du)
    elif isinstance(e, Binary):
        a, b = e.left, e.right
        if e.op == "^":
            k = int(b.value)
            out = ZERO if k == 0 else mul(mul(const(k), power(a, k - 1)), diff(a, index, memo))
        else:
            da, db = diff(a, index, memo), diff(b, index, memo)
            if e.op == "+":
                out = add(da, db)
            elif e.op == "-":
                out = sub(da, db)
            elif e.op == "*":
                out = add(mul(da, b), mul(a, db))
            else:
                out = div(sub(mul(da, b), mul(a, db)), power(b, 2))
    else:
        out = ZERO
    memo[key] = (e, out)
    return out


def substitute(e: Expr, mapping: Callable[[Var], Expr]) -> Expr:
    """Replace every variable ``v`` by ``mapping(v)``; shared subtrees stay shared."""
    memo: dict[int, tuple[Expr, Expr]] = {}

    def go(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key][1]
        if isinstance(node, Var):
            out = mapping(node)
        elif isinstance(node, Const):
            out = node
        elif isinstance(node, Unary):
            out = Unary(node.op, go(node.arg))
        elif isinstance(node, Call):
            out = Call(node.fn, go(node.arg))
        else:
            out = Binary(node.op, go(node.left), go(node.right) if node.op != "^" else node.right)
        memo[key] = (node, out)
        return out

    return go(e)
