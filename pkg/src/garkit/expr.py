"""A tiny expression language over one variable ``x``.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | 'x' | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Functions: exp, log, abs, sqrt (one argument), pow (two), and cdf (the CDF of
the bound distribution model). Evaluation works elementwise on numpy arrays
and raises instead of returning NaN or infinities.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import EvalError, MissingModel, ParseError, UnknownName
from .functions import InfluenceFunction, WeightFunction


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Neg, BinOp, Call]

ARITY = {"exp": 1, "log": 1, "abs": 1, "sqrt": 1, "pow": 2, "cdf": 1}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num", "name", "op", "end"
    text: str
    offset: int


def tokenize(src: str) -> list:
    tokens = []
    pos = 0
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            tokens.append(_Tok("end", "", len(src)))
            return tokens
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            raise ParseError(pos, {"number", "x", "function", "operator"}, f"unexpected character {src[pos]!r}")
        kind = m.lastgroup
        tokens.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind != "op":
            raise ParseError(self.tok.offset, {text})
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(self.tok.offset, {"+", "-", "*", "/", "^", "end of input"})
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "name":
            self.advance()
            if t.text == "x":
                return Var()
            if t.text not in ARITY:
                raise UnknownName(t.offset, t.text)
            self.expect("(")
            args = [self.expr()]
            while self.tok.kind == "op" and self.tok.text == ",":
                self.advance()
                args.append(self.expr())
            close = self.tok
            self.expect(")")
            if len(args) != ARITY[t.text]:
                raise ParseError(close.offset, {")"}, f"{t.text}() takes {ARITY[t.text]} argument(s), got {len(args)}")
            return Call(t.text, tuple(args))
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(t.offset, {"number", "x", "function", "(", "-"})


def parse(src: str) -> Expr:
    return _Parser(src).parse()


def to_source(e: Expr) -> str:
    """Fully parenthesised source text; ``parse(to_source(e)) == e``."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}(" + ", ".join(to_source(a) for a in e.args) + ")"
    raise TypeError(f"not an expression node: {e!r}")


def uses_cdf(e: Expr) -> bool:
    if isinstance(e, Call):
        return e.name == "cdf" or any(uses_cdf(a) for a in e.args)
    if isinstance(e, Neg):
        return uses_cdf(e.operand)
    if isinstance(e, BinOp):
        return uses_cdf(e.left) or uses_cdf(e.right)
    return False


def _finite(v: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise EvalError(f"{what} produced a non-finite value")
    return v


def _eval(e: Expr, x: np.ndarray, model) -> np.ndarray:
    if isinstance(e, Num):
        return np.full(x.shape, e.value)
    if isinstance(e, Var):
        return x
    if isinstance(e, Neg):
        return -_eval(e.operand, x, model)
    if isinstance(e, BinOp):
        a = _eval(e.left, x, model)
        b = _eval(e.right, x, model)
        with np.errstate(all="ignore"):
            if e.op == "+":
                return _finite(a + b, "addition")
            if e.op == "-":
                return _finite(a - b, "subtraction")
            if e.op == "*":
                return _finite(a * b, "multiplication")
            if e.op == "/":
                if np.any(b == 0):
                    raise EvalError("division by zero")
                return _finite(a / b, "division")
            return _power(a, b)
    if isinstance(e, Call):
        args = [_eval(a, x, model) for a in e.args]
        return _call(e.name, args, model)
    raise TypeError(f"not an expression node: {e!r}")


def _power(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if np.any((a < 0) & (b != np.round(b))):
        raise EvalError("negative base with non-integer exponent")
    if np.any((a == 0) & (b < 0)):
        raise EvalError("zero raised to a negative power")
    with np.errstate(all="ignore"):
        return _finite(np.power(a, b), "power")


def _call(name: str, args: list, model) -> np.ndarray:
    (a, *rest) = args
    with np.errstate(all="ignore"):
        if name == "exp":
            return _finite(np.exp(a), "exp")
        if name == "log":
            if np.any(a <= 0):
                raise EvalError("log of a non-positive number")
            return np.log(a)
        if name == "abs":
            return np.abs(a)
        if name == "sqrt":
            if np.any(a < 0):
                raise EvalError("sqrt of a negative number")
            return np.sqrt(a)
        if name == "pow":
            return _power(a, rest[0])
        if name == "cdf":
            if model is None or getattr(model, "bivariate", False):
                raise MissingModel()
            return np.asarray(model.cdf(a), dtype=float)
    raise EvalError(f"unknown function {name}")


def evaluate(e: Expr, x, model=None):
    """Value of ``e`` at ``x`` (scalar or array); ``model`` binds ``cdf``."""
    arr = np.asarray(x, dtype=float)
    out = _eval(e, arr, model)
    out = np.broadcast_to(out, arr.shape).astype(float)
    return float(out) if out.ndim == 0 else out


def influence(src: str, model=None) -> InfluenceFunction:
    e = parse(src)
    return InfluenceFunction(lambda x: evaluate(e, x, model), src.strip())


def weight(src: str, model=None) -> WeightFunction:
    e = parse(src)
    return WeightFunction(lambda x: evaluate(e, x, model), src.strip())
