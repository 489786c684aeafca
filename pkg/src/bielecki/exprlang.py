"""Arithmetic expressions for kernels, moduli, forcings and substitutions.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ "^" unary ] ;            (* right associative *)
    atom    = number | name | name "(" expr { "," expr } ")" | "(" expr ")" ;
    number  = digits [ "." [ digits ] ] [ exponent ] | "." digits [ exponent ] ;
    exponent = ("e" | "E") [ "+" | "-" ] digits ;

``^`` binds tighter than unary minus, so ``-t^2`` is ``-(t^2)``; the exponent
of ``^`` may itself be negated (``2^-1``).  Functions: ``exp log sin cos sqrt
abs tanh`` (one argument) and ``min max pow`` (two).  Evaluation works on
floats and on ``numpy`` arrays alike.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import BieleckiError

__all__ = [
    "ArityError",
    "BinOp",
    "Call",
    "EvalContext",
    "Expr",
    "ExprDomainError",
    "ExprError",
    "Neg",
    "Num",
    "ParseError",
    "UnboundVariableError",
    "UnknownIdentifierError",
    "Var",
    "declared_variables",
    "evaluate",
    "parse",
    "to_text",
]

UNARY_FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt", "abs", "tanh")
BINARY_FUNCTIONS = ("min", "max", "pow")
FUNCTIONS = {name: 1 for name in UNARY_FUNCTIONS} | {name: 2 for name in BINARY_FUNCTIONS}


class ExprError(BieleckiError):
    pass


class ParseError(ExprError, ValueError):
    """Syntax error; ``offset`` is the byte offset into the source text."""

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(expected)
        detail = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class UnknownIdentifierError(ParseError):
    pass


class ArityError(ParseError):
    pass


class ExprDomainError(ExprError, ArithmeticError):
    def __init__(self, message, subexpr):
        self.subexpr = subexpr
        super().__init__(f"{message} in {to_text(subexpr)}")


class UnboundVariableError(ExprError, KeyError):
    def __str__(self):
        return f"variable {self.args[0]!r} is not bound"


# AST --------------------------------------------------------------------


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple


def to_text(expr: Expr) -> str:
    """Fully parenthesized source text; ``parse(to_text(e))`` rebuilds ``e``."""
    if isinstance(expr, Num):
        return repr(float(expr.value))
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{to_text(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({to_text(expr.left)} {expr.op} {to_text(expr.right)})"
    if isinstance(expr, Call):
        return f"{expr.name}({', '.join(to_text(a) for a in expr.args)})"
    raise TypeError(f"not an expression node: {expr!r}")


# Tokens -----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    toks.append(_Tok("eof", "", _byte_offset(text, len(text))))
    return toks


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


# Parser -----------------------------------------------------------------

_ATOM_START = ("number", "identifier", "'('", "'-'")


class _Parser:
    def __init__(self, text, declared):
        self.toks = _tokenize(text)
        self.pos = 0
        self.declared = declared

    @property
    def tok(self):
        return self.toks[self.pos]

    def take(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text):
        if self.tok.text != text or self.tok.kind != "op":
            raise ParseError(f"unexpected {self._describe(self.tok)}", self.tok.offset, (repr(text),))
        return self.take()

    @staticmethod
    def _describe(tok):
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def parse(self):
        e = self.expr()
        if self.tok.kind != "eof":
            raise ParseError(
                f"unexpected {self._describe(self.tok)}", self.tok.offset, ("operator", "end of input")
            )
        return e

    def expr(self):
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.take().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.take()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.take()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(tok)
            if tok.text in FUNCTIONS:
                raise ParseError(f"function {tok.text!r} needs arguments", self.tok.offset, ("'('",))
            if self.declared is not None and tok.text not in self.declared:
                raise UnknownIdentifierError(
                    f"unknown identifier {tok.text!r}", tok.offset, tuple(sorted(self.declared))
                )
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {self._describe(tok)}", tok.offset, _ATOM_START)

    def call(self, name_tok):
        name = name_tok.text
        if name not in FUNCTIONS:
            raise UnknownIdentifierError(f"unknown function {name!r}", name_tok.offset, FUNCTIONS)
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.take()
            args.append(self.expr())
        self.expect(")")
        if len(args) != FUNCTIONS[name]:
            raise ArityError(
                f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}", name_tok.offset
            )
        return Call(name, tuple(args))


def parse(text: str, declared_vars: Iterable[str] | None = None) -> Expr:
    """Parse ``text`` into an AST.

    Identifiers must be in ``declared_vars`` when it is given.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0, _ATOM_START)
    declared = None if declared_vars is None else frozenset(declared_vars)
    return _Parser(text, declared).parse()


def declared_variables(n: int, m: int = 1, with_s: bool = False, with_x: bool = False, x_count: int | None = None) -> frozenset:
    """Names available for an ``n``-dimensional domain and codomain ``R^m``.

    ``t1..tn`` (alias ``t`` when ``n == 1``); with ``with_s`` also ``s1..sn``
    (alias ``s``); with ``with_x`` also ``x1..xk`` (alias ``x`` when
    ``k == 1``), where ``k`` is ``x_count`` or ``m``.
    """
    names = {f"t{i}" for i in range(1, n + 1)}
    if n == 1:
        names.add("t")
    if with_s:
        names |= {f"s{i}" for i in range(1, n + 1)}
        if n == 1:
            names.add("s")
    if with_x:
        k = m if x_count is None else x_count
        names |= {f"x{i}" for i in range(1, k + 1)}
        if k == 1:
            names.add("x")
    return frozenset(names)


class EvalContext(dict):
    """Variable bindings; values may be floats or equally shaped arrays."""

    def __init__(self, bindings: Mapping | None = None, **kw):
        super().__init__(bindings or {}, **kw)

    def __missing__(self, key):
        raise UnboundVariableError(key)


def _domain(ok, message, node):
    if not np.all(ok):
        raise ExprDomainError(message, node)


def _eval(node, ctx):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return ctx[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, ctx)
    if isinstance(node, BinOp):
        a = _eval(node.left, ctx)
        b = _eval(node.right, ctx)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            _domain(np.asarray(b) != 0, "division by zero", node)
            return np.divide(a, b)
        return _power(a, b, node)
    if isinstance(node, Call):
        args = [_eval(a, ctx) for a in node.args]
        name = node.name
        if name == "pow":
            return _power(args[0], args[1], node)
        if name == "min":
            return np.minimum(*args)
        if name == "max":
            return np.maximum(*args)
        (a,) = args
        if name == "log":
            _domain(np.asarray(a) > 0, "log of a nonpositive number", node)
            return np.log(a)
        if name == "sqrt":
            _domain(np.asarray(a) >= 0, "sqrt of a negative number", node)
            return np.sqrt(a)
        if name == "abs":
            return np.abs(a)
        return getattr(np, name)(a)
    raise TypeError(f"not an expression node: {node!r}")


def _power(a, b, node):
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    _domain(~((a_arr == 0) & (b_arr < 0)), "zero raised to a negative power", node)
    _domain(~((a_arr < 0) & (b_arr != np.round(b_arr))), "negative base with non-integer exponent", node)
    return np.power(a, b, dtype=float)


def evaluate(expr: Expr, ctx: Mapping) -> float | np.ndarray:
    """Evaluate in IEEE double precision.

    Raises
    ------
    ExprDomainError
        For log/sqrt outside their domain, ``0^negative``, division by zero,
        or a non-finite result.
    UnboundVariableError
        If a variable has no binding.
    """
    if not isinstance(ctx, EvalContext):
        ctx = EvalContext(ctx)
    with np.errstate(all="ignore"):
        out = _eval(expr, ctx)
    _domain(np.isfinite(out), "non-finite result", expr)
    if np.ndim(out) == 0:
        return float(out)
    return np.asarray(out, dtype=float)
