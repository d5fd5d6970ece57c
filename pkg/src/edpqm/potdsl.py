"""A tiny expression language for potentials and energy dependences.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | 'x' | 'E' | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := 'sqrt' | 'exp' | 'abs'

``^`` binds tighter than unary minus (``-x^2 == -(x^2)``) and is
right-associative.  Exponents may not depend on ``x`` or ``E``.

Evaluation works on floats or numpy arrays alike.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

VARIABLES = ("x", "E")
FUNCTIONS = ("sqrt", "exp", "abs")


class ParseError(ValueError):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        self.offset = offset
        self.expected = expected
        detail = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class DomainError(ArithmeticError):
    def __init__(self, message: str, node: "Expr"):
        self.node = node
        super().__init__(f"{message} in '{pretty(node)}'")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    offset: int = -1


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            bad = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ParseError(f"unexpected character {src[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def fail(self, expected):
        kind, text, off = self.tok
        what = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {what}", off, frozenset(expected))

    def expect(self, text):
        if self.tok[1] != text or self.tok[0] != "op":
            self.fail({text})
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok[0] != "end":
            self.fail({"+", "-", "*", "/", "^", "end of input"})
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            _, op, off = self.advance()
            left = BinOp(op, left, self.term(), off)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            _, op, off = self.advance()
            left = BinOp(op, left, self.unary(), off)
        return left

    def unary(self) -> Expr:
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            _, _, off = self.advance()
            start = self.tok[2]
            exponent = self.unary()
            if free_variables(exponent):
                raise ParseError("exponent must not depend on x or E", start)
            return BinOp("^", base, exponent, off)
        return base

    def atom(self) -> Expr:
        kind, text, off = self.tok
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "name":
            if text in VARIABLES:
                self.advance()
                return Var(text)
            if text in FUNCTIONS:
                self.advance()
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise ParseError(f"unknown name {text!r}", off, frozenset(VARIABLES + FUNCTIONS))
        if kind == "op" and text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.fail({"number", "x", "E", "(", *FUNCTIONS})


def parse(src: str) -> Expr:
    """Parse ``src`` into an expression tree."""
    return _Parser(src).parse()


def free_variables(e: Expr) -> set[str]:
    if isinstance(e, Num):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, Call):
        return free_variables(e.arg)
    return free_variables(e.left) | free_variables(e.right)


def evaluate(e: Expr, x=0.0, E=0.0):
    """Evaluate ``e`` at ``x`` and ``E`` (floats or broadcastable arrays).

    Raises DomainError for sqrt of a negative number, division by zero and
    non-finite results.
    """
    with np.errstate(all="ignore"):
        return _eval(e, x, E)


def _check(value, node):
    if not np.all(np.isfinite(value)):
        raise DomainError("non-finite result", node)
    return value


def _eval(e, x, E):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x if e.name == "x" else E
    if isinstance(e, Neg):
        return -_eval(e.operand, x, E)
    if isinstance(e, Call):
        a = _eval(e.arg, x, E)
        if e.func == "sqrt":
            if np.any(np.asarray(a) < 0):
                raise DomainError("square root of a negative number", e)
            return np.sqrt(a) if isinstance(a, np.ndarray) else math.sqrt(a)
        if e.func == "exp":
            return _check(np.exp(a) if isinstance(a, np.ndarray) else _safe_exp(a, e), e)
        return abs(a)
    a = _eval(e.left, x, E)
    b = _eval(e.right, x, E)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if np.any(np.asarray(b) == 0):
            raise DomainError("division by zero", e)
        return a / b
    if np.any((np.asarray(a) < 0) & (float(b) != round(float(b)))):
        raise DomainError("non-integer power of a negative number", e)
    if np.any((np.asarray(a) == 0) & (float(b) < 0)):
        raise DomainError("division by zero", e)
    if isinstance(a, np.ndarray):
        return _check(np.power(a, b), e)
    return _check(_float_pow(a, b, e), e)


def _safe_exp(a, node):
    try:
        return math.exp(a)
    except OverflowError:
        raise DomainError("overflow", node) from None


def _float_pow(a, b, node):
    try:
        return float(a) ** float(b)
    except OverflowError:
        raise DomainError("overflow", node) from None


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def pretty(e: Expr) -> str:
    """Canonical text form; ``parse(pretty(e)) == e`` up to offsets."""
    return _pretty(e, 0)


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _pretty(e, ctx):
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({_pretty(e.arg, 0)})"
    if isinstance(e, Neg):
        s = "-" + _pretty(e.operand, _PREC["neg"])
        return f"({s})" if ctx > _PREC["neg"] else s
    p = _PREC[e.op]
    if e.op == "^":
        # right-assoc: left operand needs parens at equal precedence
        s = f"{_pretty(e.left, p + 1)}^{_pretty(e.right, _PREC['neg'])}"
    else:
        s = f"{_pretty(e.left, p)} {e.op} {_pretty(e.right, p + 1)}"
    return f"({s})" if ctx > p else s


def strip_offsets(e: Expr) -> Expr:
    """Copy of ``e`` with source offsets cleared, for structural comparison."""
    if isinstance(e, BinOp):
        return BinOp(e.op, strip_offsets(e.left), strip_offsets(e.right))
    if isinstance(e, Neg):
        return Neg(strip_offsets(e.operand))
    if isinstance(e, Call):
        return Call(e.func, strip_offsets(e.arg))
    return e


class Function:
    """A parsed expression usable as a plain callable ``f(x, E)``."""

    def __init__(self, src: str):
        self.src = src
        self.expr = parse(src)

    def __call__(self, x=0.0, E=0.0):
        return evaluate(self.expr, x, E)

    def depends_on(self, name: str) -> bool:
        return name in free_variables(self.expr)

    def __repr__(self):
        return f"Function({self.src!r})"
