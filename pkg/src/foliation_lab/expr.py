"""Scalar expression language for metric, field and embedding components.

Grammar::

    expr   := term (("+"|"-") term)* ;
    term   := factor (("*"|"/") factor)* ;
    factor := "-" factor | power ;
    power  := atom ("^" factor)? ;
    atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")" ;

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)`` and
``2^-1`` is ``0.5``; ``a^b^c`` is ``a^(b^c)``.  Expressions evaluate on plain
floats or on :class:`~foliation_lab.jet.Jet` values; domain violations are
raised as :class:`~foliation_lab.errors.DomainError`, never turned into NaN.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from . import jet as J
from .errors import DomainError, ExprSyntaxError, UnboundSymbolError, UnknownFunctionError
from .jet import DualScalar, Jet

Value = Union[float, Jet]

# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Sym:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Pi:
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"
    pos: int = field(default=0, compare=False)


Node = Union[Num, Sym, Pi, Neg, BinOp, Call]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "atan")
RESERVED = frozenset(FUNCTIONS) | {"pi"}

# -- lexer -----------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
)


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER, IDENT, an operator character, or EOF
    text: str
    pos: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos, source=source)
        kind = m.lastgroup
        if kind == "num":
            tokens.append(Token("NUMBER", m.group(), pos))
        elif kind == "ident":
            tokens.append(Token("IDENT", m.group(), pos))
        elif kind == "op":
            tokens.append(Token(m.group(), m.group(), pos))
        pos = m.end()
    tokens.append(Token("EOF", "", len(source)))
    return tokens


# -- parser ----------------------------------------------------------------

_ATOM_START = frozenset({"NUMBER", "IDENT", "("})
_FACTOR_START = _ATOM_START | {"-"}


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def fail(self, expected: Iterable[str]):
        t = self.tok
        what = "end of input" if t.kind == "EOF" else f"{t.text!r}"
        raise ExprSyntaxError(f"unexpected {what}", t.pos, frozenset(expected), self.source)

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            self.fail({kind})
        return self.advance()

    def expr(self) -> Node:
        left = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.advance()
            left = BinOp(op.kind, left, self.term(), op.pos)
        return left

    def term(self) -> Node:
        left = self.factor()
        while self.tok.kind in ("*", "/"):
            op = self.advance()
            left = BinOp(op.kind, left, self.factor(), op.pos)
        return left

    def factor(self) -> Node:
        if self.tok.kind == "-":
            op = self.advance()
            return Neg(self.factor(), op.pos)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "^":
            op = self.advance()
            return BinOp("^", base, self.factor(), op.pos)
        return base

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "NUMBER":
            self.advance()
            return Num(float(t.text), t.pos)
        if t.kind == "IDENT":
            self.advance()
            if self.tok.kind == "(":
                if t.text not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {t.text!r}", t.pos, self.source)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg, t.pos)
            if t.text in FUNCTIONS:
                self.fail({"("})
            if t.text == "pi":
                return Pi(t.pos)
            return Sym(t.text, t.pos)
        if t.kind == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        self.fail(_FACTOR_START)

    def end(self):
        if self.tok.kind != "EOF":
            self.fail({"EOF", "+", "-", "*", "/", "^"})


def parse(source: str) -> "Expression":
    p = _Parser(source)
    root = p.expr()
    p.end()
    return Expression(root, source)


def parse_list(source: str) -> list["Expression"]:
    """Parse ``(e1, e2, ...)`` into expressions (used by scenario files)."""
    p = _Parser(source)
    p.expect("(")
    roots = [p.expr()]
    while p.tok.kind == ",":
        p.advance()
        roots.append(p.expr())
    p.expect(")")
    if p.tok.kind != "EOF":
        p.fail({"EOF"})
    # each element keeps offsets relative to the full list text
    return [Expression(r, source) for r in roots]


# -- printer ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _fmt_number(x: float) -> str:
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def to_source(node: Node) -> str:
    """Canonical text with the minimum parentheses needed to re-parse identically."""
    if isinstance(node, Num):
        if node.value < 0 or not math.isfinite(node.value):
            raise ValueError(f"literal {node.value!r} is not representable")
        return _fmt_number(node.value)
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        if _prec(node.operand) < 3:
            inner = f"({inner})"
        return "-" + inner
    p = _PREC[node.op]
    left, right = to_source(node.left), to_source(node.right)
    if node.op == "^":
        if _prec(node.left) < 5:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    sep = f" {node.op} " if p == 1 else node.op
    return f"{left}{sep}{right}"


# -- construction helpers --------------------------------------------------


def num(value: float) -> Node:
    value = float(value)
    return Neg(Num(-value)) if value < 0 else Num(value)


def symbols_of(node: Node) -> frozenset[str]:
    if isinstance(node, Sym):
        return frozenset({node.name})
    if isinstance(node, (Num, Pi)):
        return frozenset()
    if isinstance(node, Neg):
        return symbols_of(node.operand)
    if isinstance(node, Call):
        return symbols_of(node.arg)
    return symbols_of(node.left) | symbols_of(node.right)


# -- evaluation ------------------------------------------------------------


def _is_jet(x) -> bool:
    return isinstance(x, Jet)


def _values(x):
    return x.v if isinstance(x, Jet) else x


class _Evaluator:
    """Compiles an AST into nested closures over a name->value environment."""

    def __init__(self, source: str):
        self.source = source

    def err(self, cls, msg, pos):
        return cls(msg, pos, self.source)

    def compile(self, node: Node) -> Callable[[Mapping[str, Value]], Value]:
        if isinstance(node, Num):
            v = node.value
            return lambda env: v
        if isinstance(node, Pi):
            return lambda env: math.pi
        if isinstance(node, Sym):
            name, pos = node.name, node.pos
            ev = self

            def sym(env):
                try:
                    return env[name]
                except KeyError:
                    raise ev.err(UnboundSymbolError, f"unbound symbol {name!r}", pos) from None

            return sym
        if isinstance(node, Neg):
            f = self.compile(node.operand)
            return lambda env: -f(env)
        if isinstance(node, Call):
            return self._call(node)
        lf, rf = self.compile(node.left), self.compile(node.right)
        if node.op == "+":
            return lambda env: lf(env) + rf(env)
        if node.op == "-":
            return lambda env: lf(env) - rf(env)
        if node.op == "*":
            return lambda env: lf(env) * rf(env)
        if node.op == "/":
            pos = node.pos

            def div(env):
                a, b = lf(env), rf(env)
                if np.any(_values(b) == 0):
                    raise self.err(DomainError, "division by zero", pos)
                return a / b

            return div
        return self._pow(node, lf, rf)

    def _pow(self, node, lf, rf):
        pos = node.pos

        def pw(env):
            a, b = lf(env), rf(env)
            av, bv = _values(a), _values(b)
            jets = _is_jet(a) or _is_jet(b)
            integral = not _is_jet(b) and float(b).is_integer()
            if not integral and np.any(av <= 0 if jets else av < 0):
                raise self.err(DomainError, "non-positive base with non-integer exponent", pos)
            if np.any(bv < 0) and np.any(av == 0):
                raise self.err(DomainError, "zero raised to a negative power", pos)
            if not jets:
                try:
                    return math.pow(a, b)
                except (OverflowError, ValueError) as exc:
                    raise self.err(DomainError, str(exc), pos) from None
            out = J.exp(b * math.log(a)) if not _is_jet(a) else a**b
            if not np.all(np.isfinite(out.v)):
                raise self.err(DomainError, "power overflow", pos)
            return out

        return pw

    def _call(self, node: Call):
        fn, pos, name = self.compile(node.arg), node.pos, node.func
        fl, fj = _FLOAT_FUNCS[name], _JET_FUNCS[name]
        check = _DOMAIN.get(name)
        ev = self

        def call(env):
            a = fn(env)
            if check is not None:
                bad = check(_values(a))
                if np.any(bad):
                    raise ev.err(DomainError, f"{name} argument out of domain", pos)
            if isinstance(a, Jet):
                out = fj(a)
                if not np.all(np.isfinite(out.v)):
                    raise ev.err(DomainError, f"{name} overflow", pos)
                return out
            try:
                return fl(a)
            except (OverflowError, ValueError) as exc:
                raise ev.err(DomainError, f"{name}: {exc}", pos) from None

        return call


_FLOAT_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "atan": math.atan,
}
_JET_FUNCS = {name: getattr(J, name) for name in FUNCTIONS}
_DOMAIN = {
    "log": lambda x: x <= 0,
    "sqrt": lambda x: x < 0,
}


@dataclass(frozen=True)
class Expression:
    """A parsed, immutable scalar expression."""

    root: Node
    source: str = field(default="", compare=False, repr=False)

    @cached_property
    def symbols(self) -> frozenset[str]:
        return symbols_of(self.root)

    @cached_property
    def _fn(self):
        return _Evaluator(self.source).compile(self.root)

    @cached_property
    def constant(self) -> float | None:
        """Value if the expression has no free symbols."""
        return float(self._fn({})) if not self.symbols else None

    def __str__(self) -> str:
        return to_source(self.root)

    def check_symbols(self, coords: Sequence[str]) -> None:
        missing = self.symbols - set(coords)
        if missing:
            name = sorted(missing)[0]
            raise UnboundSymbolError(
                f"symbol {name!r} is not a coordinate ({', '.join(coords)})",
                _first_pos(self.root, name),
                self.source,
            )

    def __call__(self, env: Mapping[str, Value]) -> Value:
        return self._fn(env)


def _first_pos(node: Node, name: str) -> int | None:
    if isinstance(node, Sym):
        return node.pos if node.name == name else None
    for child in _children(node):
        p = _first_pos(child, name)
        if p is not None:
            return p
    return None


def _children(node: Node) -> tuple:
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, Call):
        return (node.arg,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    return ()


def as_expression(e) -> Expression:
    if isinstance(e, Expression):
        return e
    if isinstance(e, (int, float)):
        return Expression(num(e), _fmt_number(float(e)))
    if isinstance(e, str):
        return parse(e)
    raise TypeError(f"cannot interpret {e!r} as an expression")


def evaluate(expr: Expression | str, bindings: Mapping[str, float]) -> float:
    expr = as_expression(expr)
    return float(expr({k: float(v) for k, v in bindings.items()}))


def evaluate_jets(expr: Expression, env: Mapping[str, Jet], npoints: int, nvars: int, order: int) -> Jet:
    """Evaluate on jets; constant results are lifted to jets."""
    out = expr(env)
    if not isinstance(out, Jet):
        return J.lift(out, npoints, nvars, order)
    return out


def evaluate_jet2(
    expr: Expression | str,
    point: Mapping[str, float],
    coords: Sequence[str] | None = None,
) -> DualScalar:
    """Value, gradient and Hessian at ``point``; coordinates follow ``coords`` or the mapping order."""
    expr = as_expression(expr)
    coords = tuple(coords) if coords is not None else tuple(point)
    pts = np.array([[float(point[c]) for c in coords]])
    xs = J.variables(pts, order=2)
    env = dict(zip(coords, xs))
    out = evaluate_jets(expr, env, 1, len(coords), 2)
    return DualScalar(float(out.v[0]), out.d[0].copy(), out.h[0].copy(), coords)
