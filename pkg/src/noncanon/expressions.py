"""Infix expression trees with exact forward-mode differentiation.

User-supplied phase-space functions (bracket entries, Hamiltonians,
hodograph generators) enter as infix text, are parsed once into immutable
trees, and are evaluated or differentiated pointwise.  Derivatives come
from dual-number propagation and are exact up to floating point; finite
differences appear only as an independent cross-check in the test suite.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | power
    power  := base ('^' factor)?
    base   := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := 'exp' | 'log' | 'sqrt' | 'sin' | 'cos'

Names match ``[A-Za-z_][A-Za-z0-9_]*``.  The names ``q1..qn, p1..pn`` are
reserved for phase-space variables; any other name is a parameter.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

__all__ = [
    "ExpressionError",
    "ParseError",
    "DomainError",
    "UnboundNameError",
    "Node",
    "Const",
    "Name",
    "Unary",
    "Binary",
    "Expression",
    "Dual",
    "Bindings",
    "FUNCTIONS",
    "parse",
    "evaluate",
    "derivative",
    "gradient",
    "to_source",
    "free_names",
    "substitute",
    "is_constant_over",
]

FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos")


class ExpressionError(Exception):
    """Base class for every error raised by this module."""


class ParseError(ExpressionError):
    def __init__(self, message: str, source: str, position: int):
        super().__init__(f"{message} at offset {position} in {source!r}")
        self.source = source
        self.position = position


class UnboundNameError(ExpressionError):
    """A name in the expression has no value in the bindings."""

    def __init__(self, name: str):
        super().__init__(f"unbound name '{name}'")
        self.name = name


class DomainError(ExpressionError):
    """Evaluation left the real domain; carries the offending subexpression."""

    def __init__(self, message: str, subexpression: str):
        super().__init__(f"{message} in '{subexpression}'")
        self.subexpression = subexpression


# ---------------------------------------------------------------------------
# Dual numbers


class Dual:
    """First-order dual number ``value + deriv * eps``.

    Mixes freely with floats, so a tree evaluated with one ``Dual`` binding
    propagates the partial derivative with respect to that binding.
    """

    __slots__ = ("value", "deriv")

    def __init__(self, value: float, deriv: float = 0.0):
        self.value = value
        self.deriv = deriv

    def __repr__(self):
        return f"Dual({self.value!r}, {self.deriv!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.deriv + other.deriv)
        return Dual(self.value + other, self.deriv)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.deriv - other.deriv)
        return Dual(self.value - other, self.deriv)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.deriv)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.value * other.deriv + self.deriv * other.value,
            )
        return Dual(self.value * other, self.deriv * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value / other.value,
                (self.deriv * other.value - self.value * other.deriv)
                / (other.value * other.value),
            )
        return Dual(self.value / other, self.deriv / other)

    def __rtruediv__(self, other):
        return Dual(
            other / self.value, -other * self.deriv / (self.value * self.value)
        )

    def __neg__(self):
        return Dual(-self.value, -self.deriv)


def _real(x) -> float:
    return x.value if isinstance(x, Dual) else x


# ---------------------------------------------------------------------------
# Syntax tree


class Node:
    """Base node; supports operator syntax for building trees in code."""

    __slots__ = ()

    def __add__(self, other):
        return Binary("+", self, _as_node(other))

    def __radd__(self, other):
        return Binary("+", _as_node(other), self)

    def __sub__(self, other):
        return Binary("-", self, _as_node(other))

    def __rsub__(self, other):
        return Binary("-", _as_node(other), self)

    def __mul__(self, other):
        return Binary("*", self, _as_node(other))

    def __rmul__(self, other):
        return Binary("*", _as_node(other), self)

    def __truediv__(self, other):
        return Binary("/", self, _as_node(other))

    def __rtruediv__(self, other):
        return Binary("/", _as_node(other), self)

    def __pow__(self, other):
        return Binary("^", self, _as_node(other))

    def __neg__(self):
        return Unary("neg", self)


@dataclass(frozen=True, slots=True)
class Const(Node):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, slots=True)
class Name(Node):
    name: str


@dataclass(frozen=True, slots=True)
class Unary(Node):
    op: str  # 'neg' or a function name
    arg: "Expression"


@dataclass(frozen=True, slots=True)
class Binary(Node):
    op: str  # '+', '-', '*', '/', '^'
    left: "Expression"
    right: "Expression"


Expression = Union[Const, Name, Unary, Binary]


def _as_node(x) -> Expression:
    if isinstance(x, Node):
        return x
    if isinstance(x, (int, float)):
        return Const(float(x))
    raise TypeError(f"cannot treat {x!r} as an expression node")


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", source, pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(), pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.source, len(self.source))
        self.i += 1
        return tok

    def expect_op(self, op: str):
        tok = self.peek()
        if tok is None or tok[0] != "op" or tok[1] != op:
            pos = tok[2] if tok else len(self.source)
            raise ParseError(f"expected '{op}'", self.source, pos)
        self.i += 1

    def parse(self) -> Expression:
        node = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected token {tok[1]!r}", self.source, tok[2])
        return node

    def expr(self) -> Expression:
        node = self.term()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in "+-":
                self.i += 1
                node = Binary(tok[1], node, self.term())
            else:
                return node

    def term(self) -> Expression:
        node = self.factor()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in "*/":
                self.i += 1
                node = Binary(tok[1], node, self.factor())
            else:
                return node

    def factor(self) -> Expression:
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "-":
            self.i += 1
            return Unary("neg", self.factor())
        return self.power()

    def power(self) -> Expression:
        node = self.base()
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "^":
            self.i += 1
            return Binary("^", node, self.factor())
        return node

    def base(self) -> Expression:
        kind, text, pos = self.next()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] == "(":
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function '{text}'", self.source, pos)
                self.i += 1
                arg = self.expr()
                self.expect_op(")")
                return Unary(text, arg)
            return Name(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected token {text!r}", self.source, pos)


def parse(source: str) -> Expression:
    """Parse infix text into an expression tree."""
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# Printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _render(e: Expression, parent_prec: int) -> str:
    if isinstance(e, Const):
        if e.value < 0 or (e.value == 0 and math.copysign(1.0, e.value) < 0):
            text = "-" + repr(-e.value)
            return f"({text})" if parent_prec > _PREC["neg"] else text
        return repr(e.value)
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            text = "-" + _render(e.arg, _PREC["neg"])
            return f"({text})" if parent_prec > _PREC["neg"] else text
        return f"{e.op}({_render(e.arg, 0)})"
    prec = _PREC[e.op]
    if e.op == "^":
        left = _render(e.left, prec + 1)
        right = _render(e.right, prec)
    else:
        left = _render(e.left, prec)
        right = _render(e.right, prec + 1)
    text = f"{left} {e.op} {right}" if e.op in "+-" else f"{left}{e.op}{right}"
    return f"({text})" if prec < parent_prec else text


def to_source(e: Expression) -> str:
    """Render a tree back to parseable infix text."""
    return _render(e, 0)


# ---------------------------------------------------------------------------
# Evaluation

def _pow_value(lv: float, rv: float, node) -> float:
    # overflow follows IEEE and yields a signed infinity; only genuine
    # domain violations raise
    try:
        return math.pow(lv, rv)
    except OverflowError:
        negative = lv < 0.0 and int(rv) % 2 == 1
        return -math.inf if negative else math.inf
    except ValueError as err:
        raise DomainError(str(err), to_source(node)) from None


def _pow(left, right, node: Binary):
    lv = _real(left)
    rv = _real(right)
    exponent_varies = isinstance(right, Dual) and right.deriv != 0.0
    if lv < 0.0:
        if exponent_varies or rv != round(rv):
            raise DomainError(
                "negative base with non-integer exponent", to_source(node)
            )
    if lv == 0.0 and rv < 0.0:
        raise DomainError("zero raised to a negative power", to_source(node))
    if not isinstance(left, Dual) and not isinstance(right, Dual):
        return _pow_value(lv, rv, node)
    value = _pow_value(lv, rv, node)
    deriv = 0.0
    if isinstance(left, Dual) and left.deriv != 0.0:
        if lv == 0.0:
            if rv == 1.0:
                deriv += left.deriv
            elif rv > 1.0:
                pass
            else:
                raise DomainError(
                    "derivative of power undefined at zero base", to_source(node)
                )
        else:
            deriv += rv * _pow_value(lv, rv - 1.0, node) * left.deriv
    if exponent_varies:
        if lv <= 0.0:
            raise DomainError(
                "variable exponent requires positive base", to_source(node)
            )
        deriv += value * math.log(lv) * right.deriv
    return Dual(value, deriv)


def _eval(e: Expression, env: Mapping[str, object]):
    if isinstance(e, Binary):
        left = _eval(e.left, env)
        right = _eval(e.right, env)
        op = e.op
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op == "/":
            if _real(right) == 0.0:
                raise DomainError("division by zero", to_source(e))
            return left / right
        return _pow(left, right, e)
    if isinstance(e, Name):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundNameError(e.name) from None
    if isinstance(e, Const):
        return e.value
    # Unary
    v = _eval(e.arg, env)
    op = e.op
    if op == "neg":
        return -v
    rv = _real(v)
    if op == "exp":
        try:
            ev = math.exp(rv)
        except OverflowError:
            ev = math.inf
        if isinstance(v, Dual):
            return Dual(ev, ev * v.deriv if v.deriv != 0.0 else 0.0)
        return ev
    if op == "log":
        if rv <= 0.0:
            raise DomainError("log of non-positive value", to_source(e))
        if isinstance(v, Dual):
            return Dual(math.log(rv), v.deriv / rv)
        return math.log(rv)
    if op == "sqrt":
        if rv < 0.0:
            raise DomainError("sqrt of negative value", to_source(e))
        if isinstance(v, Dual):
            if rv == 0.0 and v.deriv != 0.0:
                raise DomainError("sqrt derivative at zero", to_source(e))
            root = math.sqrt(rv)
            return Dual(root, 0.0 if v.deriv == 0.0 else v.deriv / (2.0 * root))
        return math.sqrt(rv)
    if op == "sin":
        if isinstance(v, Dual):
            return Dual(math.sin(rv), math.cos(rv) * v.deriv)
        return math.sin(rv)
    if op == "cos":
        if isinstance(v, Dual):
            return Dual(math.cos(rv), -math.sin(rv) * v.deriv)
        return math.cos(rv)
    raise ExpressionError(f"unknown unary operator '{op}'")


def evaluate(e: Expression, values: Mapping[str, float]) -> float:
    """Evaluate ``e`` with every name bound to a real value."""
    result = _eval(e, values)
    return result.value if isinstance(result, Dual) else result


def derivative(e: Expression, var: str, values: Mapping[str, float]) -> float:
    """Exact partial derivative of ``e`` with respect to ``var`` at ``values``."""
    if var not in values:
        raise UnboundNameError(var)
    env = dict(values)
    env[var] = Dual(float(values[var]), 1.0)
    result = _eval(e, env)
    return result.deriv if isinstance(result, Dual) else 0.0


def gradient(
    e: Expression, names: tuple[str, ...], values: Mapping[str, float]
) -> list[float]:
    """Partial derivatives of ``e`` with respect to each name, in order."""
    used = free_names(e)
    return [derivative(e, nm, values) if nm in used else 0.0 for nm in names]


# ---------------------------------------------------------------------------
# Tree utilities


def _walk(e: Expression) -> Iterator[Expression]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Unary):
            stack.append(node.arg)
        elif isinstance(node, Binary):
            stack.append(node.left)
            stack.append(node.right)


def free_names(e: Expression) -> frozenset[str]:
    return frozenset(n.name for n in _walk(e) if isinstance(n, Name))


def is_constant_over(e: Expression, names) -> bool:
    """True when ``e`` references none of the given names."""
    return not (free_names(e) & frozenset(names))


def substitute(e: Expression, replacements: Mapping[str, Expression]) -> Expression:
    """Replace named leaves by subtrees, returning a new tree."""
    if isinstance(e, Name):
        return replacements.get(e.name, e)
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.arg, replacements))
    if isinstance(e, Binary):
        return Binary(
            e.op,
            substitute(e.left, replacements),
            substitute(e.right, replacements),
        )
    return e


# ---------------------------------------------------------------------------
# Bindings


@dataclass(frozen=True)
class Bindings:
    """Named values split into phase-space variables and fixed parameters.

    Variable insertion order fixes the flat index a in x_a; the phase-space
    convention is x = (q_1..q_n, p_1..p_n).
    """

    variables: Mapping[str, float]
    parameters: Mapping[str, float] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.parameters is None:
            object.__setattr__(self, "parameters", {})
        overlap = set(self.variables) & set(self.parameters)
        if overlap:
            raise ValueError(f"names bound twice: {sorted(overlap)}")

    def env(self) -> dict[str, float]:
        merged = dict(self.parameters)
        merged.update(self.variables)
        return merged
