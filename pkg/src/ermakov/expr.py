"""Univariate real expressions: parsing, evaluation and symbolic differentiation.

The free variable is always spelled ``x``; consumers decide what it stands for
(an angle, a time, or the ratio ``y/x``).

Grammar (precedence low to high, ``^`` right-associative)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := number | 'x' | ident '(' expr ')' | '(' expr ')'

>>> e = parse("(tan(x)+cot(x))^2")
>>> round(e(math.pi / 4), 12)
4.0
>>> str(differentiate(parse("x^3")))
'(3.0 * (x ^ 2.0))'
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "ExprError",
    "ExprSyntaxError",
    "ExprNameError",
    "ExprDomainError",
    "UNARY_FUNCTIONS",
    "parse",
    "evaluate",
    "differentiate",
    "substitute",
    "parse_number",
]


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        self.offset = offset
        self.expected = expected
        detail = f"{message} at offset {offset}"
        if expected:
            detail += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(detail)


class ExprNameError(ExprError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class ExprDomainError(ExprError, ArithmeticError):
    def __init__(self, node: "Expression", argument: float, reason: str):
        self.node = node
        self.argument = argument
        super().__init__(f"{reason} in {node} at x = {argument!r}")


def _cot(a: float) -> float:
    s = math.sin(a)
    if s == 0.0:
        raise ZeroDivisionError
    return math.cos(a) / s


def _sec(a: float) -> float:
    c = math.cos(a)
    if c == 0.0:
        raise ZeroDivisionError
    return 1.0 / c


def _csc(a: float) -> float:
    s = math.sin(a)
    if s == 0.0:
        raise ZeroDivisionError
    return 1.0 / s


def _ln(a: float) -> float:
    if a <= 0.0:
        raise ValueError
    return math.log(a)


def _sqrt(a: float) -> float:
    if a < 0.0:
        raise ValueError
    return math.sqrt(a)


def _sign(a: float) -> float:
    return (a > 0.0) - (a < 0.0)


UNARY_FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "cot": _cot,
    "sec": _sec,
    "csc": _csc,
    "exp": math.exp,
    "ln": _ln,
    "sqrt": _sqrt,
    "abs": abs,
    # derivative of abs; sign(0) = 0
    "sign": _sign,
}


def _pow(a: float, b: float) -> float:
    if a == 0.0 and b < 0.0:
        raise ZeroDivisionError
    if a < 0.0 and b != int(b):
        raise ValueError
    return a**b


_BINARY: dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "^": _pow,
}


class Expression:
    """Immutable expression tree node.  Calling a node evaluates it."""

    __slots__ = ()

    def __call__(self, x: float) -> float:
        return evaluate(self, x)

    def __str__(self) -> str:  # pragma: no cover - overridden
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"parse({str(self)!r})"

    @property
    def is_constant(self) -> bool:
        return isinstance(self, Const)


@dataclass(frozen=True, repr=False)
class Const(Expression):
    value: float

    def __str__(self) -> str:
        text = repr(float(self.value))
        return f"({text})" if self.value < 0 or text.startswith("-") else text


@dataclass(frozen=True, repr=False)
class Var(Expression):
    def __str__(self) -> str:
        return "x"


@dataclass(frozen=True, repr=False)
class Unary(Expression):
    op: str  # "neg" or a key of UNARY_FUNCTIONS
    arg: Expression

    def __str__(self) -> str:
        if self.op == "neg":
            return f"(-{self.arg})"
        return f"{self.op}({self.arg})"


@dataclass(frozen=True, repr=False)
class Binary(Expression):
    op: str  # one of + - * / ^
    left: Expression
    right: Expression

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


X = Var()


# ---------------------------------------------------------------------------
# evaluation


def evaluate(e: Expression, x: float) -> float:
    """Evaluate ``e`` at ``x`` in double precision.

    Raises :class:`ExprDomainError` naming the offending node when an
    operation leaves the real domain (pole, log of non-positive, ...).
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return x
    if isinstance(e, Unary):
        a = evaluate(e.arg, x)
        if e.op == "neg":
            return -a
        try:
            return UNARY_FUNCTIONS[e.op](a)
        except ZeroDivisionError:
            raise ExprDomainError(e, x, "pole") from None
        except (ValueError, OverflowError) as exc:
            raise ExprDomainError(e, x, f"domain violation ({exc.__class__.__name__})") from None
    if isinstance(e, Binary):
        a = evaluate(e.left, x)
        b = evaluate(e.right, x)
        try:
            value = _BINARY[e.op](a, b)
        except ZeroDivisionError:
            raise ExprDomainError(e, x, "division by zero") from None
        except (ValueError, OverflowError) as exc:
            raise ExprDomainError(e, x, f"domain violation ({exc.__class__.__name__})") from None
        if isinstance(value, complex):
            raise ExprDomainError(e, x, "complex result")
        return value
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num", "id", "op", "end"
    text: str
    offset: int


def _tokenize(source: str) -> list[_Tok]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", _byte_offset(source, pos))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append(_Tok(kind, m.group(kind), start))
        pos = m.end()
    tokens.append(_Tok("end", "", len(source)))
    return tokens


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.tokens[self.i]

    def fail(self, expected: set[str]) -> ExprSyntaxError:
        tok = self.tok
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        return ExprSyntaxError(
            f"unexpected {what}", _byte_offset(self.source, tok.offset), frozenset(expected)
        )

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            raise self.fail({text})

    def parse(self) -> Expression:
        if self.tok.kind == "end":
            raise ExprSyntaxError("empty input", 0, frozenset({"number", "x", "function", "(", "-"}))
        e = self.expr()
        if self.tok.kind != "end":
            raise self.fail({"+", "-", "*", "/", "^", "end of input"})
        return e

    def expr(self) -> Expression:
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            e = Binary(op, e, self.term())
        return e

    def term(self) -> Expression:
        e = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            e = Binary(op, e, self.factor())
        return e

    def factor(self) -> Expression:
        if self.accept("-"):
            return Unary("neg", self.factor())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.accept("^"):
            return Binary("^", base, self.factor())
        return base

    def atom(self) -> Expression:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "id":
            self.i += 1
            if tok.text == "x":
                return X
            if tok.text not in UNARY_FUNCTIONS:
                raise ExprNameError(tok.text, _byte_offset(self.source, tok.offset))
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Unary(tok.text, arg)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        raise self.fail({"number", "x", "function", "("})


def parse(source: str) -> Expression:
    """Parse ``source`` into an :class:`Expression`."""
    if not isinstance(source, str):
        raise TypeError("source must be str")
    return _Parser(source).parse()


def parse_number(source: str) -> float:
    """Parse a constant using the expression syntax (``"-0.1"``, ``"1e-10"``, ``"2^-3"``)."""
    e = parse(source.strip())
    if _contains_var(e):
        raise ExprSyntaxError("expected a constant, found the variable x", 0)
    return float(evaluate(e, 0.0))


def _contains_var(e: Expression) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, Unary):
        return _contains_var(e.arg)
    if isinstance(e, Binary):
        return _contains_var(e.left) or _contains_var(e.right)
    return False


# ---------------------------------------------------------------------------
# construction helpers with constant folding

ZERO = Const(0.0)
ONE = Const(1.0)


def _fold(e: Expression) -> Expression:
    try:
        return Const(evaluate(e, 0.0))
    except ExprDomainError:
        return e


def _neg(a: Expression) -> Expression:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def _add(a: Expression, b: Expression) -> Expression:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def _sub(a: Expression, b: Expression) -> Expression:
    if b == ZERO:
        return a
    if a == ZERO:
        return _neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def _mul(a: Expression, b: Expression) -> Expression:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def _div(a: Expression, b: Expression) -> Expression:
    if b == ONE:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(Binary("/", a, b))
    return Binary("/", a, b)


def _pow_node(a: Expression, b: Expression) -> Expression:
    if b == ONE:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(Binary("^", a, b))
    return Binary("^", a, b)


def _fn(name: str, a: Expression) -> Expression:
    e = Unary(name, a)
    return _fold(e) if isinstance(a, Const) else e


# ---------------------------------------------------------------------------
# differentiation


def differentiate(e: Expression) -> Expression:
    """Return d e / dx, folding constant subtrees."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Unary):
        a = e.arg
        da = differentiate(a)
        if da == ZERO:
            return ZERO
        op = e.op
        if op == "neg":
            return _neg(da)
        if op == "sin":
            outer = _fn("cos", a)
        elif op == "cos":
            outer = _neg(_fn("sin", a))
        elif op == "tan":
            outer = _pow_node(_fn("sec", a), Const(2.0))
        elif op == "cot":
            outer = _neg(_pow_node(_fn("csc", a), Const(2.0)))
        elif op == "sec":
            outer = _mul(_fn("sec", a), _fn("tan", a))
        elif op == "csc":
            outer = _neg(_mul(_fn("csc", a), _fn("cot", a)))
        elif op == "exp":
            outer = e
        elif op == "ln":
            return _div(da, a)
        elif op == "sqrt":
            return _div(da, _mul(Const(2.0), e))
        elif op == "abs":
            outer = _fn("sign", a)
        elif op == "sign":
            return ZERO
        else:  # pragma: no cover
            raise ValueError(f"unknown unary operator {op!r}")
        return _mul(outer, da)
    if isinstance(e, Binary):
        a, b = e.left, e.right
        da, db = differentiate(a), differentiate(b)
        op = e.op
        if op == "+":
            return _add(da, db)
        if op == "-":
            return _sub(da, db)
        if op == "*":
            return _add(_mul(da, b), _mul(a, db))
        if op == "/":
            if db == ZERO:
                return _div(da, b)
            return _div(_sub(_mul(da, b), _mul(a, db)), _pow_node(b, Const(2.0)))
        if op == "^":
            if db == ZERO:
                # a^c with constant exponent
                c = b.value if isinstance(b, Const) else None
                exponent = Const(c - 1.0) if c is not None else _sub(b, ONE)
                return _mul(_mul(b, _pow_node(a, exponent)), da)
            if da == ZERO:
                return _mul(_mul(e, _fn("ln", a)), db)
            return _mul(e, _add(_mul(db, _fn("ln", a)), _div(_mul(b, da), a)))
    raise TypeError(f"not an expression node: {e!r}")


def substitute(e: Expression, inner: Expression) -> Expression:
    """Return ``e`` with every occurrence of ``x`` replaced by ``inner``."""
    if isinstance(e, Var):
        return inner
    if isinstance(e, Const):
        return e
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.arg, inner))
    if isinstance(e, Binary):
        return Binary(e.op, substitute(e.left, inner), substitute(e.right, inner))
    raise TypeError(f"not an expression node: {e!r}")


def as_expression(value: Union[str, float, int, Expression]) -> Expression:
    """Coerce source text or a number into an Expression."""
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, float)):
        return Const(float(value))
    return parse(value)
