"""Expression trees over chart coordinates and named parameters.

Grammar (whitespace insignificant)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ['-'] power
    power  := atom ['^' factor]
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

FUNCTION_NAMES = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "atan")


class ExprError(ValueError):
    """Base class for parse errors; ``offset`` is a UTF-8 byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} at offset {offset}"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifier(ExprError):
    def __init__(self, name: str, offset: int | None = None, what: str = "identifier"):
        self.name = name
        super().__init__(f"unknown {what} '{name}'", offset)


class ArityError(ExprError):
    pass


class Expr:
    """Immutable expression node."""

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, other):
        return Pow(self, as_expr(other))

    def __str__(self) -> str:
        return to_source(self)


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str
    index: int


@dataclass(frozen=True, eq=True)
class Param(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True, eq=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: Expr


@dataclass(frozen=True, eq=True)
class Call(Expr):
    func: str
    arg: Expr


_BINARY = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Num(float(value))


def call(func: str, arg) -> Call:
    if func not in FUNCTION_NAMES:
        raise UnknownIdentifier(func, what="function")
    return Call(func, as_expr(arg))


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    return set().union(*(variables(c) for c in children(e))) if children(e) else set()


def parameters(e: Expr) -> set[str]:
    if isinstance(e, Param):
        return {e.name}
    return set().union(*(parameters(c) for c in children(e))) if children(e) else set()


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Num, Var, Param)):
        return ()
    if isinstance(e, Neg):
        return (e.operand,)
    if isinstance(e, Pow):
        return (e.base, e.exponent)
    if isinstance(e, Call):
        return (e.arg,)
    return (e.left, e.right)


def to_source(e: Expr) -> str:
    """Render ``e`` in the grammar; re-parsing yields an equal tree.

    Negative literals come back as ``Neg(Num)``, which evaluates identically.
    """
    if isinstance(e, Num):
        s = repr(float(e.value))
        if s in ("inf", "-inf", "nan"):
            raise ValueError(f"cannot serialize non-finite literal {s}")
        return f"(-{s[1:]})" if s.startswith("-") else s
    if isinstance(e, (Var, Param)):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, Pow):
        return f"({to_source(e.base)}^{to_source(e.exponent)})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    return f"({to_source(e.left)}{_BINARY[type(e)]}{to_source(e.right)})"


def describe(e: Expr) -> str:
    """Compact tree notation, e.g. ``Mul(mu, Add(Pow(x, 2), Pow(y, 2)))``."""
    if isinstance(e, Num):
        v = e.value
        return str(int(v)) if v.is_integer() else repr(v)
    if isinstance(e, (Var, Param)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func.capitalize()}({describe(e.arg)})"
    return f"{type(e).__name__}({', '.join(describe(c) for c in children(e))})"


# parsing ----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int  # byte offset


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", len(source[:pos].encode()))
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), len(source[:pos].encode())))
        pos = m.end()
    toks.append(_Tok("end", "", len(source.encode())))
    return toks


class _Parser:
    def __init__(self, source: str, coords: Sequence[str], params: Sequence[str]):
        self.toks = _tokenize(source)
        self.i = 0
        self.coords = {name: k for k, name in enumerate(coords)}
        self.params = set(params)
        clash = self.params & set(self.coords)
        if clash:
            raise ExprError(f"names used as both coordinate and parameter: {sorted(clash)}")

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _unexpected(self):
        t = self.tok
        what = "end of input" if t.kind == "end" else repr(t.text)
        return ExprSyntaxError(f"syntax error: unexpected {what}", t.offset)

    def _accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise self._unexpected()
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            if self._accept("+"):
                e = Add(e, self.term())
            elif self._accept("-"):
                e = Sub(e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            if self._accept("*"):
                e = Mul(e, self.factor())
            elif self._accept("/"):
                e = Div(e, self.factor())
            else:
                return e

    def factor(self) -> Expr:
        if self._accept("-"):
            return Neg(self.power())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            offset = self.tok.offset
            self.i += 1
            exponent = self.factor()
            if variables(exponent):
                raise ExprSyntaxError("exponent must not depend on coordinates", offset)
            return Pow(base, exponent)
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(float(t.text))
        if t.kind == "ident":
            self.i += 1
            is_call = self.tok.kind == "op" and self.tok.text == "("
            if t.text in FUNCTION_NAMES:
                if not is_call:
                    raise ArityError(f"function '{t.text}' requires one argument", t.offset)
                return self._call(t)
            if is_call:
                if t.text in self.coords or t.text in self.params:
                    raise ArityError(f"'{t.text}' is not a function", t.offset)
                raise UnknownIdentifier(t.text, t.offset, what="function")
            if t.text in self.coords:
                return Var(t.text, self.coords[t.text])
            if t.text in self.params:
                return Param(t.text)
            raise UnknownIdentifier(t.text, t.offset)
        if self._accept("("):
            e = self.expr()
            if not self._accept(")"):
                raise self._unexpected()
            return e
        raise self._unexpected()

    def _call(self, name: _Tok) -> Expr:
        self._accept("(")
        if self.tok.kind == "op" and self.tok.text == ")":
            raise ArityError(f"function '{name.text}' takes 1 argument, got 0", name.offset)
        arg = self.expr()
        if self.tok.kind == "op" and self.tok.text == ",":
            raise ArityError(f"function '{name.text}' takes 1 argument", name.offset)
        if not self._accept(")"):
            raise self._unexpected()
        return Call(name.text, arg)


def parse_expr(source: str, coords: Sequence[str], params: Sequence[str] = ()) -> Expr:
    """Parse ``source``; identifiers must be listed in ``coords`` or ``params``."""
    return _Parser(source, coords, params).parse()
