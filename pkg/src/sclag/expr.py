"""Closed-form scalar expressions in base variables x1..xd and fiber variables t1..ts.

Expressions are immutable trees.  They can be parsed from text, printed back,
differentiated exactly and evaluated on numpy arrays.

Grammar::

    expr     := term (('+' | '-') term)*
    term     := unary ('*' unary)*
    unary    := '-' unary | power
    power    := atom ('^' exponent)?
    exponent := ['-'] rational | '(' ['-'] rational ')'
    atom     := rational | var | func '(' expr ')' | block '(' ')' | '(' expr ')'
    var      := 'x' digits | 't' digits
    func     := 'exp' | 'sin' | 'cos' | 'sqrt'
    block    := 'jbx' | 'jbt' | 'nx' | 'nt'
    rational := digits ['.' digits] ['/' digits]

``jbx()`` is the Japanese bracket sqrt(1 + |x|^2) of the whole base block and
``nx()`` the smooth norm of the block, equal to |x| once |x| >= 3.  There is no
division: reciprocals are negative powers of a base known to be positive.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

FIBER_NAME = "t"
BLOCKS = ("x", "t")
UNARY_FUNCS = ("exp", "sin", "cos", "sqrt")
BLOCK_FUNCS = {"jbx": ("bracket", "x"), "jbt": ("bracket", "t"), "nx": ("norm", "x"), "nt": ("norm", "t")}

# Smooth norm: [v] = sqrt(u + eps0^2 * bump(u)), u = |v|^2, bump(u) = exp(1/9 - 1/(9 - u)) for u < 9.
NORM_EPS0_SQ = 1.0
NORM_SWITCH_SQ = 9.0


class ExprError(ValueError):
    """Raised for malformed expressions and evaluation outside the domain."""


class ParseError(ExprError):
    def __init__(self, message: str, column: int):
        super().__init__(f"{message} at column {column}")
        self.column = column


class DomainError(ExprError):
    pass


@dataclass(frozen=True)
class VarSpace:
    d: int
    s: int

    def __post_init__(self):
        if self.d < 1 or self.s < 1:
            raise ExprError(f"VarSpace needs d >= 1 and s >= 1, got ({self.d}, {self.s})")

    @property
    def n(self) -> int:
        return self.d + self.s

    def variables(self, block: str = "both") -> list["Var"]:
        xs = [Var("x", i) for i in range(1, self.d + 1)]
        ts = [Var("t", j) for j in range(1, self.s + 1)]
        return {"x": xs, "t": ts, "both": xs + ts}[block]


# --------------------------------------------------------------------------- nodes


class Expr:
    """Base class; supports +, -, * and ^/** with rational exponents."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, Fraction(exponent))

    __xor__ = __pow__

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: Fraction


@dataclass(frozen=True, eq=True)
class Var(Expr):
    block: str
    index: int  # 1-based


@dataclass(frozen=True, eq=True)
class Add(Expr):
    terms: tuple


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    factors: tuple


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction


@dataclass(frozen=True, eq=True)
class Func(Expr):
    name: str
    arg: Expr


@dataclass(frozen=True, eq=True)
class Bracket(Expr):
    block: str


@dataclass(frozen=True, eq=True)
class Norm(Expr):
    block: str


@dataclass(frozen=True, eq=True)
class NormProfile(Expr):
    """k-th derivative of h(u) = u + bump(u) at u = |v|^2; Norm = sqrt(h).  Printed as nxd<k>()."""

    block: str
    order: int


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    if isinstance(value, float):
        return Const(Fraction(value).limit_denominator(10**12))
    raise TypeError(f"cannot turn {value!r} into an expression")


def x(i: int) -> Var:
    return Var("x", i)


def t(j: int) -> Var:
    return Var("t", j)


def jbx() -> Bracket:
    return Bracket("x")


def jbt() -> Bracket:
    return Bracket("t")


def nx() -> Norm:
    return Norm("x")


def nt() -> Norm:
    return Norm("t")


def exp(e) -> Expr:
    return func("exp", as_expr(e))


def sin(e) -> Expr:
    return func("sin", as_expr(e))


def cos(e) -> Expr:
    return func("cos", as_expr(e))


def sqrt(e) -> Expr:
    return func("sqrt", as_expr(e))


# ----------------------------------------------------------------- constructors
# The raw_* builders only flatten; they are what the parser uses so that
# printing and re-parsing reproduces a tree exactly.  The simplifying builders
# are used for derivatives and programmatic construction.


def raw_add(*terms: Expr) -> Expr:
    flat = []
    for term in terms:
        flat.extend(term.terms if isinstance(term, Add) else (term,))
    return flat[0] if len(flat) == 1 else Add(tuple(flat))


def raw_mul(*factors: Expr) -> Expr:
    flat = []
    for f in factors:
        flat.extend(f.factors if isinstance(f, Mul) else (f,))
    return flat[0] if len(flat) == 1 else Mul(tuple(flat))


def raw_neg(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        return Mul((Const(-e.factors[0].value),) + e.factors[1:])
    return raw_mul(Const(Fraction(-1)), e)


def add(*terms: Expr) -> Expr:
    flat = []
    constant = Fraction(0)
    for term in terms:
        for item in term.terms if isinstance(term, Add) else (term,):
            if isinstance(item, Const):
                constant += item.value
            else:
                flat.append(item)
    if constant != 0 or not flat:
        flat.append(Const(constant))
    return flat[0] if len(flat) == 1 else Add(tuple(flat))


def mul(*factors: Expr) -> Expr:
    flat = []
    constant = Fraction(1)
    for f in factors:
        for item in f.factors if isinstance(f, Mul) else (f,):
            if isinstance(item, Const):
                constant *= item.value
            else:
                flat.append(item)
    if constant == 0:
        return ZERO
    if constant != 1 or not flat:
        flat.insert(0, Const(constant))
    return flat[0] if len(flat) == 1 else Mul(tuple(flat))


def neg(e: Expr) -> Expr:
    return mul(Const(Fraction(-1)), e)


def power(base: Expr, exponent: Fraction, check: bool = False) -> Expr:
    exponent = Fraction(exponent)
    if check:
        _check_power(base, exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        if exponent.denominator == 1 and (base.value != 0 or exponent > 0):
            return Const(base.value ** int(exponent))
    if isinstance(base, Pow) and (exponent.denominator == 1 or is_positive(base.base)):
        if base.exponent.denominator == 1 or is_positive(base.base):
            return power(base.base, base.exponent * exponent)
    return Pow(base, exponent)


def func(name: str, arg: Expr) -> Expr:
    if isinstance(arg, Const) and arg.value == 0:
        return {"exp": ONE, "sin": ZERO, "cos": ONE, "sqrt": ZERO}[name]
    return Func(name, arg)


def _check_power(base: Expr, exponent: Fraction) -> None:
    if exponent.denominator == 1 and exponent >= 0:
        return
    if not is_positive(base):
        raise ExprError(f"power {exponent} needs a base known to be positive, got {to_text(base)}")


def is_positive(e: Expr) -> bool:
    """Conservative syntactic positivity test."""
    if isinstance(e, Const):
        return e.value > 0
    if isinstance(e, (Bracket, Norm)):
        return True
    if isinstance(e, NormProfile):
        return e.order <= 1
    if isinstance(e, Func):
        return e.name == "exp" or (e.name == "sqrt" and is_positive(e.arg))
    if isinstance(e, Pow):
        return is_positive(e.base)
    if isinstance(e, Mul):
        return all(is_positive(f) for f in e.factors)
    if isinstance(e, Add):
        return all(is_nonnegative(term) for term in e.terms) and any(is_positive(term) for term in e.terms)
    return False


def is_nonnegative(e: Expr) -> bool:
    if is_positive(e):
        return True
    if isinstance(e, Const):
        return e.value >= 0
    if isinstance(e, Pow):
        return e.exponent.denominator == 1 and e.exponent.numerator % 2 == 0 and e.exponent > 0
    if isinstance(e, Mul):
        return all(is_nonnegative(f) for f in e.factors)
    if isinstance(e, Add):
        return all(is_nonnegative(term) for term in e.terms)
    if isinstance(e, Func):
        return e.name == "sqrt"
    return False


# ----------------------------------------------------------------------- printing


def _fraction_text(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def to_text(e: Expr) -> str:
    return _print(e, 0)


# precedence levels: 0 sum, 1 product, 2 unary, 3 power base
def _print(e: Expr, level: int) -> str:
    if isinstance(e, Const):
        text = _fraction_text(e.value)
        if e.value < 0 and level > 0:
            return f"({text})"
        if e.value.denominator != 1 and level >= 3:
            return f"({text})"
        return text
    if isinstance(e, Var):
        return f"{e.block}{e.index}"
    if isinstance(e, Bracket):
        return f"jb{e.block}()"
    if isinstance(e, Norm):
        return f"n{e.block}()"
    if isinstance(e, NormProfile):
        return f"n{e.block}d{e.order}()"
    if isinstance(e, Func):
        return f"{e.name}({_print(e.arg, 0)})"
    if isinstance(e, Pow):
        exponent = e.exponent
        if exponent.denominator == 1 and exponent >= 0:
            exp_text = str(exponent.numerator)
        else:
            exp_text = f"({_fraction_text(exponent)})"
        text = f"{_print(e.base, 3)}^{exp_text}"
        return f"({text})" if level >= 3 else text
    if isinstance(e, Mul):
        parts = []
        for i, f in enumerate(e.factors):
            if i == 0 and isinstance(f, Const):
                parts.append(_fraction_text(f.value))
            else:
                parts.append(_print(f, 2))
        text = "*".join(parts)
        return f"({text})" if level > 1 else text
    if isinstance(e, Add):
        pieces = [_print(e.terms[0], 0)]
        for term in e.terms[1:]:
            if isinstance(term, Const) and term.value < 0:
                pieces.append(" - " + _fraction_text(-term.value))
            elif isinstance(term, Mul) and isinstance(term.factors[0], Const) and term.factors[0].value < 0:
                flipped = Mul((Const(-term.factors[0].value),) + term.factors[1:])
                pieces.append(" - " + _print(flipped, 1))
            else:
                pieces.append(" + " + _print(term, 0) if not isinstance(term, Add) else f" + ({_print(term, 0)})")
        text = "".join(pieces)
        return f"({text})" if level > 0 else text
    raise TypeError(f"unknown node {e!r}")


# ------------------------------------------------------------------------ parsing

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:/\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*^()]))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + 1 + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[col - 1]!r}", col)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start + 1))
        pos = m.end()
    return tokens


def _literal(text: str) -> Fraction:
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise ZeroDivisionError
        return Fraction(Fraction(num), int(den))
    return Fraction(text)


class _Parser:
    def __init__(self, text: str, space: VarSpace):
        self.text = text
        self.space = space
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def eof_error(self, what: str):
        last = self.tokens[-1] if self.tokens else None
        if last is None:
            raise ParseError(f"empty expression, expected {what}", 1)
        raise ParseError(f"expected {what} after {last[1]!r}", last[2])

    def expect_op(self, op: str):
        tok = self.take()
        if tok is None:
            self.eof_error(f"'{op}'")
        if tok[0] != "op" or tok[1] != op:
            raise ParseError(f"expected '{op}', found {tok[1]!r}", tok[2])

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected {tok[1]!r}", tok[2])
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while (tok := self.peek()) is not None and tok[0] == "op" and tok[1] in "+-":
            self.take()
            rhs = self.term()
            terms.append(rhs if tok[1] == "+" else raw_neg(rhs))
        return raw_add(*terms)

    def term(self) -> Expr:
        factors = [self.unary()]
        while (tok := self.peek()) is not None and tok[0] == "op" and tok[1] == "*":
            self.take()
            factors.append(self.unary())
        return raw_mul(*factors)

    def unary(self) -> Expr:
        tok = self.peek()
        if tok is None:
            self.eof_error("an operand")
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            nxt = self.peek()
            operand = self.unary()
            # a bare numeric literal absorbs the sign
            if nxt is not None and nxt[0] == "num" and isinstance(operand, Const):
                return Const(-operand.value)
            return raw_neg(operand) if not isinstance(operand, Const) else raw_mul(Const(Fraction(-1)), operand)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok is not None and tok[0] == "op" and tok[1] == "^":
            self.take()
            exponent = self.exponent()
            try:
                _check_power(base, exponent)
            except ExprError as err:
                raise ParseError(str(err), tok[2]) from None
            return Pow(base, exponent)
        return base

    def exponent(self) -> Fraction:
        tok = self.peek()
        if tok is None:
            self.eof_error("an exponent")
        paren = tok[0] == "op" and tok[1] == "("
        if paren:
            self.take()
        sign = 1
        tok = self.peek()
        if tok is not None and tok[0] == "op" and tok[1] == "-":
            self.take()
            sign = -1
        tok = self.take()
        if tok is None:
            self.eof_error("a rational exponent")
        if tok[0] != "num":
            raise ParseError(f"exponent must be a rational literal, found {tok[1]!r}", tok[2])
        value = sign * self.number(tok)
        if paren:
            self.expect_op(")")
        return value

    def number(self, tok) -> Fraction:
        try:
            return _literal(tok[1])
        except ZeroDivisionError:
            raise ParseError("zero denominator in literal", tok[2]) from None

    def atom(self) -> Expr:
        tok = self.take()
        if tok is None:
            self.eof_error("an operand")
        kind, text, col = tok
        if kind == "num":
            return Const(self.number(tok))
        if kind == "op":
            if text == "(":
                inner = self.expr()
                self.expect_op(")")
                return inner
            raise ParseError(f"unexpected {text!r}", col)
        m = re.fullmatch(r"([xt])(\d+)", text)
        if m:
            block, index = m.group(1), int(m.group(2))
            limit = self.space.d if block == "x" else self.space.s
            if not 1 <= index <= limit:
                raise ParseError(f"unknown variable {text!r} (space has d={self.space.d}, s={self.space.s})", col)
            return Var(block, index)
        if text in UNARY_FUNCS:
            args = self.call_args(text, col)
            if len(args) != 1:
                raise ParseError(f"{text} takes 1 argument, got {len(args)}", col)
            return Func(text, args[0])
        profile = re.fullmatch(r"n([xt])d(\d+)", text)
        if text in BLOCK_FUNCS or profile:
            args = self.call_args(text, col)
            if args:
                raise ParseError(f"{text} takes no arguments, got {len(args)}", col)
            if profile:
                return NormProfile(profile.group(1), int(profile.group(2)))
            kind_name, block = BLOCK_FUNCS[text]
            return Bracket(block) if kind_name == "bracket" else Norm(block)
        raise ParseError(f"unknown identifier {text!r}", col)

    def call_args(self, name: str, col: int) -> list:
        tok = self.peek()
        if tok is None or tok[0] != "op" or tok[1] != "(":
            raise ParseError(f"{name} must be called with parentheses", col)
        self.take()
        tok = self.peek()
        if tok is not None and tok[0] == "op" and tok[1] == ")":
            self.take()
            return []
        args = [self.expr()]
        tok = self.peek()
        if tok is None:
            self.eof_error("')'")
        if tok[0] == "op" and tok[1] == ")":
            self.take()
            return args
        raise ParseError(f"{name}: expected ')' (functions take a single argument), found {tok[1]!r}", tok[2])


def parse(text: str, space: VarSpace) -> Expr:
    return _Parser(text, space).parse()


# --------------------------------------------------------------- differentiation


def diff(e: Expr, var: Var) -> Expr:
    memo: dict[int, Expr] = {}
    return _diff(e, var, memo)


def _diff(e: Expr, var: Var, memo: dict) -> Expr:
    key = id(e)
    if key in memo:
        return memo[key][1]
    result = _diff_node(e, var, memo)
    memo[key] = (e, result)  # keep e alive so the id stays unique
    return result


def _diff_node(e: Expr, var: Var, memo: dict) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e == var else ZERO
    if isinstance(e, Add):
        return add(*(_diff(term, var, memo) for term in e.terms))
    if isinstance(e, Mul):
        parts = []
        for i, f in enumerate(e.factors):
            df = _diff(f, var, memo)
            if df == ZERO:
                continue
            parts.append(mul(*e.factors[:i], df, *e.factors[i + 1:]))
        return add(*parts) if parts else ZERO
    if isinstance(e, Pow):
        db = _diff(e.base, var, memo)
        if db == ZERO:
            return ZERO
        return mul(Const(e.exponent), power(e.base, e.exponent - 1), db)
    if isinstance(e, Func):
        du = _diff(e.arg, var, memo)
        if du == ZERO:
            return ZERO
        outer = {
            "exp": lambda: e,
            "sin": lambda: Func("cos", e.arg),
            "cos": lambda: neg(Func("sin", e.arg)),
            "sqrt": lambda: mul(Const(Fraction(1, 2)), Pow(e, Fraction(-1))),
        }[e.name]()
        return mul(outer, du)
    if var.block != getattr(e, "block", None):
        return ZERO
    if isinstance(e, Bracket):
        return mul(var, Pow(e, Fraction(-1)))
    if isinstance(e, Norm):
        return mul(NormProfile(e.block, 1), var, Pow(e, Fraction(-1)))
    if isinstance(e, NormProfile):
        return mul(Const(Fraction(2)), var, NormProfile(e.block, e.order + 1))
    raise TypeError(f"unknown node {e!r}")


def grad(e: Expr, space: VarSpace, block: str = "both") -> list[Expr]:
    return [diff(e, v) for v in space.variables(block)]


def hessian(e: Expr, space: VarSpace, block: str = "both") -> list[list[Expr]]:
    variables = space.variables(block)
    first = [diff(e, v) for v in variables]
    return [[diff(first[i], variables[j]) for j in range(len(variables))] for i in range(len(variables))]


# ---------------------------------------------------------------------- evaluation


@lru_cache(maxsize=None)
def _bump_poly(order: int) -> np.poly1d:
    """p_k with d^k/ds^k exp(-1/s) = p_k(1/s) exp(-1/s)."""
    p = np.poly1d([1.0])
    for _ in range(order):
        p = np.poly1d([1.0, 0.0, 0.0]) * (p - p.deriv())
    return p


def bump_derivative(u: np.ndarray, order: int) -> np.ndarray:
    """order-th derivative in u of eps0^2 * exp(1/9 - 1/(9 - u)), zero for u >= 9."""
    u = np.asarray(u, dtype=float)
    s = NORM_SWITCH_SQ - u
    inside = s > 0
    safe = np.where(inside, s, 1.0)
    w = 1.0 / safe
    values = _bump_poly(order)(w) * np.exp(1.0 / NORM_SWITCH_SQ - w) * ((-1.0) ** order) * NORM_EPS0_SQ
    return np.where(inside, values, 0.0)


def norm_profile(u: np.ndarray, order: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    base = bump_derivative(u, order)
    if order == 0:
        return u + base
    if order == 1:
        return 1.0 + base
    return base


def smooth_norm(v: np.ndarray) -> np.ndarray:
    """[v] along the last axis."""
    v = np.asarray(v, dtype=float)
    return np.sqrt(norm_profile(np.sum(v * v, axis=-1), 0))


def japanese_bracket(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.sqrt(1.0 + np.sum(v * v, axis=-1))


def evaluate(e: Expr, xs, ts, strict: bool = True):
    """Evaluate on arrays xs (..., d) and ts (..., s); broadcasting over leading axes.

    Complex inputs are allowed for polynomial/exponential expressions only when
    ``strict`` is false; the default path is real.
    """
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if xs.ndim == 0:
        xs = xs[None]
    if ts.ndim == 0:
        ts = ts[None]
    shape = np.broadcast_shapes(xs.shape[:-1], ts.shape[:-1])
    blocks = {"x": xs, "t": ts}
    cache: dict[int, np.ndarray] = {}
    keep = []

    def squared(block):
        key = ("sq", block)
        if key not in cache:
            v = blocks[block]
            cache[key] = np.sum(v * v, axis=-1)
        return cache[key]

    def ev(node: Expr):
        key = id(node)
        if key in cache:
            return cache[key]
        keep.append(node)
        if isinstance(node, Const):
            out = float(node.value)
        elif isinstance(node, Var):
            arr = blocks[node.block]
            if not 1 <= node.index <= arr.shape[-1]:
                raise ExprError(f"variable {node.block}{node.index} outside the evaluation space")
            out = arr[..., node.index - 1]
        elif isinstance(node, Add):
            out = ev(node.terms[0])
            for term in node.terms[1:]:
                out = out + ev(term)
        elif isinstance(node, Mul):
            out = ev(node.factors[0])
            for f in node.factors[1:]:
                out = out * ev(f)
        elif isinstance(node, Pow):
            base = ev(node.base)
            q = node.exponent
            if q.denominator == 1 and q >= 0:
                out = base ** int(q)
            else:
                if strict and np.any(np.asarray(base) <= 0):
                    raise DomainError(f"non-positive base in {to_text(node)}")
                out = np.power(base, float(q))
        elif isinstance(node, Func):
            arg = ev(node.arg)
            if node.name == "sqrt":
                if strict and np.any(np.asarray(arg) < 0):
                    raise DomainError(f"negative argument in {to_text(node)}")
                out = np.sqrt(arg)
            else:
                out = getattr(np, node.name)(arg)
        elif isinstance(node, Bracket):
            out = np.sqrt(1.0 + squared(node.block))
        elif isinstance(node, Norm):
            out = np.sqrt(norm_profile(squared(node.block), 0))
        elif isinstance(node, NormProfile):
            out = norm_profile(squared(node.block), node.order)
        else:
            raise TypeError(f"unknown node {node!r}")
        cache[key] = out
        return out

    return np.broadcast_to(ev(e), shape).copy() if shape else float(ev(e))


def eval_point(e: Expr, point: Sequence[float], space: VarSpace) -> float:
    point = np.asarray(point, dtype=float)
    if point.shape[-1] != space.n:
        raise ExprError(f"point has length {point.shape[-1]}, expected {space.n}")
    return evaluate(e, point[..., : space.d], point[..., space.d:])


def central_difference(e: Expr, var: Var, point: Sequence[float], space: VarSpace, h: float = 1e-5) -> float:
    point = np.array(point, dtype=float)
    k = var.index - 1 if var.block == "x" else space.d + var.index - 1
    up, down = point.copy(), point.copy()
    up[k] += h
    down[k] -= h
    return (eval_point(e, up, space) - eval_point(e, down, space)) / (2 * h)


def variables_used(e: Expr) -> set:
    found = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            found.add(node)
        elif isinstance(node, Add):
            stack.extend(node.terms)
        elif isinstance(node, Mul):
            stack.extend(node.factors)
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif isinstance(node, Func):
            stack.append(node.arg)
        elif isinstance(node, (Bracket, Norm, NormProfile)):
            found.add(("block", node.block))
    return found


def substitute(e: Expr, mapping: dict, sizes: dict | None = None) -> Expr:
    """Replace variables by expressions.

    Japanese brackets of a substituted block are rebuilt from the substituted
    components, which needs the block size in ``sizes``.  Smooth norms of a
    substituted block are not supported.
    """
    memo: dict[int, tuple] = {}
    touched = {key.block for key in mapping}

    def go(node: Expr) -> Expr:
        k = id(node)
        if k in memo:
            return memo[k][1]
        if isinstance(node, Var):
            out = mapping.get(node, node)
        elif isinstance(node, Const):
            out = node
        elif isinstance(node, Add):
            out = add(*(go(term) for term in node.terms))
        elif isinstance(node, Mul):
            out = mul(*(go(f) for f in node.factors))
        elif isinstance(node, Pow):
            out = power(go(node.base), node.exponent)
        elif isinstance(node, Func):
            out = func(node.name, go(node.arg))
        elif isinstance(node, Bracket) and node.block in touched:
            if not sizes or node.block not in sizes:
                raise ExprError(f"block size for {node.block} needed to substitute into {to_text(node)}")
            comps = [mapping.get(Var(node.block, i), Var(node.block, i)) for i in range(1, sizes[node.block] + 1)]
            out = Func("sqrt", add(ONE, *(power(c, 2) for c in comps)))
        elif isinstance(node, (Norm, NormProfile)) and node.block in touched:
            raise ExprError(f"cannot substitute into the smooth norm {to_text(node)}")
        else:
            out = node
        memo[k] = (node, out)
        return out

    return go(e)


def random_expression(rng: np.random.Generator, space: VarSpace, depth: int = 3) -> Expr:
    """Random well-defined expression used by property tests."""
    variables = space.variables()

    def leaf():
        r = rng.integers(0, 6)
        if r == 0:
            return Const(Fraction(int(rng.integers(1, 5)), int(rng.integers(1, 4))))
        if r == 1:
            return Bracket(BLOCKS[int(rng.integers(0, 2))])
        if r == 2:
            return Norm(BLOCKS[int(rng.integers(0, 2))])
        return variables[int(rng.integers(0, len(variables)))]

    def build(level: int) -> Expr:
        if level == 0:
            return leaf()
        r = rng.integers(0, 8)
        if r == 0:
            return add(build(level - 1), build(level - 1))
        if r == 1:
            return mul(build(level - 1), build(level - 1))
        if r == 2:
            return power(build(level - 1), Fraction(int(rng.integers(2, 4))))
        if r == 3:
            positive = mul(Bracket(BLOCKS[int(rng.integers(0, 2))]), exp(mul(Const(Fraction(1, 4)), build(level - 1))))
            return power(positive, Fraction(int(rng.integers(-3, 4)), 2))
        if r == 4:
            return sin(build(level - 1))
        if r == 5:
            return cos(build(level - 1))
        if r == 6:
            return sqrt(add(ONE, power(build(level - 1), Fraction(2))))
        return add(mul(Const(Fraction(int(rng.integers(-3, 4)))), build(level - 1)), leaf())

    return build(depth)


def block_gradient_values(exprs: Iterable[Expr], xs, ts) -> np.ndarray:
    return np.stack([evaluate(e, xs, ts) for e in exprs], axis=-1)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0


def fraction_str(value: Fraction) -> str:
    return _fraction_text(Fraction(value))


def isclose_rel(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * (1 + abs(b)) and math.isfinite(a)
