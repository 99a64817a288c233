"""Exact sparse multivariate polynomials over the rationals.

Coefficients are :class:`fractions.Fraction` throughout; floating point only
appears when a polynomial is evaluated (``eval_f64`` or the vectorised
:class:`PolyMap`).  Polynomials are immutable.

Text form follows a small grammar::

    expr     := ['-'] term (('+' | '-') ['-'] term)*
    term     := factor ('*' factor)*
    factor   := base ('^' uint)?
    base     := variable | rational | '(' expr ')'
    rational := int ('/' posint)?

Implicit multiplication is rejected, whitespace is ignored.

Besides the expanded term map, a polynomial built by multiplication or
powering of non-monomials remembers how it was built.  Float evaluation
walks that expression instead of the expanded sum: ``(z^2 - x^7)^2 - y^47``
expanded loses every digit near the valley ``z^2 = x^7`` while the factored
form keeps its sign right.  Exact operations never look at the expression.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegreeOverflow,
    DimensionMismatch,
    PolynomialSyntaxError,
    RankDeficientMatrix,
    UnknownVariable,
    VariableMismatch,
)

MAX_DEGREE = 512

Exponent = tuple  # tuple[int, ...]


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, (float, np.floating)):
        return Fraction(float(value))
    raise TypeError(f"cannot use {type(value).__name__} as a rational coefficient")


def _grlex_key(exps: Exponent):
    return (sum(exps), exps)


class Polynomial:
    """A polynomial in a fixed, ordered list of variables.

    ``terms`` maps exponent tuples to nonzero ``Fraction`` coefficients.
    Arithmetic between polynomials requires identical variable lists.
    """

    __slots__ = ("variables", "_terms", "_hash", "_compiled", "_expr")

    def __init__(self, variables: Sequence[str], terms: Mapping[Exponent, object] | None = None):
        self.variables = tuple(variables)
        n = len(self.variables)
        clean: dict[Exponent, Fraction] = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != n:
                raise DimensionMismatch(f"exponent {exps} has length {len(exps)}, expected {n}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = _as_fraction(coeff)
            if c:
                c = clean.get(exps, Fraction(0)) + c
                if c:
                    clean[exps] = c
                else:
                    clean.pop(exps, None)
        if clean and max(sum(e) for e in clean) > MAX_DEGREE:
            raise DegreeOverflow(f"total degree exceeds {MAX_DEGREE}")
        self._terms = clean
        self._hash = None
        self._compiled = None
        self._expr = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, variables: Sequence[str]) -> "Polynomial":
        return cls(variables)

    @classmethod
    def constant(cls, variables: Sequence[str], value) -> "Polynomial":
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def variable(cls, variables: Sequence[str], name: str) -> "Polynomial":
        variables = tuple(variables)
        if name not in variables:
            raise UnknownVariable(name)
        exps = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exps: 1})

    @classmethod
    def parse(cls, text: str, variables: Sequence[str]) -> "Polynomial":
        return parse(text, variables)

    # -- basic accessors ----------------------------------------------------

    @property
    def nvars(self) -> int:
        return len(self.variables)

    @property
    def terms(self) -> tuple[tuple[Exponent, Fraction], ...]:
        """Terms in descending graded-lexicographic order."""
        return tuple(sorted(self._terms.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True))

    def term_dict(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def coefficient(self, exps: Iterable[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self._terms)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.variables == other.variables and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.variables, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.variables, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"Polynomial({str(self)!r}, variables={list(self.variables)!r})"

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.variables != self.variables:
                raise VariableMismatch(f"{self.variables} vs {other.variables}")
            return other
        if isinstance(other, (int, Fraction, np.integer)):
            return Polynomial.constant(self.variables, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return _with_expr(Polynomial(self.variables, out), "add", self, other)

    __radd__ = __add__

    def __neg__(self):
        out = Polynomial(self.variables, {e: -c for e, c in self._terms.items()})
        return _with_expr(out, "neg", self)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, Fraction(0)) - c
        return _with_expr(Polynomial(self.variables, out), "sub", self, other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.degree + other.degree > MAX_DEGREE:
            raise DegreeOverflow(f"product degree {self.degree + other.degree} exceeds {MAX_DEGREE}")
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return _with_expr(Polynomial(self.variables, out), "mul", self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        k = int(k)
        if k == 0:
            return Polynomial.constant(self.variables, 1)
        if self.degree * k > MAX_DEGREE:
            raise DegreeOverflow(f"power degree {self.degree * k} exceeds {MAX_DEGREE}")
        if k == 1:
            return self
        if len(self._terms) == 1:
            (e, c), = self._terms.items()
            return Polynomial(self.variables, {tuple(a * k for a in e): c ** k})
        result = Polynomial.constant(self.variables, 1)
        base = Polynomial(self.variables, self._terms)
        e = k
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        out = Polynomial(self.variables, result._terms)
        out._expr = _Expr("pow", (_node(self),), poly=self, k=k)
        return out

    def scale(self, factor) -> "Polynomial":
        f = _as_fraction(factor)
        out = Polynomial(self.variables, {e: c * f for e, c in self._terms.items()})
        if self._expr is not None and f:
            out._expr = _Expr("scale", (self._expr,), k=f)
        return out

    # -- calculus -----------------------------------------------------------

    def derivative(self, index: int) -> "Polynomial":
        out = {}
        for e, c in self._terms.items():
            k = e[index]
            if k:
                d = list(e)
                d[index] = k - 1
                out[tuple(d)] = c * k
        return Polynomial(self.variables, out)

    def gradient(self) -> list["Polynomial"]:
        return [self.derivative(i) for i in range(self.nvars)]

    # -- evaluation ---------------------------------------------------------

    def _check_point(self, point) -> None:
        if len(point) != self.nvars:
            raise DimensionMismatch(f"point has {len(point)} coordinates, polynomial has {self.nvars} variables")

    def eval_exact(self, point: Sequence) -> Fraction:
        self._check_point(point)
        xs = [_as_fraction(x) for x in point]
        total = Fraction(0)
        for e, c in self._terms.items():
            t = c
            for x, k in zip(xs, e):
                if k:
                    t *= x ** k
            total += t
        return total

    def eval_f64(self, point: Sequence[float]) -> float:
        self._check_point(point)
        xs = [float(x) for x in point]
        parts = []
        for e, c in self._terms.items():
            t = float(c)
            for x, k in zip(xs, e):
                if k:
                    t *= x ** k
            parts.append(t)
        return math.fsum(parts)

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple, np.ndarray)):
            point = point[0]
        return self.eval_f64(point)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Vectorised float evaluation at an ``(N, n)`` array of points."""
        points = as_points(points)
        if points.shape[1] != self.nvars:
            raise DimensionMismatch(f"points have {points.shape[1]} columns, expected {self.nvars}")
        if self._expr is not None:
            return self._expr.evaluate(points, False, {})[0]
        return self._expanded_values(points)

    def evaluate_with_gradient(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values ``(N,)`` and gradients ``(N, n)``, following the build expression."""
        points = as_points(points)
        if points.shape[1] != self.nvars:
            raise DimensionMismatch(f"points have {points.shape[1]} columns, expected {self.nvars}")
        if self._expr is not None:
            return self._expr.evaluate(points, True, {})
        return _leaf_eval(self, points, True)

    @property
    def has_expression(self) -> bool:
        return self._expr is not None

    def square_split(self) -> tuple["Polynomial", "Polynomial", int] | None:
        """``(A, h, m)`` when this polynomial is ``±(A^2 - h^m)``.

        Recognised from the build expression, or from a two-term expanded
        form ``M^2 - v^m`` with ``M`` a monic monomial and ``v`` a variable.
        Only the zero set matters to callers, so the overall sign is free.
        """
        if self._expr is not None:
            if self._expr.op != "sub":
                return None
            first, second = self._expr.args
        else:
            if len(self._terms) != 2:
                return None
            (e1, c1), (e2, c2) = self.terms
            if {c1, c2} != {1, -1}:
                return None
            first = _Expr("leaf", (), poly=Polynomial(self.variables, {e1: 1}))
            second = _Expr("leaf", (), poly=Polynomial(self.variables, {e2: 1}))
        for a_node, b_node in ((first, second), (second, first)):
            a = _root_form(a_node)
            b = _power_form(b_node)
            if a is not None and b is not None:
                return a, b[0], b[1]
        return None

    def expression_string(self) -> str:
        """The build expression in the parseable grammar (expanded form if none)."""
        if self._expr is None:
            return to_string(self)
        return self._expr.render(0)

    def _expanded_values(self, points: np.ndarray) -> np.ndarray:
        if self._compiled is None:
            items = list(self._terms.items())
            exps = np.array([e for e, _ in items], dtype=np.int64).reshape(len(items), self.nvars)
            coeffs = np.array([float(c) for _, c in items], dtype=float)
            self._compiled = (exps, coeffs)
        exps, coeffs = self._compiled
        if not len(coeffs):
            return np.zeros(points.shape[0], dtype=points.dtype)
        return monomial_values(points, exps) @ coeffs

    # -- misc ---------------------------------------------------------------

    def with_variables(self, variables: Sequence[str]) -> "Polynomial":
        """Re-express over another variable list containing all used variables."""
        variables = tuple(variables)
        index = {v: i for i, v in enumerate(variables)}
        out = {}
        for e, c in self._terms.items():
            new = [0] * len(variables)
            for v, k in zip(self.variables, e):
                if k:
                    if v not in index:
                        raise UnknownVariable(v)
                    new[index[v]] = k
            out[tuple(new)] = c
        res = Polynomial(variables, out)
        if self._expr is not None:
            res._expr = self._expr.map_leaves(lambda q: q.with_variables(variables))
        return res

    def permute(self, order: Sequence[int]) -> "Polynomial":
        """Substitute x_i -> x_{order[i]} (variable names kept)."""
        out = {}
        for e, c in self._terms.items():
            new = [0] * self.nvars
            for i, k in enumerate(e):
                new[order[i]] += k
            out[tuple(new)] = c
        res = Polynomial(self.variables, out)
        if self._expr is not None:
            res._expr = self._expr.map_leaves(lambda q: q.permute(order))
        return res

    def __str__(self) -> str:
        return to_string(self)


# ---------------------------------------------------------------------------
# build expressions for stable float evaluation

_ATOM = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+")


def _is_simple(p: Polynomial) -> bool:
    return p._expr is None and len(p._terms) <= 1


def _node(p: Polynomial) -> "_Expr":
    return p._expr if p._expr is not None else _Expr("leaf", (), poly=p)


def _with_expr(out: Polynomial, op: str, *operands: Polynomial) -> Polynomial:
    """Attach a build expression when expanding could lose float accuracy."""
    if len(out._terms) <= 1:
        return out
    if op in ("add", "sub", "neg"):
        if all(q._expr is None for q in operands):
            return out
    elif op == "mul":
        if all(_is_simple(q) for q in operands):
            return out
    out._expr = _Expr(op, tuple(_node(q) for q in operands))
    return out


def _root_form(node: "_Expr") -> Polynomial | None:
    """``A`` if the node is ``A^2``."""
    if node.op == "pow" and node.k == 2:
        return node.poly
    if node.op == "leaf" and len(node.poly._terms) == 1:
        (e, c), = node.poly._terms.items()
        if c == 1 and any(e) and all(k % 2 == 0 for k in e):
            return Polynomial(node.poly.variables, {tuple(k // 2 for k in e): 1})
    return None


def _power_form(node: "_Expr") -> tuple[Polynomial, int] | None:
    """``(h, m)`` if the node is ``h^m`` with ``m >= 2``."""
    if node.op == "pow" and node.k >= 2:
        return node.poly, node.k
    if node.op == "leaf" and len(node.poly._terms) == 1:
        (e, c), = node.poly._terms.items()
        used = [i for i, k in enumerate(e) if k]
        if c == 1 and len(used) == 1 and e[used[0]] >= 2:
            i = used[0]
            v = Polynomial(node.poly.variables, {tuple(int(j == i) for j in range(len(e))): 1})
            return v, e[i]
    return None


def as_points(X) -> np.ndarray:
    """``(N, n)`` float array; extended precision input stays extended."""
    X = np.asarray(X)
    if X.dtype != np.longdouble:
        X = X.astype(float, copy=False)
    return np.atleast_2d(X)


def _leaf_eval(p: Polynomial, X: np.ndarray, grad: bool):
    val = p._expanded_values(X)
    if not grad:
        return val, None
    g = np.zeros((X.shape[0], p.nvars), dtype=X.dtype)
    for i, d in enumerate(p.gradient()):
        if not d.is_zero():
            g[:, i] = d._expanded_values(X)
    return val, g


def monomial_values(X: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """``(N, t)`` array of the monomials ``x^e`` for each row ``e`` of ``exps``.

    Powers come from per-variable tables built by repeated multiplication,
    which is much cheaper than elementwise ``**`` for high degrees.
    """
    N, n = X.shape
    out = np.ones((N, exps.shape[0]), dtype=X.dtype)
    with np.errstate(under="ignore", over="ignore"):
        for j in range(n):
            col = exps[:, j]
            top = int(col.max()) if col.size else 0
            if top == 0:
                continue
            table = np.empty((N, top + 1), dtype=X.dtype)
            table[:, 0] = 1.0
            for k in range(1, top + 1):
                table[:, k] = table[:, k - 1] * X[:, j]
            out *= table[:, col]
    return out


class _Expr:
    __slots__ = ("op", "args", "poly", "k", "_grad_cache")

    def __init__(self, op: str, args: tuple = (), poly: Polynomial | None = None, k=None):
        self.op = op
        self.args = args
        self.poly = poly
        self.k = k

    def map_leaves(self, fn) -> "_Expr":
        if self.op == "leaf":
            return _Expr("leaf", (), poly=fn(self.poly))
        return _Expr(self.op, tuple(a.map_leaves(fn) for a in self.args), k=self.k)

    def evaluate(self, X: np.ndarray, grad: bool, memo: dict):
        key = id(self)
        if key in memo:
            return memo[key]
        op = self.op
        if op == "leaf":
            out = _leaf_eval(self.poly, X, grad)
        else:
            parts = [a.evaluate(X, grad, memo) for a in self.args]
            if op == "add":
                (a, ga), (b, gb) = parts
                out = (a + b, ga + gb if grad else None)
            elif op == "sub":
                (a, ga), (b, gb) = parts
                out = (a - b, ga - gb if grad else None)
            elif op == "neg":
                a, ga = parts[0]
                out = (-a, -ga if grad else None)
            elif op == "mul":
                (a, ga), (b, gb) = parts
                out = (a * b, a[:, None] * gb + b[:, None] * ga if grad else None)
            elif op == "scale":
                a, ga = parts[0]
                c = float(self.k)
                out = (c * a, c * ga if grad else None)
            elif op == "pow":
                a, ga = parts[0]
                with np.errstate(under="ignore"):
                    lower = a ** (self.k - 1)
                    out = (lower * a, (self.k * lower)[:, None] * ga if grad else None)
            else:  # pragma: no cover - internal invariant
                raise AssertionError(op)
        memo[key] = out
        return out

    # precedence: 0 sum, 1 product, 2 power base
    def render(self, level: int) -> str:
        op = self.op
        if op == "leaf":
            text = to_string(self.poly)
            if level == 0 or _ATOM.fullmatch(text):
                return text
            if level == 1 and len(self.poly._terms) <= 1 and not text.startswith("-"):
                return text
            return f"({text})"
        if op in ("add", "sub"):
            a = self.args[0].render(0)
            b = self.args[1].render(1 if op == "sub" else 0)
            if op == "add" and b.startswith("-"):
                text = f"{a} + ({b})"
            else:
                text = f"{a} {'+' if op == 'add' else '-'} {b}"
            return text if level == 0 else f"({text})"
        if op == "neg":
            text = "-" + self.args[0].render(1)
            return text if level == 0 else f"({text})"
        if op == "mul":
            text = f"{self.args[0].render(1)}*{self.args[1].render(1)}"
            return text if level <= 1 else f"({text})"
        if op == "scale":
            c = self.k
            text = f"{_format_fraction(c)}*{self.args[0].render(1)}"
            if c < 0:
                text = f"-{_format_fraction(-c)}*{self.args[0].render(1)}"
                return text if level == 0 else f"({text})"
            return text if level <= 1 else f"({text})"
        if op == "pow":
            text = f"{self.args[0].render(2)}^{self.k}"
            return text if level <= 1 else f"({text})"
        raise AssertionError(op)


# ---------------------------------------------------------------------------
# printing

def _format_fraction(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _format_monomial(variables, exps) -> str:
    parts = []
    for v, k in zip(variables, exps):
        if k == 1:
            parts.append(v)
        elif k > 1:
            parts.append(f"{v}^{k}")
    return "*".join(parts)


def to_string(p: Polynomial) -> str:
    """Render ``p`` in the parseable grammar, terms in grlex order."""
    if p.is_zero():
        return "0"
    chunks = []
    for i, (e, c) in enumerate(p.terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        mono = _format_monomial(p.variables, e)
        if not mono:
            body = _format_fraction(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_format_fraction(mag)}*{mono}"
        if i == 0:
            chunks.append(body if sign == "+" else f"-{body}")
        else:
            chunks.append(f" {sign} {body}")
    return "".join(chunks)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # trailing whitespace
            break
        start = m.start(m.lastindex) if m.lastindex else m.end()
        num, name, op = m.groups()
        if num is not None:
            tokens.append(("int", num, start))
        elif name is not None:
            tokens.append(("name", name, start))
        elif op is not None:
            if op.isspace():
                pos = m.end()
                continue
            if op not in "+-*/^()":
                raise PolynomialSyntaxError(f"unexpected character {op!r}", start, text)
            tokens.append(("op", op, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.variables = tuple(variables)
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise PolynomialSyntaxError(message, tok[2], self.text)

    def expect_op(self, op):
        tok = self.advance()
        if tok[0] != "op" or tok[1] != op:
            self.fail(f"expected {op!r}", tok)

    def parse(self) -> Polynomial:
        if self.peek()[0] == "end":
            self.fail("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            tok = self.peek()
            if tok[0] in ("name", "int") or tok[1] == "(":
                self.fail("implicit multiplication is not allowed")
            self.fail(f"unexpected token {tok[1]!r}")
        return p

    def signed_term(self) -> Polynomial:
        if self.peek() == ("op", "-", self.peek()[2]):
            self.advance()
            return -self.term()
        return self.term()

    def expr(self) -> Polynomial:
        p = self.signed_term()
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] in "+-":
                self.advance()
                rhs = self.signed_term()
                p = p + rhs if tok[1] == "+" else p - rhs
            else:
                return p

    def term(self) -> Polynomial:
        p = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.advance()
            p = p * self.factor()
        return p

    def factor(self) -> Polynomial:
        b = self.base()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.advance()
            exp = self.advance()
            if exp[0] != "int":
                self.fail("exponent must be a non-negative integer literal", exp)
            return b ** int(exp[1])
        return b

    def base(self) -> Polynomial:
        tok = self.advance()
        kind, value, _ = tok
        if kind == "name":
            if value not in self.variables:
                raise UnknownVariable(f"unknown variable {value!r} at position {tok[2]}")
            return Polynomial.variable(self.variables, value)
        if kind == "int":
            num = int(value)
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "/":
                self.advance()
                den = self.advance()
                if den[0] != "int" or int(den[1]) == 0:
                    self.fail("denominator must be a positive integer", den)
                return Polynomial.constant(self.variables, Fraction(num, int(den[1])))
            return Polynomial.constant(self.variables, num)
        if kind == "op" and value == "(":
            p = self.expr()
            self.expect_op(")")
            return p
        if kind == "end":
            self.fail("unexpected end of expression", tok)
        self.fail(f"unexpected token {value!r}", tok)


def parse(text: str, variables: Sequence[str]) -> Polynomial:
    """Parse ``text`` into a polynomial over ``variables``."""
    return _Parser(text, variables).parse()


# ---------------------------------------------------------------------------
# free-function forms of the ring operations

def _same_vars(a: Polynomial, b: Polynomial) -> None:
    if a.variables != b.variables:
        raise VariableMismatch(f"{a.variables} vs {b.variables}")


def add(a: Polynomial, b: Polynomial) -> Polynomial:
    _same_vars(a, b)
    return a + b


def mul(a: Polynomial, b: Polynomial) -> Polynomial:
    _same_vars(a, b)
    return a * b


def pow(a: Polynomial, k: int) -> Polynomial:  # noqa: A001 - mirrors the ring API
    return a ** k


def negate(a: Polynomial) -> Polynomial:
    return -a


def gradient(p: Polynomial) -> list[Polynomial]:
    return p.gradient()


def eval_f64(p: Polynomial, point: Sequence[float]) -> float:
    return p.eval_f64(point)


def eval_exact(p: Polynomial, point: Sequence) -> Fraction:
    return p.eval_exact(point)


def rational_rank(matrix: Sequence[Sequence]) -> int:
    """Exact rank of a rational matrix by fraction-free-ish Gaussian elimination."""
    rows = [[_as_fraction(x) for x in row] for row in matrix]
    if not rows:
        return 0
    ncols = len(rows[0])
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / rows[rank][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def compose_linear(polys: Sequence[Polynomial], matrix: Sequence[Sequence]) -> list[Polynomial]:
    """Return ``matrix @ polys``: component j is sum_k matrix[j][k] * polys[k]."""
    polys = list(polys)
    if not polys:
        raise ValueError("need at least one polynomial")
    for p in polys[1:]:
        _same_vars(polys[0], p)
    rows = [[_as_fraction(x) for x in row] for row in matrix]
    if any(len(row) != len(polys) for row in rows):
        raise DimensionMismatch(f"matrix rows must have {len(polys)} entries")
    if len(rows) > len(polys) or rational_rank(rows) < len(rows):
        raise RankDeficientMatrix("projection matrix must have full row rank")
    out = []
    for row in rows:
        acc = Polynomial.zero(polys[0].variables)
        for coeff, p in zip(row, polys):
            if coeff:
                acc = acc + p.scale(coeff)
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# vectorised evaluation of polynomial maps

class PolyMap:
    """Float evaluation of a polynomial map F and its Jacobian on point arrays.

    Components without a build expression share one merged monomial table so
    each call costs a single power/product sweep; the others are evaluated
    along their expressions with forward-mode derivatives.
    """

    def __init__(self, polys: Sequence[Polynomial], nvars: int | None = None):
        self.polys = list(polys)
        if nvars is None:
            if not self.polys:
                raise ValueError("nvars required for an empty map")
            nvars = self.polys[0].nvars
        self.nvars = nvars
        self._tree_rows = [k for k, p in enumerate(self.polys) if p._expr is not None]
        self._flat_rows = [k for k, p in enumerate(self.polys) if p._expr is None]
        flat = [self.polys[k] for k in self._flat_rows]
        monomials: dict[Exponent, int] = {}

        def index(e):
            if e not in monomials:
                monomials[e] = len(monomials)
            return monomials[e]

        value_entries = []
        jac_entries = []
        for k, p in enumerate(flat):
            for e, c in p.term_dict().items():
                value_entries.append((k, index(e), float(c)))
            for j, dp in enumerate(p.gradient()):
                for e, c in dp.term_dict().items():
                    jac_entries.append((k, j, index(e), float(c)))
        u = max(len(monomials), 1)
        self._exps = np.zeros((u, nvars), dtype=np.int64)
        for e, i in monomials.items():
            self._exps[i] = e
        self._vals = np.zeros((len(flat), u))
        for k, i, c in value_entries:
            self._vals[k, i] += c
        self._jac = np.zeros((len(flat), nvars, u))
        for k, j, i, c in jac_entries:
            self._jac[k, j, i] += c
        self._max_exp = int(self._exps.max()) if self._exps.size else 0

    def __len__(self) -> int:
        return len(self.polys)

    def _monomials(self, X: np.ndarray) -> np.ndarray:
        return monomial_values(X, self._exps)

    def _evaluate(self, X: np.ndarray, grad: bool):
        X = as_points(X)
        N = X.shape[0]
        F = np.zeros((N, len(self.polys)), dtype=X.dtype)
        J = np.zeros((N, len(self.polys), self.nvars), dtype=X.dtype) if grad else None
        if self._flat_rows:
            M = self._monomials(X)
            F[:, self._flat_rows] = M @ self._vals.T
            if grad:
                J[:, self._flat_rows, :] = np.einsum("nu,kju->nkj", M, self._jac)
        memo: dict = {}
        for k in self._tree_rows:
            v, g = self.polys[k]._expr.evaluate(X, grad, memo)
            F[:, k] = v
            if grad:
                J[:, k, :] = g
        return F, J

    def values(self, X: np.ndarray) -> np.ndarray:
        return self._evaluate(X, False)[0]

    def values_and_jacobian(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self._evaluate(X, True)

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        return self.values_and_jacobian(X)[1]
