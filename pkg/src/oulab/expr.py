"""Cylindrical test functions with exact symbolic gradients.

A function is ``f(x) = phi(l_1 . x, ..., l_k . x)``: a profile expression
over k formal variables composed with k linear projections. The node set
{constant, variable, sum, product, integer power, neg, exp, tanh, sin} is
closed under differentiation (the sine derivative is a quarter-period
shift), contains no division, and supports interval evaluation for
boundedness certificates over a box.

Expressions serialize to prefix text, e.g. ``(exp (neg (pow v1 2)))``;
parsing and formatting round-trip exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .domains import DimensionMismatch


class DslError(ValueError):
    """Syntax error in the prefix text form, with a 1-based position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Sum((self, _coerce(other)))

    def __radd__(self, other):
        return Sum((_coerce(other), self))

    def __sub__(self, other):
        return Sum((self, Neg(_coerce(other))))

    def __rsub__(self, other):
        return Sum((_coerce(other), Neg(self)))

    def __mul__(self, other):
        return Prod((self, _coerce(other)))

    def __rmul__(self, other):
        return Prod((_coerce(other), self))

    def __neg__(self):
        return Neg(self)

    def __pow__(self, exponent):
        return Pow(self, exponent)

    def __str__(self):
        return format_expr(self)


def _coerce(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float)):
        return Const(float(value))
    raise TypeError(f"cannot use {value!r} in an expression")


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Var(Expr):
    index: int  # zero-based; prints as v{index+1}

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("variable index must be nonnegative")


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple

    def __post_init__(self):
        if len(self.terms) < 1:
            raise ValueError("sum needs at least one term")


@dataclass(frozen=True)
class Prod(Expr):
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 1:
            raise ValueError("product needs at least one factor")


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError("exponent must be a nonnegative integer")


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr


@dataclass(frozen=True)
class Tanh(Expr):
    arg: Expr


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr


def var(i: int) -> Var:
    """Formal variable, 1-based to match the text form (var(1) prints as v1)."""
    if i < 1:
        raise ValueError("variables are numbered from 1")
    return Var(i - 1)


def const(c) -> Const:
    return Const(float(c))


def exp(e) -> Exp:
    return Exp(_coerce(e))


def tanh(e) -> Tanh:
    return Tanh(_coerce(e))


def sin(e) -> Sin:
    return Sin(_coerce(e))


def evaluate(expr: Expr, z: np.ndarray) -> np.ndarray:
    """Evaluate a profile on rows of ``z`` (shape ``(n, k)``)."""
    if isinstance(expr, Const):
        return np.full(z.shape[0], expr.value)
    if isinstance(expr, Var):
        return z[:, expr.index].copy()
    if isinstance(expr, Sum):
        out = evaluate(expr.terms[0], z)
        for t in expr.terms[1:]:
            out += evaluate(t, z)
        return out
    if isinstance(expr, Prod):
        out = evaluate(expr.factors[0], z)
        for f in expr.factors[1:]:
            out *= evaluate(f, z)
        return out
    if isinstance(expr, Pow):
        return evaluate(expr.base, z) ** expr.exponent
    if isinstance(expr, Neg):
        return -evaluate(expr.arg, z)
    if isinstance(expr, Exp):
        return np.exp(evaluate(expr.arg, z))
    if isinstance(expr, Tanh):
        return np.tanh(evaluate(expr.arg, z))
    if isinstance(expr, Sin):
        return np.sin(evaluate(expr.arg, z))
    raise TypeError(f"not an expression node: {expr!r}")


_ZERO = Const(0.0)
_ONE = Const(1.0)


def differentiate(expr: Expr, index: int) -> Expr:
    """Exact partial derivative with respect to variable ``index`` (0-based)."""
    if isinstance(expr, Const):
        return _ZERO
    if isinstance(expr, Var):
        return _ONE if expr.index == index else _ZERO
    if isinstance(expr, Sum):
        return Sum(tuple(differentiate(t, index) for t in expr.terms))
    if isinstance(expr, Prod):
        terms = []
        for i, f in enumerate(expr.factors):
            df = differentiate(f, index)
            rest = expr.factors[:i] + expr.factors[i + 1:]
            terms.append(Prod((df,) + rest) if rest else df)
        return Sum(tuple(terms))
    if isinstance(expr, Pow):
        if expr.exponent == 0:
            return _ZERO
        db = differentiate(expr.base, index)
        if expr.exponent == 1:
            return db
        return Prod((Const(float(expr.exponent)),
                     Pow(expr.base, expr.exponent - 1), db))
    if isinstance(expr, Neg):
        return Neg(differentiate(expr.arg, index))
    if isinstance(expr, Exp):
        return Prod((expr, differentiate(expr.arg, index)))
    if isinstance(expr, Tanh):
        # sech^2 = 1 - tanh^2 keeps the derivative inside the node set
        sech2 = Sum((_ONE, Neg(Pow(Tanh(expr.arg), 2))))
        return Prod((sech2, differentiate(expr.arg, index)))
    if isinstance(expr, Sin):
        # cos(a) = sin(a + pi/2): a quarter-period shift stays in the set
        cos = Sin(Sum((expr.arg, Const(math.pi / 2))))
        return Prod((cos, differentiate(expr.arg, index)))
    raise TypeError(f"not an expression node: {expr!r}")


def max_var_index(expr: Expr) -> int:
    """Largest 0-based variable index used, or -1 for constant expressions."""
    if isinstance(expr, Var):
        return expr.index
    if isinstance(expr, (Const,)):
        return -1
    if isinstance(expr, Sum):
        return max(max_var_index(t) for t in expr.terms)
    if isinstance(expr, Prod):
        return max(max_var_index(f) for f in expr.factors)
    if isinstance(expr, Pow):
        return max_var_index(expr.base)
    if isinstance(expr, (Neg, Exp, Tanh, Sin)):
        return max_var_index(expr.arg)
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# interval arithmetic (closed intervals, +-inf endpoints allowed)

def _imul(p, q):
    (a, b), (c, d) = p, q
    cands = []
    for u in (a, b):
        for v in (c, d):
            if (u == 0.0 and math.isinf(v)) or (v == 0.0 and math.isinf(u)):
                cands.append(0.0)
            else:
                cands.append(u * v)
    return min(cands), max(cands)


def _isin(lo, hi):
    if hi - lo >= 2.0 * math.pi:
        return -1.0, 1.0
    vals = [math.sin(lo), math.sin(hi)]
    # interior critical points pi/2 + 2 pi k (max) and -pi/2 + 2 pi k (min)
    if math.ceil((lo - math.pi / 2) / (2 * math.pi)) <= math.floor(
            (hi - math.pi / 2) / (2 * math.pi)):
        vals.append(1.0)
    if math.ceil((lo + math.pi / 2) / (2 * math.pi)) <= math.floor(
            (hi + math.pi / 2) / (2 * math.pi)):
        vals.append(-1.0)
    return min(vals), max(vals)


def interval_eval(expr: Expr, var_intervals) -> tuple[float, float]:
    """Enclosing interval of the expression over per-variable intervals."""
    if isinstance(expr, Const):
        return expr.value, expr.value
    if isinstance(expr, Var):
        lo, hi = var_intervals[expr.index]
        return float(lo), float(hi)
    if isinstance(expr, Sum):
        lo = hi = 0.0
        for t in expr.terms:
            a, b = interval_eval(t, var_intervals)
            lo, hi = lo + a, hi + b
        return lo, hi
    if isinstance(expr, Prod):
        out = (1.0, 1.0)
        for f in expr.factors:
            out = _imul(out, interval_eval(f, var_intervals))
        return out
    if isinstance(expr, Pow):
        a, b = interval_eval(expr.base, var_intervals)
        e = expr.exponent
        if e == 0:
            return 1.0, 1.0
        if e % 2 == 0 and a < 0.0 < b:
            return 0.0, max(abs(a), abs(b)) ** e
        lo, hi = a ** e, b ** e
        return (lo, hi) if lo <= hi else (hi, lo)
    if isinstance(expr, Neg):
        a, b = interval_eval(expr.arg, var_intervals)
        return -b, -a
    if isinstance(expr, Exp):
        a, b = interval_eval(expr.arg, var_intervals)
        return math.exp(a) if a > -np.inf else 0.0, \
            math.exp(b) if b < 700 else np.inf
    if isinstance(expr, Tanh):
        a, b = interval_eval(expr.arg, var_intervals)
        return math.tanh(a), math.tanh(b)
    if isinstance(expr, Sin):
        a, b = interval_eval(expr.arg, var_intervals)
        if math.isinf(a) or math.isinf(b):
            return -1.0, 1.0
        return _isin(a, b)
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# prefix text form

_HEADS = {"sum", "prod", "pow", "neg", "exp", "tanh", "sin"}


def format_expr(expr: Expr) -> str:
    if isinstance(expr, Const):
        v = expr.value
        if v.is_integer() and abs(v) < 1e15:
            return str(int(v))
        return repr(v)
    if isinstance(expr, Var):
        return f"v{expr.index + 1}"
    if isinstance(expr, Sum):
        return "(sum " + " ".join(format_expr(t) for t in expr.terms) + ")"
    if isinstance(expr, Prod):
        return "(prod " + " ".join(format_expr(f) for f in expr.factors) + ")"
    if isinstance(expr, Pow):
        return f"(pow {format_expr(expr.base)} {expr.exponent})"
    if isinstance(expr, Neg):
        return f"(neg {format_expr(expr.arg)})"
    if isinstance(expr, Exp):
        return f"(exp {format_expr(expr.arg)})"
    if isinstance(expr, Tanh):
        return f"(tanh {format_expr(expr.arg)})"
    if isinstance(expr, Sin):
        return f"(sin {format_expr(expr.arg)})"
    raise TypeError(f"not an expression node: {expr!r}")


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()":
            tokens.append((c, i + 1))
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append((text[i:j], i + 1))
            i = j
    return tokens


def parse_expr(text: str) -> Expr:
    """Parse the prefix text form; raises ``DslError`` with a position."""
    tokens = _tokenize(text)
    if not tokens:
        raise DslError("empty expression", 1)
    expr, rest = _parse(tokens)
    if rest:
        raise DslError(f"unexpected trailing token {rest[0][0]!r}", rest[0][1])
    return expr


def _atom(token: str, pos: int) -> Expr:
    if len(token) > 1 and token[0] == "v" and token[1:].isdigit():
        idx = int(token[1:])
        if idx < 1:
            raise DslError("variables are numbered from 1", pos)
        return Var(idx - 1)
    try:
        return Const(float(token))
    except ValueError:
        raise DslError(f"unknown atom {token!r}", pos) from None


def _parse(tokens):
    token, pos = tokens[0]
    if token == ")":
        raise DslError("unexpected ')'", pos)
    if token != "(":
        return _atom(token, pos), tokens[1:]
    if len(tokens) < 2:
        raise DslError("unterminated '('", pos)
    head, head_pos = tokens[1]
    if head not in _HEADS:
        raise DslError(f"unknown operator {head!r}", head_pos)
    rest = tokens[2:]
    args = []
    while True:
        if not rest:
            raise DslError("unterminated '('", pos)
        if rest[0][0] == ")":
            rest = rest[1:]
            break
        if head == "pow" and len(args) == 1:
            token, tpos = rest[0]
            try:
                exponent = int(token)
            except ValueError:
                raise DslError("pow exponent must be an integer", tpos) from None
            args.append(exponent)
            rest = rest[1:]
            continue
        node, rest = _parse(rest)
        args.append(node)
    try:
        if head == "sum":
            return Sum(tuple(args)), rest
        if head == "prod":
            return Prod(tuple(args)), rest
        if head == "pow":
            if len(args) != 2:
                raise ValueError("pow takes a base and an integer exponent")
            return Pow(args[0], args[1]), rest
        if len(args) != 1:
            raise ValueError(f"{head} takes exactly one argument")
        return {"neg": Neg, "exp": Exp, "tanh": Tanh, "sin": Sin}[head](args[0]), rest
    except (ValueError, TypeError) as err:
        raise DslError(str(err), head_pos) from None


# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CylFunction:
    """``f(x) = phi(l_1 . x, ..., l_k . x)`` with exact gradient."""

    dim: int
    directions: np.ndarray  # (k, dim)
    profile: Expr

    def __post_init__(self):
        directions = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if directions.shape[1] != self.dim:
            raise DimensionMismatch("directions must live in R^dim")
        if not np.all(np.isfinite(directions)):
            raise ValueError("directions must be finite")
        if max_var_index(self.profile) >= directions.shape[0]:
            raise ValueError("profile references a variable with no direction")
        object.__setattr__(self, "directions", directions)

    @property
    def n_vars(self) -> int:
        return self.directions.shape[0]

    @cached_property
    def _partials(self) -> tuple:
        return tuple(differentiate(self.profile, i) for i in range(self.n_vars))

    def _projections(self, x):
        pts, single = _pts(x, self.dim)
        return pts @ self.directions.T, single

    def eval(self, x):
        z, single = self._projections(x)
        vals = evaluate(self.profile, z)
        return float(vals[0]) if single else vals

    def __call__(self, x):
        return self.eval(x)

    def gradient(self, x):
        z, single = self._projections(x)
        out = np.zeros((z.shape[0], self.dim))
        for i, part in enumerate(self._partials):
            out += evaluate(part, z)[:, None] * self.directions[i]
        return out[0] if single else out

    def gradient_norm(self, x):
        g = self.gradient(x)
        if g.ndim == 1:
            return float(np.linalg.norm(g))
        return np.linalg.norm(g, axis=1)

    def lift(self, ambient_dim: int) -> "CylFunction":
        """View through the projection of R^ambient onto the first dim coords."""
        if ambient_dim < self.dim:
            raise ValueError("ambient dimension must be at least the current one")
        pad = np.zeros((self.n_vars, ambient_dim - self.dim))
        return CylFunction(dim=ambient_dim,
                           directions=np.hstack([self.directions, pad]),
                           profile=self.profile)

    def var_intervals(self, lo, hi):
        """Ranges of the k projections over the box [lo, hi]."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        a = np.minimum(self.directions * lo, self.directions * hi).sum(axis=1)
        b = np.maximum(self.directions * lo, self.directions * hi).sum(axis=1)
        return list(zip(a, b))

    def is_bounded(self, lo, hi) -> bool:
        """Interval certificate that f and its gradient are bounded on the box."""
        ivals = self.var_intervals(lo, hi)
        exprs = (self.profile,) + self._partials
        for e in exprs:
            a, b = interval_eval(e, ivals)
            if not (np.isfinite(a) and np.isfinite(b)):
                return False
        return True

    def to_config(self) -> dict:
        return {"dim": self.dim, "directions": self.directions.tolist(),
                "profile": format_expr(self.profile)}


def function_from_config(cfg: dict) -> CylFunction:
    return CylFunction(dim=int(cfg["dim"]),
                       directions=np.array(cfg["directions"], dtype=float),
                       profile=parse_expr(cfg["profile"]))


def _pts(x, dim):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise DimensionMismatch(
            f"expected points in R^{dim}, got shape {np.asarray(x).shape}")
    return pts, single


def coordinate(dim: int, axis: int = 0) -> CylFunction:
    """The linear function x -> x[axis] as a cylindrical function."""
    e = np.zeros(dim)
    e[axis] = 1.0
    return CylFunction(dim=dim, directions=e[None, :], profile=Var(0))


def from_profile(profile: Expr, directions) -> CylFunction:
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    return CylFunction(dim=directions.shape[1], directions=directions,
                       profile=profile)
