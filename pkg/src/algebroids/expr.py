"""Symbolic expression core.

Small immutable expression trees over named real variables, with the
operations every other module is built on: parsing, printing,
differentiation, substitution, numeric evaluation, and randomized
identity testing.  Simplification is deliberately conservative
(constant folding, 0/1 identities, flattening); correctness never
depends on it because identities are certified by sampling.
"""

from __future__ import annotations

import math
import sys
import zlib
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

# Trees built from repeated lifting/bracketing can nest well past the
# default interpreter limit.
if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)

Binding = Mapping[str, float]


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at {line}:{column}")
        self.line = line
        self.column = column


class UnknownFunctionError(ExprSyntaxError):
    pass


class EvaluationError(ExprError):
    def __init__(self, message: str, point: Binding | None = None):
        if point is not None:
            message = f"{message} at point {dict(point)!r}"
        super().__init__(message)
        self.point = dict(point) if point is not None else None


class UnboundVariableError(EvaluationError):
    pass


# ---------------------------------------------------------------------------
# Nodes


class Expr:
    __slots__ = ("_hash",)

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return add(self, neg(_coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return mul(self, power(_coerce(other), const(-1.0)))

    def __rtruediv__(self, other):
        return mul(_coerce(other), power(self, const(-1.0)))

    def __pow__(self, other):
        return power(self, _coerce(other))

    def __neg__(self):
        return neg(self)

    def __hash__(self):
        return self._hash

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return to_string(self)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"constants must be finite, got {value!r}")
        self.value = value
        self._hash = hash(("const", value))

    def __eq__(self, other):
        return isinstance(other, Const) and other.value == self.value


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if not name:
            raise ValueError("variable names must be non-empty")
        self.name = name
        self._hash = hash(("var", name))

    def __eq__(self, other):
        return isinstance(other, Var) and other.name == self.name


class Sum(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple[Expr, ...]):
        self.terms = terms
        self._hash = hash(("sum",) + tuple(t._hash for t in terms))

    def __eq__(self, other):
        return (
            isinstance(other, Sum)
            and other._hash == self._hash
            and other.terms == self.terms
        )


class Prod(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple[Expr, ...]):
        self.factors = factors
        self._hash = hash(("prod",) + tuple(f._hash for f in factors))

    def __eq__(self, other):
        return (
            isinstance(other, Prod)
            and other._hash == self._hash
            and other.factors == self.factors
        )


class Pow(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: Expr):
        self.base = base
        self.exponent = exponent
        self._hash = hash(("pow", base._hash, exponent._hash))

    def __eq__(self, other):
        return (
            isinstance(other, Pow)
            and other._hash == self._hash
            and other.base == self.base
            and other.exponent == self.exponent
        )


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = arg
        self._hash = hash(("neg", arg._hash))

    def __eq__(self, other):
        return isinstance(other, Neg) and other._hash == self._hash and other.arg == self.arg


class Call(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        self.fn = fn
        self.arg = arg
        self._hash = hash(("call", fn, arg._hash))

    def __eq__(self, other):
        return (
            isinstance(other, Call)
            and other._hash == self._hash
            and other.fn == self.fn
            and other.arg == self.arg
        )


FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
}

ZERO = Const(0.0)
ONE = Const(1.0)


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)):
        return Const(float(x))
    raise TypeError(f"cannot interpret {x!r} as an expression")


# ---------------------------------------------------------------------------
# Smart constructors.  They establish the (weak) canonical form the
# printer relies on: constants folded, nested sums/products flattened,
# no unit factors, Neg never wrapping Const/Neg, products carrying at
# most one leading constant and no Neg factors.


def const(value: float) -> Expr:
    return Const(value)


def var(name: str) -> Expr:
    return Var(name)


def add(*terms) -> Expr:
    flat: list[Expr] = []
    acc = 0.0
    for t in terms:
        t = _coerce(t)
        if isinstance(t, Sum):
            parts: Iterable[Expr] = t.terms
        else:
            parts = (t,)
        for p in parts:
            if isinstance(p, Const):
                acc += p.value
            else:
                flat.append(p)
    if acc != 0.0 or not flat:
        flat.insert(0, Const(acc))
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*factors) -> Expr:
    flat: list[Expr] = []
    acc = 1.0
    negative = False
    for f in factors:
        f = _coerce(f)
        if isinstance(f, Neg):
            negative = not negative
            f = f.arg
        if isinstance(f, Prod):
            parts: Iterable[Expr] = f.factors
        else:
            parts = (f,)
        for p in parts:
            if isinstance(p, Const):
                acc *= p.value
            else:
                flat.append(p)
    if acc == 0.0:
        return Const(0.0)
    if negative:
        acc = -acc
    if not flat:
        return Const(acc)
    if acc == -1.0:
        return neg(flat[0] if len(flat) == 1 else Prod(tuple(flat)))
    if acc != 1.0:
        flat.insert(0, Const(acc))
    if len(flat) == 1:
        return flat[0]
    return Prod(tuple(flat))


def neg(x) -> Expr:
    x = _coerce(x)
    if isinstance(x, Const):
        return Const(-x.value)
    if isinstance(x, Neg):
        return x.arg
    if isinstance(x, Prod) and isinstance(x.factors[0], Const):
        return mul(Const(-x.factors[0].value), *x.factors[1:])
    return Neg(x)


def power(base, exponent) -> Expr:
    base = _coerce(base)
    exponent = _coerce(exponent)
    if isinstance(exponent, Const):
        if exponent.value == 1.0:
            return base
        if exponent.value == 0.0:
            return ONE
        if isinstance(base, Const):
            try:
                value = math.pow(base.value, exponent.value)
            except (ValueError, OverflowError):
                return Pow(base, exponent)
            if math.isfinite(value):
                return Const(value)
    return Pow(base, exponent)


def call(fn: str, arg) -> Expr:
    if fn not in FUNCTIONS:
        raise ValueError(f"unknown function {fn!r}")
    arg = _coerce(arg)
    if isinstance(arg, Const):
        try:
            value = FUNCTIONS[fn](arg.value)
        except (ValueError, OverflowError):
            return Call(fn, arg)
        if math.isfinite(value):
            return Const(value)
    return Call(fn, arg)


def sin(x) -> Expr:
    return call("sin", x)


def cos(x) -> Expr:
    return call("cos", x)


def exp(x) -> Expr:
    return call("exp", x)


def log(x) -> Expr:
    return call("log", x)


def sqrt(x) -> Expr:
    return call("sqrt", x)


# ---------------------------------------------------------------------------
# Structural operations


def normalize(e: Expr) -> Expr:
    """Rebuild a tree bottom-up through the smart constructors."""
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        got = memo.get(id(node))
        if got is not None:
            return got
        if isinstance(node, (Const, Var)):
            out = node
        elif isinstance(node, Sum):
            out = add(*[go(t) for t in node.terms])
        elif isinstance(node, Prod):
            out = mul(*[go(f) for f in node.factors])
        elif isinstance(node, Pow):
            out = power(go(node.base), go(node.exponent))
        elif isinstance(node, Neg):
            out = neg(go(node.arg))
        elif isinstance(node, Call):
            out = call(node.fn, go(node.arg))
        else:  # pragma: no cover
            raise TypeError(f"unknown node {node!r}")
        memo[id(node)] = out
        return out

    return go(e)


def free_variables(e: Expr) -> frozenset[str]:
    memo: dict[int, frozenset[str]] = {}

    def go(node: Expr) -> frozenset[str]:
        got = memo.get(id(node))
        if got is not None:
            return got
        if isinstance(node, Var):
            out = frozenset((node.name,))
        elif isinstance(node, Const):
            out = frozenset()
        elif isinstance(node, Sum):
            out = frozenset().union(*[go(t) for t in node.terms])
        elif isinstance(node, Prod):
            out = frozenset().union(*[go(f) for f in node.factors])
        elif isinstance(node, Pow):
            out = go(node.base) | go(node.exponent)
        elif isinstance(node, Neg):
            out = go(node.arg)
        else:
            out = go(node.arg)
        memo[id(node)] = out
        return out

    return go(e)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Simultaneous substitution of variables by expressions."""
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        got = memo.get(id(node))
        if got is not None:
            return got
        if isinstance(node, Var):
            out = mapping.get(node.name, node)
        elif isinstance(node, Const):
            out = node
        elif isinstance(node, Sum):
            out = add(*[go(t) for t in node.terms])
        elif isinstance(node, Prod):
            out = mul(*[go(f) for f in node.factors])
        elif isinstance(node, Pow):
            out = power(go(node.base), go(node.exponent))
        elif isinstance(node, Neg):
            out = neg(go(node.arg))
        else:
            out = call(node.fn, go(node.arg))
        memo[id(node)] = out
        return out

    return go(e)


def differentiate(e: Expr, name: str) -> Expr:
    """Exact symbolic partial derivative with respect to ``name``."""
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        got = memo.get(id(node))
        if got is not None:
            return got
        if isinstance(node, Const):
            out: Expr = ZERO
        elif isinstance(node, Var):
            out = ONE if node.name == name else ZERO
        elif isinstance(node, Sum):
            out = add(*[go(t) for t in node.terms])
        elif isinstance(node, Prod):
            pieces = []
            for i, f in enumerate(node.factors):
                df = go(f)
                if df == ZERO:
                    continue
                rest = node.factors[:i] + node.factors[i + 1 :]
                pieces.append(mul(df, *rest))
            out = add(*pieces) if pieces else ZERO
        elif isinstance(node, Pow):
            b, ex = node.base, node.exponent
            db = go(b)
            if isinstance(ex, Const):
                out = mul(ex, power(b, Const(ex.value - 1.0)), db)
            else:
                dex = go(ex)
                # d(b^e) = b^e * (e' log b + e b'/b)
                out = mul(
                    power(b, ex),
                    add(mul(dex, call("log", b)), mul(ex, db, power(b, Const(-1.0)))),
                )
        elif isinstance(node, Neg):
            out = neg(go(node.arg))
        else:
            u, du = node.arg, go(node.arg)
            if node.fn == "sin":
                out = mul(call("cos", u), du)
            elif node.fn == "cos":
                out = neg(mul(call("sin", u), du))
            elif node.fn == "exp":
                out = mul(call("exp", u), du)
            elif node.fn == "log":
                out = mul(du, power(u, Const(-1.0)))
            else:  # sqrt
                out = mul(du, power(mul(2.0, call("sqrt", u)), Const(-1.0)))
        memo[id(node)] = out
        return out

    return go(e)


def is_zero(e: Expr) -> bool:
    """Structural zero test after normalization (sufficient, not complete)."""
    n = normalize(e)
    return isinstance(n, Const) and n.value == 0.0


# ---------------------------------------------------------------------------
# Evaluation


def evaluate(e: Expr, binding: Binding) -> float:
    """Reference tree-walking evaluator (IEEE doubles)."""
    memo: dict[int, float] = {}

    def go(node: Expr) -> float:
        got = memo.get(id(node))
        if got is not None:
            return got
        if isinstance(node, Const):
            out = node.value
        elif isinstance(node, Var):
            try:
                out = float(binding[node.name])
            except KeyError:
                raise UnboundVariableError(
                    f"unbound variable {node.name!r}", binding
                ) from None
        elif isinstance(node, Sum):
            out = math.fsum(go(t) for t in node.terms)
        elif isinstance(node, Prod):
            out = 1.0
            for f in node.factors:
                out *= go(f)
        elif isinstance(node, Pow):
            try:
                out = math.pow(go(node.base), go(node.exponent))
            except (ValueError, ZeroDivisionError, OverflowError) as err:
                raise EvaluationError(f"power domain error: {err}", binding) from None
        elif isinstance(node, Neg):
            out = -go(node.arg)
        else:
            try:
                out = FUNCTIONS[node.fn](go(node.arg))
            except (ValueError, OverflowError) as err:
                raise EvaluationError(
                    f"{node.fn} domain error: {err}", binding
                ) from None
        if not math.isfinite(out):
            raise EvaluationError("overflow to non-finite value", binding)
        memo[id(node)] = out
        return out

    return go(e)


def _codegen(e: Expr) -> Callable[[Binding], float]:
    """Compile to a flat sequence of Python assignments (CSE by identity)."""
    names: dict[int, str] = {}
    lines: list[str] = []
    stack: list[tuple[Expr, bool]] = [(e, False)]
    while stack:
        node, ready = stack.pop()
        if id(node) in names:
            continue
        children: tuple[Expr, ...]
        if isinstance(node, (Const, Var)):
            children = ()
        elif isinstance(node, Sum):
            children = node.terms
        elif isinstance(node, Prod):
            children = node.factors
        elif isinstance(node, Pow):
            children = (node.base, node.exponent)
        else:
            children = (node.arg,)
        if not ready:
            stack.append((node, True))
            stack.extend((c, False) for c in children)
            continue
        tname = f"t{len(names)}"
        if isinstance(node, Const):
            rhs = repr(node.value)
        elif isinstance(node, Var):
            rhs = f"b[{node.name!r}]"
        elif isinstance(node, Sum):
            rhs = " + ".join(names[id(t)] for t in node.terms)
        elif isinstance(node, Prod):
            rhs = " * ".join(names[id(f)] for f in node.factors)
        elif isinstance(node, Pow):
            rhs = f"_pow({names[id(node.base)]}, {names[id(node.exponent)]})"
        elif isinstance(node, Neg):
            rhs = f"-{names[id(node.arg)]}"
        else:
            rhs = f"_{node.fn}({names[id(node.arg)]})"
        names[id(node)] = tname
        lines.append(f"    {tname} = {rhs}")
    body = "\n".join(lines)
    src = f"def _fn(b):\n{body}\n    return {names[id(e)]}\n"
    env = {"_pow": math.pow, **{f"_{k}": v for k, v in FUNCTIONS.items()}}
    exec(compile(src, "<expr>", "exec"), env)
    return env["_fn"]


_COMPILE_CACHE: dict[int, tuple[Expr, Callable[[Binding], float]]] = {}


def compiled(e: Expr) -> Callable[[Binding], float]:
    """Fast evaluator for repeated evaluation; same error semantics as
    :func:`evaluate`."""
    hit = _COMPILE_CACHE.get(id(e))
    if hit is not None and hit[0] is e:
        return hit[1]
    raw = _codegen(e)

    def fn(binding: Binding) -> float:
        try:
            out = raw(binding)
        except KeyError as err:
            raise UnboundVariableError(
                f"unbound variable {err.args[0]!r}", binding
            ) from None
        except (ValueError, ZeroDivisionError, OverflowError) as err:
            raise EvaluationError(f"domain error: {err}", binding) from None
        if not math.isfinite(out):
            raise EvaluationError("overflow to non-finite value", binding)
        return out

    _COMPILE_CACHE[id(e)] = (e, fn)
    return fn


def central_difference(e: Expr, name: str, point: Binding, step: float = 1e-6) -> float:
    """Finite-difference oracle for :func:`differentiate`."""
    hi = dict(point)
    lo = dict(point)
    x = float(point[name])
    hi[name] = x + step
    lo[name] = x - step
    return (evaluate(e, hi) - evaluate(e, lo)) / (2.0 * step)


# ---------------------------------------------------------------------------
# Sampling and randomized identity testing


@dataclass(frozen=True)
class Sampler:
    """Deterministic point generator over a coordinate box.

    Per-variable ranges override the default box.  Streams depend only on
    (seed, variable names), so failures reproduce across runs.
    """

    points: int = 100
    seed: int = 0
    lo: float = -2.0
    hi: float = 2.0
    ranges: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def _rng(self, names: tuple[str, ...]) -> np.random.Generator:
        tag = zlib.crc32(",".join(names).encode("utf-8"))
        return np.random.default_rng((self.seed, tag))

    def sample(self, names: Iterable[str], count: int | None = None) -> list[dict[str, float]]:
        names = tuple(names)
        n = self.points if count is None else count
        rng = self._rng(names)
        raw = rng.random((n, len(names)))
        out = []
        for row in raw:
            point = {}
            for j, name in enumerate(names):
                lo, hi = self.ranges.get(name, (self.lo, self.hi))
                point[name] = lo + (hi - lo) * float(row[j])
            out.append(point)
        return out

    def sample_with_floor(
        self,
        names: Iterable[str],
        floor_names: Iterable[str],
        floor: float,
        count: int | None = None,
    ) -> list[dict[str, float]]:
        """Like :meth:`sample` but resamples until the max-norm of the
        ``floor_names`` block is at least ``floor`` (keeps points off the
        zero section)."""
        names = tuple(names)
        floor_names = tuple(floor_names)
        n = self.points if count is None else count
        rng = self._rng(names + ("floor",))
        out = []
        attempts = 0
        while len(out) < n:
            attempts += 1
            if attempts > 1000 * max(n, 1):
                raise ValueError(
                    f"could not sample points with max-norm floor {floor} over {floor_names}"
                )
            point = {}
            for name in names:
                lo, hi = self.ranges.get(name, (self.lo, self.hi))
                point[name] = lo + (hi - lo) * float(rng.random())
            if floor_names and max(abs(point[f]) for f in floor_names) < floor:
                continue
            out.append(point)
        return out

    def with_seed(self, seed: int) -> "Sampler":
        return Sampler(self.points, seed, self.lo, self.hi, dict(self.ranges))


def relative_gap(a: float, b: float) -> float:
    return abs(a - b) / (1.0 + max(abs(a), abs(b)))


def max_residual(
    e1: Expr,
    e2: Expr,
    sampler: Sampler,
    names: Iterable[str] | None = None,
) -> tuple[float, dict[str, float] | None]:
    """Worst relative gap between two expressions over sampled points,
    with the witness point."""
    if names is None:
        names = sorted(free_variables(e1) | free_variables(e2))
    names = tuple(names)
    f1 = compiled(e1)
    f2 = compiled(e2)
    worst = 0.0
    witness = None
    for point in sampler.sample(names):
        gap = relative_gap(f1(point), f2(point))
        if gap > worst:
            worst = gap
            witness = point
    return worst, witness


def equivalent(
    e1: Expr,
    e2: Expr,
    sampler: Sampler,
    tol: float = 1e-8,
    names: Iterable[str] | None = None,
) -> bool:
    """Randomized identity test: true iff |e1-e2| <= tol*(1+max(|e1|,|e2|))
    at every sampled point."""
    worst, _ = max_residual(e1, e2, sampler, names)
    return worst <= tol


# ---------------------------------------------------------------------------
# Printing

_PREC_SUM = 1
_PREC_PROD = 2
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _fmt_const(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def to_string(e: Expr) -> str:
    def render(node: Expr, parent_prec: int) -> str:
        if isinstance(node, Const):
            text = _fmt_const(node.value)
            prec = _PREC_NEG if node.value < 0 else _PREC_ATOM
        elif isinstance(node, Var):
            text, prec = node.name, _PREC_ATOM
        elif isinstance(node, Sum):
            parts = [render(node.terms[0], _PREC_SUM)]
            for t in node.terms[1:]:
                if isinstance(t, Neg):
                    parts.append(" - " + render(t.arg, _PREC_SUM + 1))
                elif isinstance(t, Const) and t.value < 0:
                    parts.append(" - " + _fmt_const(-t.value))
                elif isinstance(t, Prod) and isinstance(t.factors[0], Const) and t.factors[0].value < 0:
                    flipped = mul(Const(-t.factors[0].value), *t.factors[1:])
                    parts.append(" - " + render(flipped, _PREC_SUM + 1))
                else:
                    parts.append(" + " + render(t, _PREC_SUM + 1))
            text, prec = "".join(parts), _PREC_SUM
        elif isinstance(node, Prod):
            text = "*".join(render(f, _PREC_PROD + 1) for f in node.factors)
            prec = _PREC_PROD
        elif isinstance(node, Neg):
            text = "-" + render(node.arg, _PREC_NEG)
            prec = _PREC_NEG
        elif isinstance(node, Pow):
            base = render(node.base, _PREC_ATOM)
            if not isinstance(node.base, (Var, Call)) and not (
                isinstance(node.base, Const) and node.base.value >= 0
            ):
                base = f"({render(node.base, 0)})"
            expo = render(node.exponent, _PREC_ATOM)
            if not isinstance(node.exponent, Var) and not (
                isinstance(node.exponent, Const) and node.exponent.value >= 0
            ):
                expo = f"({render(node.exponent, 0)})"
            text, prec = f"{base}^{expo}", _PREC_POW
        else:
            text, prec = f"{node.fn}({render(node.arg, 0)})", _PREC_ATOM
        if prec < parent_prec:
            return f"({text})"
        return text

    return render(e, 0)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_NUM = "num"
_TOKEN_IDENT = "ident"
_TOKEN_OP = "op"
_TOKEN_EOF = "eof"


def _tokenize(text: str) -> list[tuple[str, str, int, int]]:
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lexeme = text[i:j]
            try:
                float(lexeme)
            except ValueError:
                raise ExprSyntaxError(f"bad number {lexeme!r}", line, col) from None
            tokens.append((_TOKEN_NUM, lexeme, line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append((_TOKEN_IDENT, text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in "+-*/^()":
            tokens.append((_TOKEN_OP, ch, line, col))
            i += 1
            col += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append((_TOKEN_EOF, "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, lexeme, line, col = self.peek()
        if kind != _TOKEN_OP or lexeme != op:
            raise ExprSyntaxError(f"expected {op!r}", line, col)
        return self.next()

    def parse_expr(self) -> Expr:
        out = self.parse_term()
        while True:
            kind, lexeme, _, _ = self.peek()
            if kind == _TOKEN_OP and lexeme in "+-":
                self.next()
                rhs = self.parse_term()
                out = add(out, rhs) if lexeme == "+" else add(out, neg(rhs))
            else:
                return out

    def parse_term(self) -> Expr:
        out = self.parse_unary()
        while True:
            kind, lexeme, _, _ = self.peek()
            if kind == _TOKEN_OP and lexeme in "*/":
                self.next()
                rhs = self.parse_unary()
                out = mul(out, rhs) if lexeme == "*" else mul(out, power(rhs, Const(-1.0)))
            else:
                return out

    def parse_unary(self) -> Expr:
        kind, lexeme, _, _ = self.peek()
        if kind == _TOKEN_OP and lexeme == "-":
            self.next()
            return neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_atom()
        kind, lexeme, _, _ = self.peek()
        if kind == _TOKEN_OP and lexeme == "^":
            self.next()
            return power(base, self.parse_unary())
        return base

    def parse_atom(self) -> Expr:
        kind, lexeme, line, col = self.peek()
        if kind == _TOKEN_NUM:
            self.next()
            return Const(float(lexeme))
        if kind == _TOKEN_IDENT:
            self.next()
            nkind, nlex, _, _ = self.peek()
            if nkind == _TOKEN_OP and nlex == "(":
                if lexeme not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {lexeme!r}", line, col)
                self.next()
                arg = self.parse_expr()
                self.expect_op(")")
                return call(lexeme, arg)
            return Var(lexeme)
        if kind == _TOKEN_OP and lexeme == "(":
            self.next()
            out = self.parse_expr()
            self.expect_op(")")
            return out
        raise ExprSyntaxError("expected expression", line, col)


def parse(text: str) -> Expr:
    """Parse infix syntax: ``^`` (right-assoc) > unary ``-`` > ``* /`` >
    ``+ -``, parentheses, calls ``f(expr)``, identifiers, decimal literals."""
    parser = _Parser(_tokenize(text))
    out = parser.parse_expr()
    kind, lexeme, line, col = parser.peek()
    if kind != _TOKEN_EOF:
        raise ExprSyntaxError(f"unexpected trailing input {lexeme!r}", line, col)
    return out
