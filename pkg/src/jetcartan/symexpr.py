"""Symbolic expressions over the jet coordinates (t, x^i, y_1^i).

Expressions are immutable, hash-consed trees: building the same node twice
returns the same object, so structural equality is identity and large
curvature expressions share their subtrees.

Two layers of constructors exist.  ``make`` builds a raw node exactly as
asked (the parser uses it).  The arithmetic operators and ``add``/``mul``/
``power``/``func`` build canonical nodes: flattened sums and products, folded
rational constants, collected like terms and merged powers.  ``simplify``
rebuilds any tree through the canonical layer.
"""

from __future__ import annotations

import hashlib
import math
import threading
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Coordinate",
    "Expr",
    "Point",
    "ParseError",
    "DomainError",
    "ZERO",
    "ONE",
    "const",
    "var",
    "t_var",
    "x_vars",
    "y_vars",
    "make",
    "add",
    "mul",
    "power",
    "func",
    "diff",
    "simplify",
    "expand",
    "substitute",
    "evaluate",
    "evaluate_batch",
    "parse_expr",
    "to_dsl",
    "FUNCTIONS",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")

Number = Union[int, Fraction, float]


@dataclass(frozen=True, order=True)
class Coordinate:
    """A chart coordinate: ``t``, ``x<i>`` or ``y<i>`` with 1-based ``index``."""

    kind: str
    index: int = 0

    def __post_init__(self):
        if self.kind == "t":
            if self.index != 0:
                raise ValueError("time coordinate carries no index")
        elif self.kind in ("x", "y"):
            if self.index < 1:
                raise ValueError(f"{self.kind} index must be >= 1, got {self.index}")
        else:
            raise ValueError(f"unknown coordinate kind {self.kind!r}")

    @property
    def name(self) -> str:
        return "t" if self.kind == "t" else f"{self.kind}{self.index}"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Point:
    t: float
    x: tuple
    y: tuple

    def __post_init__(self):
        vals = (self.t, *self.x, *self.y)
        if not all(math.isfinite(float(v)) for v in vals):
            raise ValueError("point coordinates must be finite")
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same length")

    @property
    def n(self) -> int:
        return len(self.x)


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class DomainError(ArithmeticError):
    """Raised when evaluation leaves the domain of a subexpression."""

    def __init__(self, message: str, subtree: "Expr"):
        super().__init__(f"{message}: {to_dsl(subtree)}")
        self.subtree = subtree


# --------------------------------------------------------------------------
# nodes

_KIND_RANK = {"const": 0, "var": 1, "func": 2, "pow": 3, "prod": 4, "sum": 5, "neg": 6, "inv": 7}

_table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
_table_lock = threading.Lock()


class Expr:
    __slots__ = ("kind", "args", "value", "_hash", "_free", "_dcache", "__weakref__")

    kind: str
    args: tuple
    value: object

    def __init__(self, *a, **k):  # pragma: no cover - guarded
        raise TypeError("use the module constructors to build expressions")

    # identity semantics: nodes are interned
    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return self is other

    def __ne__(self, other) -> bool:
        return self is not other

    def __repr__(self) -> str:
        return f"Expr({to_dsl(self)})"

    def __str__(self) -> str:
        return to_dsl(self)

    def __reduce__(self):
        return (_rebuild, (to_dsl(self), self.max_index()))

    @property
    def free(self) -> frozenset:
        """Coordinates the expression depends on."""
        return self._free

    def max_index(self) -> int:
        return max((c.index for c in self._free), default=0)

    @property
    def is_const(self) -> bool:
        return self.kind == "const"

    def is_zero(self) -> bool:
        return self.kind == "const" and self.value == 0

    def sort_key(self) -> tuple:
        if self.kind == "var":
            return (_KIND_RANK["var"], ("t", "x", "y").index(self.value.kind), self.value.index, 0)
        return (_KIND_RANK[self.kind], 0, 0, self._hash)

    # arithmetic builds canonical nodes
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(-1, other))

    def __rsub__(self, other):
        return add(other, mul(-1, self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(other, power(self, -1))

    def __neg__(self):
        return mul(-1, self)

    def __pow__(self, q):
        return power(self, q)


def _rebuild(src: str, n: int) -> Expr:
    return parse_expr(src, max(n, 1))


def _digest(kind: str, value, args: tuple) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(kind.encode())
    h.update(b"\0")
    if kind == "const":
        h.update(type(value).__name__.encode())
        h.update(repr(value).encode())
    elif value is not None:
        h.update(repr(value).encode())
    for a in args:
        h.update(a._hash.to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest(), "little", signed=True)


def _value_key(kind: str, value):
    if kind == "const":
        return (type(value).__name__, value)
    return value


def make(kind: str, args: Sequence[Expr] = (), value=None) -> Expr:
    """Intern a raw node without any normalisation."""
    args = tuple(args)
    key = (kind, _value_key(kind, value), tuple(id(a) for a in args))
    node = _table.get(key)
    if node is not None and node.args == args:
        return node
    with _table_lock:
        node = _table.get(key)
        if node is not None and node.args == args:
            return node
        node = object.__new__(Expr)
        object.__setattr__(node, "kind", kind)
        object.__setattr__(node, "args", args)
        object.__setattr__(node, "value", value)
        object.__setattr__(node, "_hash", _digest(kind, value, args))
        if kind == "var":
            free = frozenset((value,))
        elif args:
            free = frozenset().union(*(a._free for a in args))
        else:
            free = frozenset()
        object.__setattr__(node, "_free", free)
        object.__setattr__(node, "_dcache", {})
        _table[key] = node
        # keep children alive while the key (built from their ids) is in use
        return node


def _norm_number(v: Number) -> Number:
    if isinstance(v, bool):
        v = int(v)
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError("non-finite constant")
        if v == 0.0:
            return Fraction(0)
        return v
    if isinstance(v, (np.integer,)):
        return Fraction(int(v))
    if isinstance(v, (np.floating,)):
        return _norm_number(float(v))
    raise TypeError(f"cannot make a constant from {v!r}")


def const(v: Number) -> Expr:
    return make("const", (), _norm_number(v))


def var(c: Coordinate) -> Expr:
    return make("var", (), c)


def t_var() -> Expr:
    return var(Coordinate("t"))


def x_vars(n: int) -> list:
    return [var(Coordinate("x", i + 1)) for i in range(n)]


def y_vars(n: int) -> list:
    return [var(Coordinate("y", i + 1)) for i in range(n)]


ZERO = const(0)
ONE = const(1)
_MINUS_ONE = const(-1)


def as_expr(e) -> Expr:
    if isinstance(e, Expr):
        return e
    return const(e)


# --------------------------------------------------------------------------
# canonical constructors


def _split_coeff(e: Expr):
    """Return (coefficient, rest) with rest None for pure constants."""
    if e.kind == "const":
        return e.value, None
    if e.kind == "prod" and e.args[0].kind == "const":
        rest = e.args[1:]
        return e.args[0].value, rest[0] if len(rest) == 1 else make("prod", rest)
    return Fraction(1), e


def add(*terms) -> Expr:
    coeffs: dict = {}
    total: Number = Fraction(0)
    stack = [as_expr(t) for t in reversed(terms)]
    while stack:
        e = stack.pop()
        if e.kind == "sum":
            stack.extend(reversed(e.args))
            continue
        if e.kind == "neg":
            e = mul(_MINUS_ONE, e.args[0])
            stack.append(e)
            continue
        c, rest = _split_coeff(e)
        if rest is None:
            total = total + c
        else:
            coeffs[rest] = coeffs.get(rest, 0) + c
    out = []
    for rest, c in coeffs.items():
        if c == 0:
            continue
        out.append(rest if c == 1 else mul(const(c), rest))
    out.sort(key=Expr.sort_key)
    if total != 0:
        out.append(const(total))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return make("sum", out)


def _collect_factors(factors, coeff, powers):
    stack = [as_expr(f) for f in reversed(factors)]
    while stack:
        f = stack.pop()
        k = f.kind
        if k == "const":
            coeff = coeff * f.value
        elif k == "prod":
            stack.extend(reversed(f.args))
        elif k == "neg":
            coeff = -coeff
            stack.append(f.args[0])
        elif k == "inv":
            stack.append(power(f.args[0], -1))
        elif k == "pow":
            b = f.args[0]
            powers[b] = powers.get(b, 0) + f.value
        else:
            powers[f] = powers.get(f, 0) + 1
    return coeff


def mul(*factors) -> Expr:
    powers: dict = {}
    coeff = _collect_factors(factors, Fraction(1), powers)
    for _ in range(8):
        if coeff == 0:
            return ZERO
        out = []
        rewritten = []
        for base, q in powers.items():
            if q == 0:
                continue
            p = base if q == 1 else power(base, q)
            if p.kind == "const":
                coeff = coeff * p.value
            elif p is base or p.kind == "pow" and p.args[0] is base:
                out.append(p)
            else:
                rewritten.append(p)
        if not rewritten:
            break
        # power() changed shape (nested powers, products); collect again
        powers = {}
        coeff = _collect_factors(out + rewritten, coeff, powers)
    if coeff == 0:
        return ZERO
    out.sort(key=Expr.sort_key)
    if not out:
        return const(coeff)
    if coeff == 1:
        return out[0] if len(out) == 1 else make("prod", out)
    if len(out) == 1 and out[0].kind == "sum":
        return add(*(mul(const(coeff), term) for term in out[0].args))
    return make("prod", [const(coeff), *out])


def _raw_pow(base: Expr, q) -> Expr:
    return make("pow", (base,), Fraction(q))


def _exact_root(v: Fraction, q: Fraction):
    """v**q when exactly rational, else None."""
    if v < 0 and q.denominator % 2 == 0:
        return None
    num, den = abs(v.numerator), v.denominator
    d = q.denominator
    rn = round(num ** (1.0 / d)) if num else 0
    rd = round(den ** (1.0 / d))
    for a in (rn - 1, rn, rn + 1):
        if a >= 0 and a**d == num:
            for b in (rd - 1, rd, rd + 1):
                if b > 0 and b**d == den:
                    root = Fraction(a, b) * (-1 if v < 0 else 1)
                    if root == 0 and q < 0:
                        return None
                    return root**q.numerator
    return None


def power(base, q) -> Expr:
    base = as_expr(base)
    if isinstance(q, Expr):
        if q.kind != "const" or not isinstance(q.value, Fraction):
            raise ValueError("exponent must be a rational constant")
        q = q.value
    q = Fraction(q)
    if q == 0:
        return ONE
    if q == 1:
        return base
    k = base.kind
    if k == "const":
        v = base.value
        if isinstance(v, Fraction):
            if v == 0 and q < 0:
                return _raw_pow(base, q)
            if q.denominator == 1:
                return const(v ** int(q))
            root = _exact_root(v, q)
            if root is not None:
                return const(root)
        return _raw_pow(base, q)
    if k == "pow" and q.denominator == 1:
        return power(base.args[0], base.value * q)
    if k == "prod" and q.denominator == 1:
        return mul(*(power(f, q) for f in base.args))
    if k == "neg" and q.denominator == 1:
        return mul(const((-1) ** int(q)), power(base.args[0], q))
    if k == "inv":
        return power(base.args[0], -q)
    return _raw_pow(base, q)


def func(name: str, arg) -> Expr:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    arg = as_expr(arg)
    if arg.kind == "const" and isinstance(arg.value, Fraction):
        v = arg.value
        if v == 0 and name in ("sin", "sqrt"):
            return ZERO
        if v == 0 and name in ("cos", "exp"):
            return ONE
        if v == 1 and name == "log":
            return ZERO
        if name == "sqrt" and v > 0:
            root = _exact_root(v, Fraction(1, 2))
            if root is not None:
                return const(root)
    return make("func", (arg,), name)


def sin(e) -> Expr:
    return func("sin", e)


def cos(e) -> Expr:
    return func("cos", e)


def exp(e) -> Expr:
    return func("exp", e)


def log(e) -> Expr:
    return func("log", e)


def sqrt(e) -> Expr:
    return func("sqrt", e)


# --------------------------------------------------------------------------
# simplify / expand / substitute


def _postorder(roots: Iterable[Expr]) -> list:
    """Nodes reachable from ``roots``, children before parents."""
    order = []
    seen = set()
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for a in node.args:
                if id(a) not in seen:
                    stack.append((a, False))
    return order


def _rebuild_canonical(node: Expr, args: list) -> Expr:
    k = node.kind
    if k in ("const", "var"):
        return node
    if k == "sum":
        return add(*args)
    if k == "prod":
        return mul(*args)
    if k == "pow":
        return power(args[0], node.value)
    if k == "neg":
        return mul(_MINUS_ONE, args[0])
    if k == "inv":
        return power(args[0], -1)
    return func(node.value, args[0])


def _transform(roots, rebuild):
    memo: dict = {}
    for node in _postorder(roots):
        memo[id(node)] = rebuild(node, [memo[id(a)] for a in node.args])
    return memo


def simplify(e: Expr) -> Expr:
    """Canonical rebuild: folding, 0/1 identities, flattening, collection."""
    e = as_expr(e)
    return _transform([e], _rebuild_canonical)[id(e)]


def _expand_node(node: Expr, args: list) -> Expr:
    k = node.kind
    if k == "prod" or k == "neg" or k == "inv":
        if k == "neg":
            args = [_MINUS_ONE, args[0]]
        elif k == "inv":
            return power(args[0], -1)
        terms = [ONE]
        for f in args:
            parts = f.args if f.kind == "sum" else (f,)
            terms = [mul(a, b) for a in terms for b in parts]
        return add(*terms)
    if k == "pow" and node.value.denominator == 1 and node.value > 0 and args[0].kind == "sum":
        out = ONE
        for _ in range(int(node.value)):
            out = _expand_node(make("prod", (out, args[0])), [out, args[0]])
        return out
    return _rebuild_canonical(node, args)


def expand(e: Expr) -> Expr:
    """Distribute products over sums (positive integer powers included)."""
    e = as_expr(e)
    return _transform([e], _expand_node)[id(e)]


def substitute(e: Expr, mapping: Mapping[Coordinate, Expr]) -> Expr:
    """Simultaneously replace coordinates by expressions."""
    e = as_expr(e)
    mapping = {c: as_expr(v) for c, v in mapping.items()}

    def rebuild(node, args):
        if node.kind == "var":
            return mapping.get(node.value, node)
        return _rebuild_canonical(node, args)

    return _transform([e], rebuild)[id(e)]


# --------------------------------------------------------------------------
# differentiation


def diff(e: Expr, v: Coordinate) -> Expr:
    """Exact partial derivative of ``e`` with respect to coordinate ``v``."""
    e = as_expr(e)
    if v not in e._free:
        return ZERO
    cached = e._dcache.get(v)
    if cached is not None:
        return cached
    # iterative over the subtrees that still need a derivative
    for node in _postorder([e]):
        if v not in node._free or v in node._dcache:
            continue
        node._dcache[v] = _diff_node(node, v)
    return e._dcache[v]


def _d(node: Expr, v: Coordinate) -> Expr:
    if v not in node._free:
        return ZERO
    return node._dcache[v]


def _diff_node(node: Expr, v: Coordinate) -> Expr:
    k = node.kind
    if k == "var":
        return ONE if node.value == v else ZERO
    if k == "sum":
        return add(*(_d(a, v) for a in node.args))
    if k == "prod":
        args = node.args
        terms = []
        for i, a in enumerate(args):
            da = _d(a, v)
            if da.is_zero():
                continue
            terms.append(mul(*args[:i], da, *args[i + 1:]))
        return add(*terms)
    if k == "neg":
        return mul(_MINUS_ONE, _d(node.args[0], v))
    if k == "inv":
        b = node.args[0]
        return mul(_MINUS_ONE, _d(b, v), power(b, -2))
    if k == "pow":
        b, q = node.args[0], node.value
        return mul(const(q), power(b, q - 1), _d(b, v))
    a = node.args[0]
    da = _d(a, v)
    name = node.value
    if name == "sin":
        return mul(func("cos", a), da)
    if name == "cos":
        return mul(_MINUS_ONE, func("sin", a), da)
    if name == "exp":
        return mul(node, da)
    if name == "log":
        return mul(da, power(a, -1))
    if name == "sqrt":
        return mul(Fraction(1, 2), da, power(node, -1))
    raise AssertionError(name)


# --------------------------------------------------------------------------
# evaluation

_NP_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log, "sqrt": np.sqrt}


def _coord_values(c: Coordinate, t, x, y):
    if c.kind == "t":
        return t
    arr = x if c.kind == "x" else y
    if c.index > len(arr):
        raise IndexError(f"coordinate {c} outside chart of dimension {len(arr)}")
    return arr[c.index - 1]


def evaluate_batch(exprs: Sequence[Expr], t, x, y):
    """Vectorised evaluation of many expressions at many points.

    ``t`` has shape (P,), ``x`` and ``y`` shape (n, P).  Returns
    ``(values, bad, culprit)`` where ``values`` has shape (len(exprs), P),
    ``bad`` flags points at which some subexpression left its domain and
    ``culprit`` is the first offending subtree (or None).
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1, t.shape[0])
    y = np.asarray(y, dtype=float).reshape(-1, t.shape[0])
    npts = t.shape[0]
    bad = np.zeros(npts, dtype=bool)
    culprit = None
    memo: dict = {}
    with np.errstate(all="ignore"):
        for node in _postorder(exprs):
            k = node.kind
            if k == "const":
                val = float(node.value)
            elif k == "var":
                val = _coord_values(node.value, t, x, y)
            else:
                a = [memo[id(c)] for c in node.args]
                if k == "sum":
                    val = a[0]
                    for other in a[1:]:
                        val = val + other
                elif k == "prod":
                    val = a[0]
                    for other in a[1:]:
                        val = val * other
                elif k == "neg":
                    val = -a[0]
                elif k == "inv":
                    hit = np.asarray(a[0]) == 0
                    if np.any(hit):
                        bad |= np.broadcast_to(hit, bad.shape)
                        culprit = culprit or node
                    val = 1.0 / a[0]
                elif k == "pow":
                    q = node.value
                    b = a[0]
                    if q.denominator == 1:
                        if q < 0:
                            hit = np.asarray(b) == 0
                            if np.any(hit):
                                bad |= np.broadcast_to(hit, bad.shape)
                                culprit = culprit or node
                        qi = int(q)
                        val = np.power(b, float(qi)) if qi < 0 else b**qi
                    else:
                        hit = np.asarray(b) < 0 if q > 0 else np.asarray(b) <= 0
                        if np.any(hit):
                            bad |= np.broadcast_to(hit, bad.shape)
                            culprit = culprit or node
                        val = np.power(b, float(q))
                else:
                    name = node.value
                    b = a[0]
                    if name == "log" or name == "sqrt":
                        hit = np.asarray(b) <= 0 if name == "log" else np.asarray(b) < 0
                        if np.any(hit):
                            bad |= np.broadcast_to(hit, bad.shape)
                            culprit = culprit or node
                    val = _NP_FUNCS[name](b)
            memo[id(node)] = val
    out = np.empty((len(exprs), npts), dtype=float)
    for i, e in enumerate(exprs):
        out[i] = memo[id(e)]
    bad |= ~np.all(np.isfinite(out), axis=0)
    return out, bad, culprit


def evaluate(e: Expr, p: Point) -> float:
    """IEEE-double value of ``e`` at ``p``; raises DomainError off-domain."""
    e = as_expr(e)
    vals, bad, culprit = evaluate_batch(
        [e], [p.t], np.array(p.x, dtype=float).reshape(-1, 1), np.array(p.y, dtype=float).reshape(-1, 1)
    )
    if bad[0]:
        raise DomainError("evaluation outside domain", culprit or e)
    return float(vals[0, 0])


# --------------------------------------------------------------------------
# printing

_PREC = {"sum": 1, "prod": 2, "neg": 2, "inv": 2, "pow": 4}


def _const_str(v) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    return repr(float(v))


def _const_prec(v) -> int:
    if isinstance(v, Fraction):
        if v.denominator != 1:
            return 2 if v > 0 else 1
        return 5 if v >= 0 else 1
    return 5 if v >= 0 and "e" not in repr(v) else 1


def to_dsl(e: Expr) -> str:
    """Render ``e`` in the input DSL; ``parse_expr`` reads it back."""
    memo: dict = {}
    for node in _postorder([e]):
        memo[id(node)] = _render(node, memo)
    return memo[id(e)][0]


def _wrap(item, prec: int) -> str:
    s, p = item
    return s if p > prec else f"({s})"


def _negated_body(node: Expr, memo):
    """Text of ``-node`` when ``node`` carries a negative rational coefficient."""
    if node.kind == "const" and isinstance(node.value, Fraction) and node.value < 0:
        return _wrap((_const_str(-node.value), _const_prec(-node.value)), 1)
    if node.kind != "prod":
        return None
    head = node.args[0]
    if head.kind != "const" or not isinstance(head.value, Fraction) or head.value >= 0:
        return None
    if head.value == -1:
        return _product_text(node.args[1:], memo)
    coeff = (_const_str(-head.value), _const_prec(-head.value))
    return _wrap(coeff, 2) + "*" + _product_text(node.args[1:], memo)


def _product_text(args, memo) -> str:
    """Factors joined by ``*``; reciprocal factors are written as divisions."""
    out = ""
    for a in args:
        if a.kind == "inv":
            out = (out or "1") + "/" + _wrap(memo[id(a.args[0])], 2)
        else:
            out = (out + "*" if out else "") + _wrap(memo[id(a)], 2)
    return out


def _render(node: Expr, memo) -> tuple:
    k = node.kind
    if k == "const":
        return _const_str(node.value), _const_prec(node.value)
    if k == "var":
        return node.value.name, 5
    sub = [memo[id(a)] for a in node.args]
    if k == "func":
        return f"{node.value}({sub[0][0]})", 5
    if k == "sum":
        out = sub[0][0] if sub[0][1] >= 1 else f"({sub[0][0]})"
        for a, s in zip(node.args[1:], sub[1:]):
            if a.kind == "neg":
                out += " - " + _wrap(memo[id(a.args[0])], 1)
                continue
            body = _negated_body(a, memo)
            out += f" - {body}" if body is not None else " + " + _wrap(s, 1)
        return out, 1
    if k == "prod":
        body = _negated_body(node, memo)
        if body is not None:
            return "-" + body, 1
        return _product_text(node.args, memo), 2
    if k == "neg":
        return "-" + _wrap(sub[0], 2), 1
    if k == "inv":
        return "1/" + _wrap(sub[0], 2), 2
    q = node.value
    qs = str(q.numerator) if q.denominator == 1 and q >= 0 else f"({_const_str(q)})"
    return f"{_wrap(sub[0], 4)}^{qs}", 4


# --------------------------------------------------------------------------
# parsing

class _Parser:
    """Recursive descent over the DSL; offsets are byte offsets into ``src``."""

    def __init__(self, src: str, n: int):
        self.src = src
        self.n = n
        self.pos = 0
        self.tokens = self._tokenize(src)
        self.i = 0

    @staticmethod
    def _tokenize(src: str):
        toks = []
        i = 0
        while i < len(src):
            ch = src[i]
            if ch.isspace():
                i += 1
            elif ch.isdigit() or ch == "." and i + 1 < len(src) and src[i + 1].isdigit():
                j = i
                while j < len(src) and (src[j].isdigit() or src[j] == "."):
                    j += 1
                if j < len(src) and src[j] in "eE":
                    k = j + 1
                    if k < len(src) and src[k] in "+-":
                        k += 1
                    if k < len(src) and src[k].isdigit():
                        j = k
                        while j < len(src) and src[j].isdigit():
                            j += 1
                toks.append(("num", src[i:j], _byte_offset(src, i)))
                i = j
            elif ch.isalpha() or ch == "_":
                j = i
                while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                    j += 1
                toks.append(("id", src[i:j], _byte_offset(src, i)))
                i = j
            elif ch in "+-*/^()":
                toks.append((ch, ch, _byte_offset(src, i)))
                i += 1
            else:
                raise ParseError(f"unexpected character {ch!r}", _byte_offset(src, i))
        toks.append(("eof", "", len(src.encode())))
        return toks

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None):
        tok = self.tokens[self.i]
        if kind is not None and tok[0] != kind:
            what = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise ParseError(f"expected {kind!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "eof":
            raise ParseError(f"unexpected {tok[1]!r}", tok[2])
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek()[0] in "+-" and self.peek()[0] != "eof":
            op = self.take()[0]
            rhs = self.term()
            terms.append(rhs if op == "+" else make("neg", (rhs,)))
        return terms[0] if len(terms) == 1 else make("sum", terms)

    def term(self) -> Expr:
        factors = [self.unary()]
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            rhs = self.unary()
            factors.append(rhs if op == "*" else make("inv", (rhs,)))
        return factors[0] if len(factors) == 1 else make("prod", factors)

    def unary(self) -> Expr:
        if self.peek()[0] == "-":
            self.take()
            return make("neg", (self.unary(),))
        if self.peek()[0] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "^":
            tok = self.take()
            exp_expr = self.unary()
            q = _constant_value(exp_expr)
            if q is None:
                raise ParseError("exponent must be a rational constant", tok[2] + 1)
            return make("pow", (base,), q)
        return base

    def atom(self) -> Expr:
        tok = self.peek()
        if tok[0] == "num":
            self.take()
            try:
                return make("const", (), Fraction(tok[1]))
            except ValueError:
                raise ParseError(f"bad number {tok[1]!r}", tok[2]) from None
        if tok[0] == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if tok[0] == "id":
            self.take()
            name = tok[1]
            if name in FUNCTIONS:
                self.take("(")
                arg = self.expr()
                self.take(")")
                return make("func", (arg,), name)
            return var(self._coordinate(name, tok[2]))
        what = "end of input" if tok[0] == "eof" else repr(tok[1])
        raise ParseError(f"unexpected {what}", tok[2])

    def _coordinate(self, name: str, offset: int) -> Coordinate:
        if name == "t":
            return Coordinate("t")
        if name[0] in "xy" and name[1:].isdigit():
            idx = int(name[1:])
            if not 1 <= idx <= self.n:
                raise ParseError(f"index of {name} out of range 1..{self.n}", offset)
            return Coordinate(name[0], idx)
        raise ParseError(f"unknown identifier {name!r}", offset)


def _byte_offset(src: str, i: int) -> int:
    return len(src[:i].encode())


def _constant_value(e: Expr):
    if e._free:
        return None
    s = simplify(e)
    if s.kind == "const" and isinstance(s.value, Fraction):
        return s.value
    return None


def parse_expr(src: str, n: int) -> Expr:
    """Parse DSL text into a raw expression tree for a chart of dimension n."""
    if n < 1:
        raise ValueError("chart dimension must be >= 1")
    return _Parser(src, n).parse()
