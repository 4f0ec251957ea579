"""Immutable expression trees over jet coordinates.

Nodes are built through the smart constructors (:func:`add`, :func:`mul`,
:func:`power`, ...) which flatten, fold constants, absorb 0 and 1, merge
repeated factors and identical terms, and keep product factors in a
canonical order.  They do not expand products of sums; that is the job of
:func:`natbc.jet.simplify.simplify`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

from .multiindex import MultiIndex

UNARY_FUNCTIONS = ("sqrt", "sin", "cos", "exp", "ln")


# --------------------------------------------------------------------------
# jet variables


class JetVar:
    __slots__ = ()


class Indep(JetVar):
    """Independent coordinate x^i (0-based i)."""

    __slots__ = ("i",)

    def __init__(self, i: int):
        if i < 0:
            raise ValueError("independent index must be >= 0")
        object.__setattr__(self, "i", int(i))

    def __setattr__(self, *_):
        raise AttributeError("JetVar is immutable")

    def __eq__(self, other):
        return isinstance(other, Indep) and other.i == self.i

    def __hash__(self):
        return hash(("x", self.i))

    def __repr__(self):
        return f"Indep({self.i})"

    @property
    def order(self) -> int:
        return 0

    def key(self) -> str:
        return f"x{self.i}"


class Dep(JetVar):
    """Jet coordinate u^j_I (0-based j); I = () is allowed for an unsized zero index."""

    __slots__ = ("j", "I")

    def __init__(self, j: int, I=()):
        if j < 0:
            raise ValueError("dependent index must be >= 0")
        object.__setattr__(self, "j", int(j))
        object.__setattr__(self, "I", MultiIndex(I))

    def __setattr__(self, *_):
        raise AttributeError("JetVar is immutable")

    def __eq__(self, other):
        return isinstance(other, Dep) and other.j == self.j and _strip(other.I) == _strip(self.I)

    def __hash__(self):
        return hash(("u", self.j, _strip(self.I)))

    def __repr__(self):
        return f"Dep({self.j}, {tuple(self.I)})"

    @property
    def order(self) -> int:
        return self.I.order()

    def sized(self, n: int) -> "Dep":
        """Same coordinate with the multi-index padded/truncated to length n."""
        s = _strip(self.I)
        if len(s) > n:
            raise ValueError(f"{self!r} does not fit n={n}")
        return Dep(self.j, s + (0,) * (n - len(s)))

    def key(self) -> str:
        return f"u{self.j}" + "".join(f".{k}" for k in _strip(self.I))


def _strip(I) -> tuple:
    t = tuple(I)
    k = len(t)
    while k and t[k - 1] == 0:
        k -= 1
    return t[:k]


# --------------------------------------------------------------------------
# nodes


class Expr:
    """Base class; instances are immutable and hashable."""

    __slots__ = ("_hash", "_key")

    def _init(self):
        object.__setattr__(self, "_key", None)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *_):
        raise AttributeError("Expr is immutable")

    def key(self) -> str:
        """Unambiguous serialization; used for hashing, equality and ordering."""
        k = self._key
        if k is None:
            k = self._make_key()
            object.__setattr__(self, "_key", k)
        return k

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(self.key())
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return hash(self) == hash(other) and self.key() == other.key()

    def children(self) -> tuple:
        return ()

    # operator sugar ------------------------------------------------------
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

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __str__(self):
        from .printer import to_string

        return to_string(self)

    def __repr__(self):
        return f"<{type(self).__name__} {self}>"


class Constant(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self._init()
        if isinstance(value, bool):
            value = int(value)
        if isinstance(value, Rational):
            v = Fraction(value)
        else:
            v = float(value)
            if not math.isfinite(v):
                raise ValueError("constants must be finite")
        object.__setattr__(self, "value", v)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction)

    def _make_key(self):
        v = self.value
        if isinstance(v, Fraction):
            return f"#{v.numerator}/{v.denominator}"
        return f"#f{v!r}"


class Var(Expr):
    __slots__ = ("var",)

    def __init__(self, var: JetVar):
        self._init()
        if not isinstance(var, JetVar):
            raise TypeError("Var wraps a JetVar")
        object.__setattr__(self, "var", var)

    def _make_key(self):
        return self.var.key()


class Sum(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        self._init()
        object.__setattr__(self, "terms", tuple(terms))

    def children(self):
        return self.terms

    def _make_key(self):
        return "S(" + ",".join(t.key() for t in self.terms) + ")"


class Product(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        self._init()
        object.__setattr__(self, "factors", tuple(factors))

    def children(self):
        return self.factors

    def _make_key(self):
        return "P(" + ",".join(f.key() for f in self.factors) + ")"


class Power(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent):
        self._init()
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", _as_exponent(exponent))

    def children(self):
        return (self.base,)

    def _make_key(self):
        p = self.exponent
        return f"W({self.base.key()};{p.numerator}/{p.denominator})"


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self._init()
        object.__setattr__(self, "arg", arg)

    def children(self):
        return (self.arg,)

    def _make_key(self):
        return f"N({self.arg.key()})"


class Quotient(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num: Expr, den: Expr):
        self._init()
        if isinstance(den, Constant) and den.value == 0:
            raise ZeroDivisionError("quotient by the literal zero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def children(self):
        return (self.num, self.den)

    def _make_key(self):
        return f"Q({self.num.key()};{self.den.key()})"


class Unary(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        self._init()
        if fn not in UNARY_FUNCTIONS:
            raise ValueError(f"unknown function {fn!r}")
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "arg", arg)

    def children(self):
        return (self.arg,)

    def _make_key(self):
        return f"F{self.fn}({self.arg.key()})"


ZERO = Constant(0)
ONE = Constant(1)
MINUS_ONE = Constant(-1)


def _as_exponent(p) -> Fraction:
    if isinstance(p, Constant):
        p = p.value
    if isinstance(p, bool):
        p = int(p)
    if isinstance(p, Rational):
        return Fraction(p)
    p = float(p)
    if not math.isfinite(p):
        raise ValueError("exponent must be finite")
    return Fraction(p).limit_denominator(10**6)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, JetVar):
        return Var(x)
    if isinstance(x, (int, float, Fraction)):
        return Constant(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def var(v: JetVar) -> Var:
    return Var(v)


def x(i: int) -> Var:
    return Var(Indep(i))


def u(I=(), j: int = 0) -> Var:
    return Var(Dep(j, I))


def is_zero(e: Expr) -> bool:
    return isinstance(e, Constant) and e.value == 0


def is_one(e: Expr) -> bool:
    return isinstance(e, Constant) and e.value == 1


# --------------------------------------------------------------------------
# smart constructors


def _num(a, b, op):
    r = op(a, b)
    if isinstance(r, float) and not math.isfinite(r):
        raise OverflowError("constant folding overflowed")
    return r


def split_coefficient(e: Expr):
    """Return (c, rest) with e == c * rest and rest free of a numeric factor."""
    if isinstance(e, Constant):
        return e.value, ONE
    if isinstance(e, Product) and isinstance(e.factors[0], Constant):
        rest = e.factors[1:]
        return e.factors[0].value, (rest[0] if len(rest) == 1 else Product(rest))
    return Fraction(1), e


def add(*terms) -> Expr:
    flat = []
    for t in terms:
        t = as_expr(t)
        if isinstance(t, Sum):
            flat.extend(t.terms)
        else:
            flat.append(t)
    const = Fraction(0)
    coeffs: dict = {}
    for t in flat:
        c, rest = split_coefficient(t)
        if rest is ONE or is_one(rest):
            const = _num(const, c, lambda a, b: a + b)
            continue
        if rest in coeffs:
            coeffs[rest] = _num(coeffs[rest], c, lambda a, b: a + b)
        else:
            coeffs[rest] = c
    out = []
    if const != 0:
        out.append(Constant(const))
    for rest, c in coeffs.items():
        if c == 0:
            continue
        out.append(_scaled(c, rest))
    if not out:
        return Constant(const) if isinstance(const, float) else ZERO
    if len(out) == 1:
        return out[0]
    return Sum(out)


def _scaled(c, rest: Expr) -> Expr:
    if c == 1:
        return rest
    if isinstance(rest, Product):
        return Product((Constant(c),) + rest.factors)
    return Product((Constant(c), rest))


def _base_exp(f: Expr):
    if isinstance(f, Power):
        return f.base, f.exponent
    return f, Fraction(1)


def factor_sort_key(f: Expr):
    b, p = _base_exp(f)
    return (b.key(), p)


def mul(*factors) -> Expr:
    flat = []
    for f in factors:
        f = as_expr(f)
        if isinstance(f, Product):
            flat.extend(f.factors)
        else:
            flat.append(f)
    c = Fraction(1)
    exps: dict = {}
    for f in flat:
        if isinstance(f, Constant):
            if f.value == 0:
                return Constant(0.0) if isinstance(f.value, float) else ZERO
            c = _num(c, f.value, lambda a, b: a * b)
            continue
        b, p = _base_exp(f)
        exps[b] = exps.get(b, Fraction(0)) + p
    out = []
    for b, p in exps.items():
        if p == 0:
            continue
        f = power(b, p) if p != 1 else b
        if isinstance(f, Constant):
            c = _num(c, f.value, lambda a, b: a * b)
        elif isinstance(f, Product):
            # power() distributed over a product base; fold back in
            for g in f.factors:
                if isinstance(g, Constant):
                    c = _num(c, g.value, lambda a, b: a * b)
                else:
                    out.append(g)
        else:
            out.append(f)
    if c == 0:
        return ZERO
    if len(out) != len({_base_exp(f)[0] for f in out}):
        return mul(Constant(c), *out)
    out.sort(key=factor_sort_key)
    if not out:
        return Constant(c)
    if c == 1:
        return out[0] if len(out) == 1 else Product(out)
    return Product([Constant(c)] + out)


def neg(a) -> Expr:
    return mul(MINUS_ONE, a)


def div(a, b) -> Expr:
    b = as_expr(b)
    if is_zero(b):
        raise ZeroDivisionError("division by the literal zero")
    return mul(a, power(b, -1))


def _exact_root(q: Fraction, k: int):
    """k-th root of a non-negative rational if it is rational, else None."""
    if q < 0:
        return None

    def iroot(m):
        r = round(m ** (1.0 / k))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**k == m:
                return cand
        return None

    a, b = iroot(q.numerator), iroot(q.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def _const_power(v, p: Fraction):
    """Fold v**p if the result is representable; otherwise None."""
    if isinstance(v, Fraction):
        if p.denominator == 1:
            if v == 0 and p < 0:
                return None
            return v ** int(p)
        root = _exact_root(v, p.denominator)
        if root is None or (root == 0 and p < 0):
            return None
        return root ** p.numerator
    if v < 0 and p.denominator != 1:
        return None
    if v == 0 and p < 0:
        return None
    return float(v) ** float(p)


def power(b, p) -> Expr:
    b = as_expr(b)
    p = _as_exponent(p)
    if p == 0:
        return ONE
    if p == 1:
        return b
    if isinstance(b, Constant):
        r = _const_power(b.value, p)
        if r is not None:
            return Constant(r)
        return Power(b, p)
    if isinstance(b, Power):
        if p.denominator == 1:
            return power(b.base, b.exponent * p)
        return Power(b, p)
    if isinstance(b, Product) and p.denominator == 1:
        return mul(*(power(f, p) for f in b.factors))
    return Power(b, p)


def unary(fn: str, a) -> Expr:
    a = as_expr(a)
    if fn not in UNARY_FUNCTIONS:
        raise ValueError(f"unknown function {fn!r}")
    if isinstance(a, Constant):
        v = a.value
        if fn == "sqrt":
            r = _const_power(v, Fraction(1, 2)) if isinstance(v, Fraction) else (math.sqrt(v) if v >= 0 else None)
            if r is not None:
                return Constant(r)
        elif v == 0 and fn in ("sin", "cos", "exp"):
            return ZERO if fn == "sin" else ONE
        elif v == 1 and fn == "ln":
            return ZERO
        elif isinstance(v, float):
            if fn != "ln" or v > 0:
                return Constant(getattr(math, "log" if fn == "ln" else fn)(v))
    return Unary(fn, a)


def sqrt(a):
    return unary("sqrt", a)


def sin(a):
    return unary("sin", a)


def cos(a):
    return unary("cos", a)


def exp(a):
    return unary("exp", a)


def ln(a):
    return unary("ln", a)


def rebuild(e: Expr, children) -> Expr:
    """Rebuild a node of the same kind from new children via the smart constructors."""
    if isinstance(e, Sum):
        return add(*children)
    if isinstance(e, Product):
        return mul(*children)
    if isinstance(e, Power):
        return power(children[0], e.exponent)
    if isinstance(e, Neg):
        return neg(children[0])
    if isinstance(e, Quotient):
        return div(children[0], children[1])
    if isinstance(e, Unary):
        return unary(e.fn, children[0])
    return e


# --------------------------------------------------------------------------
# inspection


def walk(e: Expr):
    """Yield every distinct subtree once (shared subtrees are not revisited)."""
    seen = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(node.children())


def free_vars(e: Expr) -> set:
    return {node.var for node in walk(e) if isinstance(node, Var)}


def jet_order(e: Expr) -> int:
    """Highest derivative order |I| of any dependent jet coordinate in e (0 if none)."""
    return max((v.order for v in free_vars(e) if isinstance(v, Dep)), default=0)


def dims(e: Expr) -> tuple[int, int]:
    """Smallest (n, m) able to host every variable of e."""
    n, m = 0, 0
    for v in free_vars(e):
        if isinstance(v, Indep):
            n = max(n, v.i + 1)
        else:
            n = max(n, len(_strip(v.I)))
            m = max(m, v.j + 1)
    return max(n, 1), max(m, 1)
