"""Partial derivatives, total derivatives and substitutions on jet expressions."""

from __future__ import annotations

from functools import lru_cache

from .expr import (
    ONE,
    ZERO,
    Constant,
    Dep,
    Expr,
    Indep,
    JetVar,
    Neg,
    Power,
    Product,
    Quotient,
    Sum,
    Unary,
    Var,
    add,
    cos,
    div,
    exp,
    mul,
    neg,
    power,
    rebuild,
    sin,
    sqrt,
)
from .multiindex import MultiIndex
from .space import OrderCapError

_CACHE = 1 << 16


@lru_cache(maxsize=_CACHE)
def variables(e: Expr) -> frozenset:
    """Jet variables occurring in e."""
    if isinstance(e, Var):
        return frozenset((e.var,))
    out = frozenset()
    for c in e.children():
        out |= variables(c)
    return out


def _chain(e: Expr, d) -> Expr:
    """Differentiate e structurally, with d() applied to children."""
    if isinstance(e, Sum):
        return add(*(d(t) for t in e.terms))
    if isinstance(e, Product):
        fs = e.factors
        terms = []
        for k, f in enumerate(fs):
            df = d(f)
            if isinstance(df, Constant) and df.value == 0:
                continue
            terms.append(mul(*fs[:k], df, *fs[k + 1 :]))
        return add(*terms)
    if isinstance(e, Power):
        db = d(e.base)
        if isinstance(db, Constant) and db.value == 0:
            return ZERO
        p = e.exponent
        return mul(Constant(p), power(e.base, p - 1), db)
    if isinstance(e, Neg):
        return neg(d(e.arg))
    if isinstance(e, Quotient):
        a, b = e.num, e.den
        return div(add(mul(d(a), b), neg(mul(a, d(b)))), power(b, 2))
    if isinstance(e, Unary):
        a = e.arg
        da = d(a)
        if isinstance(da, Constant) and da.value == 0:
            return ZERO
        fn = e.fn
        if fn == "sqrt":
            return div(da, mul(Constant(2), sqrt(a)))
        if fn == "sin":
            return mul(cos(a), da)
        if fn == "cos":
            return neg(mul(sin(a), da))
        if fn == "exp":
            return mul(exp(a), da)
        if fn == "ln":
            return div(da, a)
    raise TypeError(f"cannot differentiate {type(e).__name__}")


@lru_cache(maxsize=_CACHE)
def diff_partial(e: Expr, v: JetVar) -> Expr:
    """Fiberwise partial derivative de/dv, every jet coordinate independent."""
    if v not in variables(e):
        return ZERO
    if isinstance(e, Var):
        return ONE
    return _chain(e, lambda c: diff_partial(c, v))


def _raise_var(v: JetVar, i: int, cap: int | None) -> Expr:
    if isinstance(v, Indep):
        return ONE if v.i == i else ZERO
    I = list(v.I)
    if len(I) <= i:
        I.extend([0] * (i + 1 - len(I)))
    I[i] += 1
    w = Dep(v.j, I)
    if cap is not None and w.order > cap:
        raise OrderCapError(f"D_{i} raises jet order to {w.order} > cap {cap}")
    return Var(w)


@lru_cache(maxsize=_CACHE)
def _total(e: Expr, i: int, cap) -> Expr:
    if isinstance(e, Constant):
        return ZERO
    if isinstance(e, Var):
        return _raise_var(e.var, i, cap)
    return _chain(e, lambda c: _total(c, i, cap))


def total_derivative(e: Expr, i: int, cap: int | None = None) -> Expr:
    """D_i e = de/dx^i + sum over u^j_I in e of u^j_{I+1_i} de/du^j_I (0-based i).

    Raises OrderCapError if a produced coordinate would exceed ``cap``.
    """
    if i < 0:
        raise ValueError("independent index must be >= 0")
    return _total(e, int(i), cap)


def total_derivative_multi(e: Expr, I, cap: int | None = None) -> Expr:
    """D_I e = D_1^{i_1} ... D_n^{i_n} e."""
    I = MultiIndex(I)
    for i in reversed(range(len(I))):
        for _ in range(I[i]):
            e = total_derivative(e, i, cap)
    return e


def total_derivative_explicit(e: Expr, i: int, cap: int | None = None) -> Expr:
    """D_i written literally as d/dx^i + sum_{j,I} u^j_{I+1_i} d/du^j_I.

    Slower than :func:`total_derivative`; kept as an independent route for tests.
    """
    terms = []
    for v in sorted(variables(e), key=lambda w: w.key()):
        dv = diff_partial(e, v)
        terms.append(mul(_raise_var(v, i, cap), dv))
    return add(*terms)


def substitute(e: Expr, mapping: dict) -> Expr:
    """Replace jet variables by expressions (keys may be JetVars or Vars)."""
    m = {(k.var if isinstance(k, Var) else k): (v if isinstance(v, Expr) else Constant(v)) for k, v in mapping.items()}
    keys = frozenset(m)
    memo: dict = {}

    def go(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key][1]
        if not (variables(node) & keys):
            out = node
        elif isinstance(node, Var):
            out = m[node.var]
        else:
            out = rebuild(node, [go(c) for c in node.children()])
        memo[key] = (node, out)
        return out

    return go(e)


def restrict_to_boundary(e: Expr, n: int) -> Expr:
    """Set x^n = 0 (the last independent variable); jet coordinates are untouched."""
    return substitute(e, {Indep(n - 1): ZERO})
