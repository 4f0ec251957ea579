"""Sum-of-products normal form.

An expression is expanded into ``{monomial: coefficient}`` where a monomial is
a sorted tuple of ``(atom, exponent)`` pairs.  Atoms are variables, function
applications with simplified arguments, numeric constants under a fractional
power, and sums that cannot be expanded (negative or fractional powers).
Sums used as atoms are made primitive (leading coefficient 1) whenever the
extracted content can be raised to the power exactly.

The form is canonical modulo commutativity, associativity, distributivity and
exponent arithmetic; it does not cancel a sum against its own reciprocal.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .expr import (
    ONE,
    Constant,
    Expr,
    Neg,
    Power,
    Product,
    Quotient,
    Sum,
    Unary,
    Var,
    _const_power,
    add,
    mul,
    power,
    unary,
)

MAX_EXPAND_POWER = 8
MAX_TERMS = 20000

_HALF = Fraction(1, 2)


def _mono_key(mono):
    return tuple((a.key(), p) for a, p in mono)


def _mono_mul(m1, m2):
    if not m1:
        return m2, 1
    if not m2:
        return m1, 1
    d = dict(m1)
    for a, p in m2:
        d[a] = d.get(a, 0) + p
    return _normalize(d)


def _normalize(d):
    """Drop zero exponents and fold integer powers of numeric atoms into a coefficient."""
    coef = Fraction(1)
    items = []
    for a, p in d.items():
        if p == 0:
            continue
        if isinstance(a, Constant):
            r = _const_power(a.value, p)
            if r is not None and (p.denominator == 1 or not isinstance(r, float)):
                coef *= r
                continue
        items.append((a, p))
    items.sort(key=lambda ap: (ap[0].key(), ap[1]))
    return tuple(items), coef


def _padd(P, Q, sign=1):
    out = dict(P)
    for m, c in Q.items():
        v = out.get(m, 0) + sign * c
        if v == 0:
            out.pop(m, None)
        else:
            out[m] = v
    return out


def _pmul(P, Q):
    if len(P) * len(Q) > MAX_TERMS:
        raise _TooBig
    out = {}
    for m1, c1 in P.items():
        for m2, c2 in Q.items():
            m, k = _mono_mul(m1, m2)
            v = out.get(m, 0) + c1 * c2 * k
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
    return out


class _TooBig(Exception):
    pass


def _atom(a: Expr, p):
    m, k = _normalize({a: Fraction(p)})
    return {m: k} if k != 0 else {}


def _leading(P):
    m = min(P, key=_mono_key)
    return P[m]


def _power_poly(P, p: Fraction):
    if not P:
        if p <= 0:
            raise ZeroDivisionError("zero raised to a non-positive power")
        return {}
    if len(P) == 1:
        (m, c), = P.items()
        if p.denominator == 1 or all(q.numerator % 2 == 1 for _, q in m):
            cp = _const_power(c, p)
            if cp is not None and (p.denominator == 1 or not isinstance(c, Fraction) or isinstance(cp, Fraction)):
                d = {a: q * p for a, q in m}
                mono, k = _normalize(d)
                return {mono: cp * k}
            if c > 0 and (p.denominator == 1 or all(q.numerator % 2 == 1 for _, q in m)):
                d = {a: q * p for a, q in m}
                d[Constant(c)] = d.get(Constant(c), 0) + p
                mono, k = _normalize(d)
                return {mono: k}
        return _atom(_to_expr(P), p)
    if p.denominator == 1 and 0 < p <= MAX_EXPAND_POWER:
        out = P
        for _ in range(int(p) - 1):
            out = _pmul(out, P)
        return out
    c = _leading(P)
    if c != 1:
        cp = _const_power(c, p) if (p.denominator == 1 or c > 0) else None
        if cp is not None:
            prim = {m: v / c for m, v in P.items()}
            if p.denominator != 1 and isinstance(c, Fraction) and not isinstance(cp, Fraction):
                # irrational content: keep it as a numeric atom
                base = _atom(_to_expr(prim), p)
                return _pmul(base, _atom(Constant(c), p))
            return {m: v * cp for m, v in _atom(_to_expr(prim), p).items()}
    return _atom(_to_expr(P), p)


@lru_cache(maxsize=1 << 15)
def _poly(e: Expr):
    if isinstance(e, Constant):
        return {(): e.value} if e.value != 0 else {}
    if isinstance(e, Var):
        return {((e, Fraction(1)),): Fraction(1)}
    if isinstance(e, Sum):
        out = {}
        for t in e.terms:
            out = _padd(out, _poly(t))
        return out
    if isinstance(e, Product):
        out = {(): Fraction(1)}
        for f in e.factors:
            try:
                out = _pmul(out, _poly(f))
            except _TooBig:
                out = _pmul(out, _atom(_to_expr(_poly(f)), 1))
        return _reexpand(out)
    if isinstance(e, Neg):
        return {m: -c for m, c in _poly(e.arg).items()}
    if isinstance(e, Quotient):
        return _pmul(_poly(e.num), _power_poly(_poly(e.den), Fraction(-1)))
    if isinstance(e, Power):
        return _reexpand(_power_poly(_poly(e.base), e.exponent))
    if isinstance(e, Unary):
        arg = simplify(e.arg)
        if e.fn == "sqrt":
            return _reexpand(_power_poly(_poly(arg), _HALF))
        f = unary(e.fn, arg)
        if isinstance(f, Constant):
            return _poly(f)
        return _atom(f, 1)
    raise TypeError(f"cannot simplify {type(e).__name__}")


def _reexpand(P):
    """Expand sum atoms whose exponents combined to a small positive integer."""
    if not any(isinstance(a, Sum) and q.denominator == 1 and 0 < q <= MAX_EXPAND_POWER for m in P for a, q in m):
        return P
    out = {}
    for m, c in P.items():
        rest = {a: q for a, q in m if not (isinstance(a, Sum) and q.denominator == 1 and 0 < q <= MAX_EXPAND_POWER)}
        mono, k = _normalize(rest)
        term = {mono: c * k}
        try:
            for a, q in m:
                if a not in rest:
                    term = _pmul(term, _power_poly(_poly(a), q))
        except _TooBig:
            term = {m: c}
        out = _padd(out, term)
    return out


def _to_expr(P) -> Expr:
    if not P:
        return Constant(0)
    terms = []
    for m in sorted(P, key=_mono_key):
        c = P[m]
        factors = [power(a, p) for a, p in m]
        terms.append(mul(Constant(c), *factors))
    return add(*terms)


@lru_cache(maxsize=1 << 15)
def simplify(e: Expr) -> Expr:
    """Canonical sum-of-products form: folds constants, absorbs 0 and 1, collects like terms."""
    return _to_expr(_poly(e))


def expand_terms(e: Expr) -> int:
    """Number of monomials in the normal form of e."""
    return len(_poly(e))


__all__ = ["simplify", "expand_terms", "ONE"]
