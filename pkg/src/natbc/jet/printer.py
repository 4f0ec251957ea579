"""Render expressions in the parser's grammar.

``parse(to_string(e, space), space) == e`` holds for every tree built by the
smart constructors; raw ``Neg``/``Quotient`` nodes print with explicit
parentheses and re-parse to their smart-constructor equivalents.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import Constant, Expr, Neg, Power, Product, Quotient, Sum, Unary, Var, dims, split_coefficient

# precedence levels
_SUM, _PROD, _POW, _ATOM = 1, 2, 3, 4


def _fmt_number(v) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    s = repr(float(v))
    return s


def _fmt_exponent(p: Fraction) -> str:
    if p.denominator == 1:
        return str(p.numerator)
    return f"({p.numerator}/{p.denominator})"


def to_string(e: Expr, space=None) -> str:
    if space is None:
        from .space import JetSpace

        n, m = dims(e)
        space = JetSpace(n, m, r=0, cap=0)
    s, _ = _render(e, space)
    return s


def _wrap(item, level):
    s, prec = item
    return f"({s})" if prec < level else s


def _is_negative(e: Expr) -> bool:
    c, _ = split_coefficient(e)
    return c < 0


def _render(e: Expr, sp):
    if isinstance(e, Constant):
        v = e.value
        s = _fmt_number(v)
        if v < 0:
            return s, _PROD
        if isinstance(v, Fraction) and v.denominator != 1:
            return s, _PROD
        return s, _ATOM
    if isinstance(e, Var):
        return sp.name(e.var), _ATOM
    if isinstance(e, Sum):
        parts = []
        for k, t in enumerate(e.terms):
            if k and _is_negative(t):
                c, rest = split_coefficient(t)
                mag = _render_product(-c, rest, sp)
                parts.append(" - " + _wrap(mag, _PROD))
            elif k:
                parts.append(" + " + _wrap(_render(t, sp), _PROD))
            else:
                parts.append(_wrap(_render(t, sp), _PROD))
        return "".join(parts), _SUM
    if isinstance(e, Product):
        c, rest = split_coefficient(e)
        return _render_product(c, rest, sp)
    if isinstance(e, Power):
        base = _render(e.base, sp)
        return f"{_wrap(base, _ATOM)}^{_fmt_exponent(e.exponent)}", _POW
    if isinstance(e, Unary):
        return f"{e.fn}({_render(e.arg, sp)[0]})", _ATOM
    if isinstance(e, Neg):
        return f"-({_render(e.arg, sp)[0]})", _PROD
    if isinstance(e, Quotient):
        return f"({_render(e.num, sp)[0]})/({_render(e.den, sp)[0]})", _PROD
    raise TypeError(f"cannot print {type(e).__name__}")


def _render_product(c, rest: Expr, sp):
    """c * rest where rest carries no numeric coefficient."""
    factors = rest.factors if isinstance(rest, Product) else (() if isinstance(rest, Constant) else (rest,))
    num, den = [], []
    for f in factors:
        if isinstance(f, Power) and f.exponent < 0:
            q = -f.exponent
            den.append(f.base if q == 1 else Power(f.base, q))
        else:
            num.append(f)
    sign = "-" if c < 0 else ""
    mag = -c if c < 0 else c
    num_s = [_wrap(_render(f, sp), _POW) for f in num]
    if mag != 1 or not num_s:
        num_s.insert(0, _fmt_number(mag))
    s = sign + "*".join(num_s)
    if den:
        if len(den) == 1:
            s += "/" + _wrap(_render(den[0], sp), _POW)
        else:
            s += "/(" + "*".join(_wrap(_render(f, sp), _POW) for f in den) + ")"
    if not sign and len(num_s) == 1 and not den:
        item = _render(num[0], sp) if num else (s, _ATOM)
        return item
    return s, _PROD
