"""Coordinate systems on finite-order jet spaces: dimensions, order cap, names."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .expr import Dep, Expr, Indep, JetVar, _strip, dims, free_vars
from .multiindex import MultiIndex, multi_indices

# letter aliases accepted for small n; x1..xn always work
ALIASES = {
    1: (("x", "t"),),
    2: (("x",), ("y",)),
    3: (("x",), ("y",), ("z",)),
    4: (("t",), ("x",), ("y",), ("z",)),
}


class OrderCapError(ValueError):
    """A total derivative would exceed the configured jet-order cap."""


class JetNameError(ValueError):
    pass


def default_names(n: int, m: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    if n in ALIASES:
        indep = tuple(a[0] for a in ALIASES[n])
    else:
        indep = tuple(f"x{i + 1}" for i in range(n))
    dep = ("u",) if m == 1 else tuple(f"u{j + 1}" for j in range(m))
    return indep, dep


@dataclass(frozen=True)
class JetSpace:
    """Jet coordinates (x^i, u^j_I) with n independent, m dependent variables.

    ``r`` is the working order (the Lagrangian order); ``cap`` bounds the order
    any total derivative may produce and defaults to ``2 * r``.
    """

    n: int
    m: int = 1
    r: int = 1
    cap: int | None = None
    indep: tuple[str, ...] | None = None
    dep: tuple[str, ...] | None = None
    _lookup: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.r < 0:
            raise ValueError("need n >= 1, m >= 1, r >= 0")
        if self.cap is None:
            object.__setattr__(self, "cap", max(2 * self.r, 1))
        if self.cap < self.r:
            raise ValueError("order cap below the working order")
        d_indep, d_dep = default_names(self.n, self.m)
        indep = tuple(self.indep) if self.indep else d_indep
        dep = tuple(self.dep) if self.dep else d_dep
        if len(indep) != self.n or len(dep) != self.m:
            raise ValueError("name tuples must have lengths n and m")
        object.__setattr__(self, "indep", indep)
        object.__setattr__(self, "dep", dep)
        lookup = {}
        for i, name in enumerate(indep):
            lookup[name] = i
        for i in range(self.n):
            lookup.setdefault(f"x{i + 1}", i)
        if self.indep == d_indep and self.n in ALIASES:
            for i, names in enumerate(ALIASES[self.n]):
                for a in names:
                    lookup.setdefault(a, i)
        clash = set(lookup) & set(dep)
        if clash:
            raise ValueError(f"names used for both kinds of variable: {sorted(clash)}")
        for name in list(indep) + list(dep):
            if not re.fullmatch(r"[A-Za-z][A-Za-z0-9]*", name):
                raise ValueError(f"bad variable name {name!r}")
        object.__setattr__(self, "_lookup", lookup)

    # ------------------------------------------------------------------ names
    def name(self, v: JetVar) -> str:
        if isinstance(v, Indep):
            return self.indep[v.i]
        base = self.dep[v.j]
        I = v.sized(self.n).I
        if I.order() == 0:
            return base
        letters = []
        for i, k in enumerate(I):
            letters.extend([self.indep[i]] * k)
        if all(len(s) == 1 for s in self.indep):
            return base + "_" + "".join(letters)
        return base + "_" + "_".join(letters)

    def indep_index(self, name: str) -> int | None:
        return self._lookup.get(name)

    def resolve(self, ident: str) -> JetVar:
        """Map an identifier such as ``u_xy`` or ``x2`` to its JetVar."""
        i = self._lookup.get(ident)
        if i is not None:
            return Indep(i)
        if ident in self.dep:
            return Dep(self.dep.index(ident), MultiIndex.zero(self.n))
        head, sep, tail = ident.partition("_")
        if not sep or head not in self.dep:
            raise JetNameError(f"unknown variable {ident!r}")
        counts = [0] * self.n
        for chunk in tail.split("_"):
            if not chunk:
                raise JetNameError(f"malformed jet subscript in {ident!r}")
            for i in self._split_subscript(chunk, ident):
                counts[i] += 1
        v = Dep(self.dep.index(head), counts)
        if v.order > self.r:
            raise JetNameError(f"{ident!r} has order {v.order}, which exceeds r={self.r}")
        return v

    def _split_subscript(self, chunk: str, ident: str):
        if chunk in self._lookup:
            return [self._lookup[chunk]]
        out = []
        pos = 0
        names = sorted(self._lookup, key=len, reverse=True)
        while pos < len(chunk):
            for nm in names:
                if chunk.startswith(nm, pos):
                    out.append(self._lookup[nm])
                    pos += len(nm)
                    break
            else:
                raise JetNameError(f"cannot read derivative subscript of {ident!r}")
        return out

    # ------------------------------------------------------------- variables
    def x(self, i: int) -> Indep:
        return Indep(i)

    def u(self, I=None, j: int = 0) -> Dep:
        return Dep(j, MultiIndex.zero(self.n) if I is None else I)

    def jet_vars(self, order: int | None = None) -> list[JetVar]:
        """Every coordinate up to the given order (default r), independents first."""
        order = self.r if order is None else order
        out: list[JetVar] = [Indep(i) for i in range(self.n)]
        for j in range(self.m):
            out.extend(Dep(j, I) for I in multi_indices(self.n, order))
        return out

    def check(self, e: Expr, order: int | None = None) -> None:
        """Raise if e uses variables outside (n, m, order)."""
        order = self.r if order is None else order
        for v in free_vars(e):
            if isinstance(v, Indep):
                if v.i >= self.n:
                    raise JetNameError(f"x^{v.i + 1} outside n={self.n}")
            else:
                if v.j >= self.m or len(_strip(v.I)) > self.n:
                    raise JetNameError(f"{v!r} outside (n={self.n}, m={self.m})")
                if v.order > order:
                    raise JetNameError(f"{v!r} has order {v.order} > {order}")

    def with_order(self, r: int, cap: int | None = None) -> "JetSpace":
        return JetSpace(self.n, self.m, r, cap, self.indep, self.dep)

    # ------------------------------------------------------------ utilities
    def parse(self, source: str) -> Expr:
        from .parser import parse

        return parse(source, self)

    def format(self, e: Expr) -> str:
        from .printer import to_string

        return to_string(e, self)

    @classmethod
    def for_expr(cls, e: Expr, r: int | None = None) -> "JetSpace":
        from .expr import jet_order

        n, m = dims(e)
        order = jet_order(e) if r is None else r
        return cls(n, m, max(order, 1), cap=max(2 * order, order + 8, 2))
