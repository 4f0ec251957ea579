"""Lagrangian densities L(x, u, u_I) of order r."""

from __future__ import annotations

from dataclasses import dataclass

from .expr import Expr
from .space import JetSpace


@dataclass(frozen=True)
class Lagrangian:
    """Density L on the order-r jet space with n independent and m dependent variables."""

    n: int
    m: int
    r: int
    density: Expr
    cap: int | None = None
    indep: tuple[str, ...] | None = None
    dep: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("a Lagrangian has order r >= 1")
        self.space.check(self.density)

    @property
    def space(self) -> JetSpace:
        return JetSpace(self.n, self.m, self.r, self.cap, self.indep, self.dep)

    @classmethod
    def parse(cls, source: str, n: int = 1, m: int = 1, r: int = 1, **names) -> "Lagrangian":
        sp = JetSpace(n, m, r, names.get("cap"), names.get("indep"), names.get("dep"))
        return cls(n, m, r, sp.parse(source), names.get("cap"), sp.indep, sp.dep)

    def with_density(self, density: Expr) -> "Lagrangian":
        return Lagrangian(self.n, self.m, self.r, density, self.cap, self.indep, self.dep)

    def __str__(self):
        return self.space.format(self.density)
