"""Euler-Lagrange operator E and the boundary operator E^d on a flat boundary {x_n = 0}.

For a total differential operator ``box = sum a^I_j D_I o pr_j`` the pair

    E(box)_j            = sum_I (-1)^|I| D_I(a^I_j)
    E^d(box)_(j, beta)  = sum_{I, alpha < i_n, i_n - alpha - 1 = beta}
                          (-1)^(|I| - i_n + alpha) D_{I - i_n}( D_n^alpha(a^I_j) |_{x_n = 0} )

classifies ``box`` modulo coboundaries of forms vanishing on the boundary.
Applied to ``a^I_j = dL/du^j_I`` it yields the Euler-Lagrange expressions and
the natural boundary conditions of a free-boundary variational problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .jet import (
    Expr,
    Lagrangian,
    MultiIndex,
    add,
    diff_partial,
    multi_indices,
    mul,
    restrict_to_boundary,
    simplify,
    total_derivative,
    total_derivative_multi,
)
from .jet.expr import ZERO, Constant, Dep, is_zero
from .jet.space import JetSpace


class CurvedBoundaryError(ValueError):
    """Natural boundary conditions were requested for a boundary other than {x_n = 0}."""


@dataclass
class TotalDiffOperator:
    """Operator sum_{j, I} a^I_j D_I^{(j)} acting on m-tuples of functions."""

    n: int
    m: int = 1
    coefficients: dict = field(default_factory=dict)
    cap: int | None = None

    def __post_init__(self):
        coeffs = {}
        for (j, I), a in self.coefficients.items():
            I = MultiIndex(I)
            if len(I) != self.n or not 0 <= j < self.m:
                raise ValueError(f"coefficient label {(j, tuple(I))} does not fit n={self.n}, m={self.m}")
            if not is_zero(a):
                coeffs[(j, I)] = a
        self.coefficients = coeffs

    def order(self) -> int:
        return max((I.order() for _, I in self.coefficients), default=0)

    def add_term(self, j: int, I, a: Expr) -> None:
        key = (j, MultiIndex(I))
        self.coefficients[key] = add(self.coefficients.get(key, ZERO), a)

    def compose_total_derivative(self, i: int) -> "TotalDiffOperator":
        """D_i o self, using D_i o (a D_I) = D_i(a) D_I + a D_{I + 1_i}."""
        out = TotalDiffOperator(self.n, self.m, {}, self.cap)
        for (j, I), a in self.coefficients.items():
            out.add_term(j, I, total_derivative(a, i, self.cap))
            out.add_term(j, I.raised(i), a)
        out.__post_init__()
        return out

    def premultiply(self, f: Expr) -> "TotalDiffOperator":
        """f o self (multiplication operator composed after self)."""
        return TotalDiffOperator(self.n, self.m, {k: mul(f, a) for k, a in self.coefficients.items()}, self.cap)

    def __add__(self, other: "TotalDiffOperator") -> "TotalDiffOperator":
        out = TotalDiffOperator(self.n, self.m, dict(self.coefficients), self.cap)
        for (j, I), a in other.coefficients.items():
            out.add_term(j, I, a)
        out.__post_init__()
        return out


@dataclass
class EulerResult:
    """Interior components E_j and boundary components E^d_(j, alpha)."""

    interior: list
    boundary: dict

    def boundary_for(self, j: int = 0) -> dict:
        return {a: e for (jj, a), e in self.boundary.items() if jj == j}


def _sign(k: int) -> Constant:
    return Constant(-1 if k % 2 else 1)


def lagrangian_operator(L: Lagrangian) -> TotalDiffOperator:
    """The operator with coefficients a^I_j = dL/du^j_I (|I| <= r)."""
    sp = L.space
    coeffs = {}
    for j in range(L.m):
        for I in multi_indices(L.n, L.r):
            a = diff_partial(L.density, Dep(j, I))
            if not is_zero(a):
                coeffs[(j, I)] = a
    return TotalDiffOperator(L.n, L.m, coeffs, sp.cap)


def _interior(op: TotalDiffOperator, simplified: bool) -> list:
    acc = [[] for _ in range(op.m)]
    for (j, I), a in sorted(op.coefficients.items(), key=lambda kv: (kv[0][0], tuple(kv[0][1]))):
        acc[j].append(mul(_sign(I.order()), total_derivative_multi(a, I, op.cap)))
    out = [add(*terms) for terms in acc]
    return [simplify(e) for e in out] if simplified else out


def _boundary(op: TotalDiffOperator, simplified: bool) -> dict:
    n = op.n
    acc: dict = {}
    for (j, I), a in sorted(op.coefficients.items(), key=lambda kv: (kv[0][0], tuple(kv[0][1]))):
        i_n = I[-1]
        tangential = I.tangential()
        normal = a
        for alpha in range(i_n):
            if alpha:
                normal = total_derivative(normal, n - 1, op.cap)
            on_boundary = restrict_to_boundary(normal, n)
            term = mul(_sign(I.order() - i_n + alpha), total_derivative_multi(on_boundary, tangential, op.cap))
            acc.setdefault((j, i_n - alpha - 1), []).append(term)
    out = {k: add(*v) for k, v in sorted(acc.items())}
    if simplified:
        out = {k: simplify(v) for k, v in out.items()}
    return out


def relative_euler(op: TotalDiffOperator, simplified: bool = True) -> EulerResult:
    """(E(box), E^d(box)) for a total differential operator on {x_n >= 0}."""
    return EulerResult(_interior(op, simplified), _boundary(op, simplified))


def euler_lagrange(L: Lagrangian, simplified: bool = True) -> list:
    """Components sum_{|I| <= r} (-1)^|I| D_I(dL/du^j_I), one per dependent variable."""
    return _interior(lagrangian_operator(L), simplified)


def _is_flat(boundary) -> bool:
    if boundary is None:
        return True
    if isinstance(boundary, str):
        return boundary.lower() in ("flat", "x_n=0", "xn=0")
    return bool(getattr(boundary, "is_flat", False))


def natural_boundary_conditions(L: Lagrangian, boundary="flat", simplified: bool = True) -> dict:
    """Natural boundary conditions on {x_n = 0}, keyed by (j, alpha), alpha = 0..r-1.

    E^d_alpha[j] = sum_{|I| <= r, i_n > alpha} (-1)^(|I| - alpha - 1)
                   D_{I - i_n}( D_n^(i_n - alpha - 1)(dL/du^j_I) |_{x_n = 0} )

    Any boundary other than the flat hyperplane is refused: flatten it first
    with a boundary-friendly change of coordinates (see natbc.contact).
    """
    if not _is_flat(boundary):
        raise CurvedBoundaryError(
            "natural boundary conditions need the boundary {x_n = 0}; "
            "pull the Lagrangian back through a flattening transformation first"
        )
    n, cap = L.n, L.space.cap
    out = {}
    for j in range(L.m):
        for alpha in range(L.r):
            terms = []
            for I in sorted(multi_indices(n, L.r)):
                i_n = I[-1]
                if i_n <= alpha:
                    continue
                a = diff_partial(L.density, Dep(j, I))
                if is_zero(a):
                    continue
                inner = restrict_to_boundary(total_derivative_multi(a, MultiIndex.unit(n, n - 1, i_n - alpha - 1), cap), n)
                terms.append(mul(_sign(I.order() - alpha - 1), total_derivative_multi(inner, I.tangential(), cap)))
            e = add(*terms)
            out[(j, alpha)] = simplify(e) if simplified else e
    return out


def boundary_space(L: Lagrangian) -> JetSpace:
    """Jet space hosting the boundary expressions (same names, order up to the cap)."""
    sp = L.space
    return sp.with_order(sp.cap, sp.cap)
