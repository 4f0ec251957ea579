"""Point transformations, their first-order contact lifts, and transversality conditions.

Source coordinates are (t^1..t^n, y) with jets y_i; target coordinates are
(x^1..x^n, u) with jets u_a.  Both live in the same Expr vocabulary: index i of
``Indep`` means t^i in a source expression and x^i in a target expression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import fsolve

from .jet import (
    Expr,
    Lagrangian,
    add,
    diff_partial,
    equivalent,
    evaluate_many,
    mul,
    neg,
    simplify,
    substitute,
    total_derivative,
    variables,
)
from .jet.expr import ZERO, Constant, Dep, Indep, Var, div, is_zero
from .jet.multiindex import MultiIndex
from .jet.space import JetSpace
from .variational import natural_boundary_conditions

FRIENDLY_TOL = 1e-8
ROUND_TRIP_TOL = 1e-8


class SingularLift(ArithmeticError):
    """The total Jacobian of the transformation vanishes."""


class NotBoundaryFriendly(ValueError):
    """The transformation does not map the boundary onto {x_n = 0}."""


def source_space(n: int, r: int = 1) -> JetSpace:
    indep = ("t",) if n == 1 else tuple(f"t{i + 1}" for i in range(n))
    return JetSpace(n, 1, r, indep=indep, dep=("y",))


def target_space(n: int, r: int = 1) -> JetSpace:
    return JetSpace(n, 1, r)


def _zero_order(e: Expr) -> bool:
    return all(isinstance(v, Indep) or v.order == 0 for v in variables(e))


def _jet1(n: int, i: int) -> Var:
    return Var(Dep(0, MultiIndex.unit(n, i)))


def det(rows) -> Expr:
    """Symbolic determinant by cofactor expansion along the first row."""
    k = len(rows)
    if k == 1:
        return rows[0][0]
    if k == 2:
        return add(mul(rows[0][0], rows[1][1]), neg(mul(rows[0][1], rows[1][0])))
    terms = []
    for c in range(k):
        if is_zero(rows[0][c]):
            continue
        minor = [row[:c] + row[c + 1 :] for row in rows[1:]]
        t = mul(rows[0][c], det(minor))
        terms.append(t if c % 2 == 0 else neg(t))
    return add(*terms)


def cross(vectors) -> np.ndarray:
    """Generalized cross product of n vectors in R^(n+1).

    nu_c = (-1)^(n+c) det(M without column c), so (T_1, ..., T_n, nu) is positively oriented.
    """
    M = np.asarray(vectors, dtype=float)
    n = M.shape[0]
    nu = np.empty(n + 1)
    for c in range(n + 1):
        nu[c] = (-1) ** (n + c) * np.linalg.det(np.delete(M, c, axis=1))
    return nu


@dataclass(frozen=True)
class PointTransformation:
    """(t, y) -> (x(t, y), u(t, y)) with optional inverse (x, u) -> (t(x, u), y(x, u))."""

    n: int
    components: tuple
    inverse_components: tuple | None = None

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.n + 1:
            raise ValueError(f"need n+1 = {self.n + 1} components")
        if not all(_zero_order(c) for c in comps):
            raise ValueError("transformation components may only use t and y")
        object.__setattr__(self, "components", comps)
        if self.inverse_components is not None:
            inv = tuple(self.inverse_components)
            if len(inv) != self.n + 1 or not all(_zero_order(c) for c in inv):
                raise ValueError("inverse must have n+1 zero-order components")
            object.__setattr__(self, "inverse_components", inv)

    @classmethod
    def parse(cls, n: int, components, inverse=None) -> "PointTransformation":
        src, tgt = source_space(n, 0), target_space(n, 0)
        comps = tuple(src.parse(s) for s in components)
        inv = tuple(tgt.parse(s) for s in inverse) if inverse is not None else None
        return cls(n, comps, inv)

    @classmethod
    def identity(cls, n: int = 1) -> "PointTransformation":
        comps = tuple(Var(Indep(i)) for i in range(n)) + (Var(Dep(0, MultiIndex.zero(n))),)
        return cls(n, comps, comps)

    @classmethod
    def rotation(cls, theta: float) -> "PointTransformation":
        """n = 1 rotation sending the line through 0 at angle theta onto the u-axis."""
        c, s = math.cos(theta), math.sin(theta)
        return cls.parse(1, (f"{-s!r}*t + {c!r}*y", f"{c!r}*t + {s!r}*y"), (f"{-s!r}*x + {c!r}*u", f"{c!r}*x + {s!r}*u"))

    @property
    def x(self) -> tuple:
        return self.components[:-1]

    @property
    def u(self) -> Expr:
        return self.components[-1]

    @property
    def has_inverse(self) -> bool:
        return self.inverse_components is not None

    def inverse(self) -> "PointTransformation":
        if not self.has_inverse:
            raise ValueError("no inverse supplied")
        return PointTransformation(self.n, self.inverse_components, self.components)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map an (..., n+1) array of (t, y) points."""
        return _apply(self.components, self.n, points)

    def apply_inverse(self, points: np.ndarray) -> np.ndarray:
        return _apply(self.inverse().components, self.n, points)

    def invert_numeric(self, target, guess=None) -> np.ndarray:
        """Solve F(t, y) = target by root finding (no symbolic inverse needed)."""
        target = np.asarray(target, dtype=float)
        guess = target if guess is None else np.asarray(guess, dtype=float)
        sol, info, ier, msg = fsolve(lambda p: self.apply(p) - target, guess, full_output=True, xtol=1e-13)
        if ier != 1:
            raise ArithmeticError(f"numeric inversion failed: {msg}")
        return sol

    def check_inverse(self, samples: int = 50, seed=0, low=-1.0, high=1.0) -> float:
        """Max round-trip error |F^-1(F(p)) - p| over random source points."""
        rng = np.random.default_rng(seed)
        p = rng.uniform(low, high, (samples, self.n + 1))
        back = self.apply_inverse(self.apply(p))
        return float(np.max(np.abs(back - p)))


def _apply(components, n, points):
    pts = np.asarray(points, dtype=float)
    env = {Indep(i): pts[..., i] for i in range(n)}
    env[Dep(0, MultiIndex.zero(n))] = pts[..., n]
    cols = []
    for c in components:
        v, ok = evaluate_many(c, env)
        cols.append(np.broadcast_to(v, pts.shape[:-1]))
    return np.stack(cols, axis=-1)


def _total_jacobian_matrix(comps, n):
    """rows i: (D_i(c_1), ..., D_i(c_n)) for the first n components c."""
    return [[total_derivative(c, i) for c in comps[:n]] for i in range(n)]


def _assert_nonsingular(d: Expr, what: str):
    if is_zero(simplify(d)):
        raise SingularLift(f"{what} vanishes identically")
    vals, ok = evaluate_many(d, {v: np.random.default_rng(1).uniform(-2, 2, 64) for v in variables(d)} or {Indep(0): np.zeros(64)})
    if ok.any() and np.all(np.abs(vals[ok]) < 1e-300):
        raise SingularLift(f"{what} vanishes identically")


def lift_first_order(F: PointTransformation) -> dict:
    """First-order target jets u_a as expressions in (t, y, y_i).

    u_a = det(J with column a replaced by b) / det(J), J_ia = D_{t^i}(x^a), b_i = D_{t^i}(u);
    for n = 1 this is u' = D_t(u) / D_t(x).
    """
    n = F.n
    J = _total_jacobian_matrix(F.components, n)
    b = [total_derivative(F.u, i) for i in range(n)]
    dJ = det(J)
    _assert_nonsingular(dJ, "total Jacobian of the lift")
    out = {}
    for a in range(n):
        Ja = [row[:a] + [b[i]] + row[a + 1 :] for i, row in enumerate(J)]
        out[Dep(0, MultiIndex.unit(n, a))] = div(det(Ja), dJ)
    return out


def total_jacobian(F: PointTransformation) -> Expr:
    """det(D_{x^a}(t^b)) in target jet variables: the density factor of the pullback."""
    if not F.has_inverse:
        raise ValueError("total_jacobian needs the inverse transformation")
    n = F.n
    d = det(_total_jacobian_matrix(F.inverse_components, n))
    _assert_nonsingular(d, "total Jacobian")
    return d


def pullback_lagrangian(F: PointTransformation, L: Lagrangian) -> Lagrangian:
    """Density of the same action in target coordinates: L(t, y, y_i) * det(D_x t)."""
    if L.r != 1:
        raise ValueError("only first-order Lagrangians can be transformed")
    if L.n != F.n or L.m != 1:
        raise ValueError("Lagrangian and transformation dimensions differ")
    n = F.n
    Finv = F.inverse()
    mapping = {Indep(i): Finv.components[i] for i in range(n)}
    mapping[Dep(0, MultiIndex.zero(n))] = Finv.components[n]
    mapping.update(lift_first_order(Finv))
    density = mul(substitute(L.density, mapping), total_jacobian(F))
    tgt = target_space(n, 1)
    return Lagrangian(n, 1, 1, density, None, tgt.indep, tgt.dep)


# ---------------------------------------------------------------- boundaries


@dataclass(frozen=True)
class BoundaryCurve:
    """Planar curve sigma -> (t(sigma), y(sigma)); expressions use Indep(0) as sigma."""

    t: Expr
    y: Expr
    param_range: tuple = (-1.0, 1.0)
    name: str = ""

    @classmethod
    def parse(cls, t: str, y: str, param_range=(-1.0, 1.0), name="") -> "BoundaryCurve":
        sp = JetSpace(1, 1, 0, indep=("s",), dep=("w",))
        return cls(sp.parse(t), sp.parse(y), tuple(param_range), name)

    @classmethod
    def point(cls, t0: float, y0: float) -> "BoundaryCurve":
        return cls(Constant(t0), Constant(y0), (0.0, 0.0), "point")

    @classmethod
    def vertical_line(cls, t0: float, param_range=(-5.0, 5.0)) -> "BoundaryCurve":
        return cls(Constant(t0), Var(Indep(0)), param_range, "vertical")

    @classmethod
    def circle(cls, center, radius: float, param_range=(-math.pi, math.pi)) -> "BoundaryCurve":
        return cls.parse(f"{center[0]!r} + {radius!r}*cos(s)", f"{center[1]!r} + {radius!r}*sin(s)", param_range, "circle")

    @property
    def is_degenerate(self) -> bool:
        return isinstance(self.t, Constant) and isinstance(self.y, Constant)

    def _eval(self, e, s):
        s = np.asarray(s, dtype=float)
        v, _ = evaluate_many(e, {Indep(0): s})
        return np.broadcast_to(v, s.shape) + 0.0

    def __call__(self, s):
        return self._eval(self.t, s), self._eval(self.y, s)

    def derivative(self, s):
        s0 = Indep(0)
        return self._eval(diff_partial(self.t, s0), s), self._eval(diff_partial(self.y, s0), s)

    def second_derivative(self, s):
        s0 = Indep(0)
        dt, dy = diff_partial(self.t, s0), diff_partial(self.y, s0)
        return self._eval(diff_partial(dt, s0), s), self._eval(diff_partial(dy, s0), s)

    def check_regular(self, samples: int = 32) -> None:
        if self.is_degenerate:
            return
        s = np.linspace(*self.param_range, samples)
        dt, dy = self.derivative(s)
        if np.any(np.hypot(dt, dy) < 1e-12):
            raise ValueError("boundary curve is not regular")


@dataclass(frozen=True)
class BoundaryHypersurface:
    """Hypersurface of R^(n+1) = (t^1..t^n, y): a level set Phi = 0 or a parametrization.

    Level-set expressions use Indep(i) for t^i and Dep(0) for y.  Parametrizations
    are n+1 expressions in the parameters Indep(0..n-1).
    """

    n: int
    level_set: Expr | None = None
    parametrization: tuple | None = None
    is_flat: bool = False

    @classmethod
    def parse_level_set(cls, n: int, phi: str) -> "BoundaryHypersurface":
        return cls(n, level_set=source_space(n, 0).parse(phi))

    @classmethod
    def flat(cls, n: int) -> "BoundaryHypersurface":
        """The hyperplane t^n = 0."""
        return cls(n, level_set=Var(Indep(n - 1)), is_flat=True)

    @classmethod
    def parse_parametrization(cls, n: int, comps) -> "BoundaryHypersurface":
        names = ("s",) if n == 1 else tuple(f"s{i + 1}" for i in range(n))
        sp = JetSpace(n, 1, 0, indep=names, dep=("w",))
        return cls(n, parametrization=tuple(sp.parse(c) for c in comps))

    def phi(self, point) -> float:
        p = np.asarray(point, dtype=float)
        env = {Indep(i): p[..., i] for i in range(self.n)}
        env[Dep(0, MultiIndex.zero(self.n))] = p[..., self.n]
        v, _ = evaluate_many(self.level_set, env)
        return v

    def gradient(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        env = {Indep(i): p[..., i] for i in range(self.n)}
        yv = Dep(0, MultiIndex.zero(self.n))
        env[yv] = p[..., self.n]
        out = []
        for v in [Indep(i) for i in range(self.n)] + [yv]:
            g, _ = evaluate_many(diff_partial(self.level_set, v), env)
            out.append(np.broadcast_to(g, p.shape[:-1]))
        return np.stack(out, axis=-1)

    def tangent_frame(self, params) -> np.ndarray:
        s = np.asarray(params, dtype=float)
        env = {Indep(i): s[i] for i in range(self.n)}
        return np.array([[evaluate_many(diff_partial(c, Indep(k)), env)[0] for c in self.parametrization] for k in range(self.n)], dtype=float)


def boundary_normal(S: BoundaryHypersurface, point) -> np.ndarray:
    """Unit normal in (t^1..t^n, y) order.

    Level sets: normalized gradient of Phi at a point of S (|Phi| <= 1e-8).
    Parametrizations: ``point`` holds parameter values; the normal is the signed
    minor vector of the tangent frame.
    """
    if S.level_set is not None:
        val = float(S.phi(point))
        if abs(val) > FRIENDLY_TOL:
            raise ValueError(f"point is not on the hypersurface (Phi = {val:.3e})")
        g = S.gradient(point)
    else:
        g = cross(S.tangent_frame(point))
    norm = float(np.linalg.norm(g))
    if norm < 1e-14:
        raise ValueError("degenerate normal (vanishing gradient or tangent frame)")
    return g / norm


# ---------------------------------------------------------- transversality


def transversality_1d(L: Lagrangian, gamma: BoundaryCurve, sigma0: float) -> Expr:
    """y_gamma'(s0) dL/dy' - t_gamma'(s0) (y' dL/dy' - L), an expression in (t, y, y')."""
    if L.n != 1 or L.r != 1:
        raise ValueError("transversality_1d needs a first-order Lagrangian in one variable")
    dt, dy = (float(v) for v in gamma.derivative(sigma0))
    if dt == 0 and dy == 0:
        raise ValueError("boundary curve is singular at sigma0")
    yp = _jet1(1, 0)
    Lp = diff_partial(L.density, yp.var)
    energy = add(mul(yp, Lp), neg(L.density))
    return add(mul(Constant(dy), Lp), neg(mul(Constant(dt), energy)))


def generalized_transversality(L: Lagrangian) -> list:
    """H = (dL/dy_1, ..., dL/dy_n, y_i dL/dy_i - L); the boundary condition is nu . H = 0."""
    if L.r != 1 or L.m != 1:
        raise ValueError("generalized_transversality needs a scalar first-order Lagrangian")
    n = L.n
    parts = [diff_partial(L.density, Dep(0, MultiIndex.unit(n, i))) for i in range(n)]
    energy = add(*(mul(_jet1(n, i), parts[i]) for i in range(n)), neg(L.density))
    return parts + [energy]


def transversality_condition(L: Lagrangian, normal) -> Expr:
    """nu . H for a fixed numeric normal vector nu (ordered t^1..t^n, y)."""
    H = generalized_transversality(L)
    return add(*(mul(Constant(float(c)), h) for c, h in zip(normal, H)))


# -------------------------------------------------------------- naturality


@dataclass
class NaturalityReport:
    samples: int
    max_discrepancy: float
    max_scaled_discrepancy: float
    max_magnitude: float
    max_normal_angle_deg: float
    max_boundary_residual: float
    transformed: Lagrangian
    condition: Expr
    details: dict = field(default_factory=dict)

    def passed(self, tol: float = 1e-9) -> bool:
        return self.max_scaled_discrepancy <= tol


def _jet_env(n, base_pts, jets):
    env = {Indep(i): base_pts[:, i] for i in range(n)}
    env[Dep(0, MultiIndex.zero(n))] = base_pts[:, n]
    for i in range(n):
        env[Dep(0, MultiIndex.unit(n, i))] = jets[:, i]
    return env


def verify_naturality(L: Lagrangian, F: PointTransformation, boundary, samples: int = 100, seed=0, jet_range=2.0) -> NaturalityReport:
    """Check that the flat-boundary condition of the pulled-back Lagrangian matches
    the transversality condition computed directly in the original coordinates.

    ``boundary`` is a BoundaryCurve (n = 1), a BoundaryHypersurface, or None
    (the preimage of {x_n = 0} itself).  Path (a): natural_boundary_conditions of
    pullback_lagrangian(F, L), evaluated at F(point) and the lifted jet.  Path (b):
    n = 1 with a curve, transversality_1d(L, gamma, sigma) / (du/dsigma);
    otherwise -nu_F . H with nu_F the signed minors of the frame
    (dx^1(t, y), ..., dx^(n-1)(t, y), du(t, y)) of F^-1 and H from
    generalized_transversality.
    """
    n = F.n
    rng = np.random.default_rng(seed)
    Lt = pullback_lagrangian(F, L)
    cond = natural_boundary_conditions(Lt)[(0, 0)]
    lift = lift_first_order(F)
    H = generalized_transversality(L)
    Finv = F.inverse()
    frame_exprs = [[diff_partial(c, v) for c in Finv.components] for v in [Indep(i) for i in range(n - 1)] + [Dep(0, MultiIndex.zero(n))]]

    got = 0
    lhs_all, rhs_all, angle_all, resid_all = [], [], [], []
    attempts = 0
    while got < samples:
        attempts += 1
        if attempts > 50:
            raise ArithmeticError("could not draw enough non-singular boundary samples")
        k = 2 * (samples - got) + 8
        if isinstance(boundary, BoundaryCurve) and n == 1:
            lo, hi = boundary.param_range
            sig = rng.uniform(lo, hi, k)
            tt, yy = boundary(sig)
            src = np.stack([tt, yy], axis=-1)
            tgt = F.apply(src)
        else:
            tgt = rng.uniform(-1.0, 1.0, (k, n + 1))
            tgt[:, n - 1] = 0.0
            src = F.apply_inverse(tgt)
            sig = None
        resid = np.abs(tgt[:, n - 1])
        if isinstance(boundary, BoundaryHypersurface) and boundary.level_set is not None:
            resid = np.maximum(resid, np.abs(boundary.phi(src)))
        if np.any(resid > FRIENDLY_TOL):
            raise NotBoundaryFriendly(f"boundary residual {resid.max():.3e} exceeds {FRIENDLY_TOL}")
        jets = rng.uniform(-jet_range, jet_range, (k, n))
        senv = _jet_env(n, src, jets)
        ua = np.stack([evaluate_many(lift[Dep(0, MultiIndex.unit(n, a))], senv)[0] for a in range(n)], axis=-1)
        tenv = _jet_env(n, tgt, ua)
        lhs, ok = evaluate_many(cond, tenv)
        Hv = np.stack([np.broadcast_to(evaluate_many(h, senv)[0], (k,)) for h in H], axis=-1)
        fenv = {Indep(i): tgt[:, i] for i in range(n)}
        fenv[Dep(0, MultiIndex.zero(n))] = tgt[:, n]
        frames = np.array([[np.broadcast_to(evaluate_many(e, fenv)[0], (k,)) for e in row] for row in frame_exprs])
        nus = np.array([cross(frames[:, :, s]) for s in range(k)])
        if sig is not None:
            dts, dys = boundary.derivative(sig)
            # du/dsigma along gamma
            ut, uy = (np.broadcast_to(evaluate_many(diff_partial(F.u, v), _jet_env(1, src, jets))[0], (k,)) for v in (Indep(0), Dep(0, (0,))))
            speed = ut * dts + uy * dys
            direct = np.array([
                float(evaluate_many(transversality_1d(L, boundary, float(s)), {kk: vv[q] for kk, vv in senv.items()})[0])
                for q, s in enumerate(sig)
            ])
            rhs = direct / speed
            normals = np.stack([dys, -dts], axis=-1)
        else:
            rhs = -np.sum(nus * Hv, axis=-1)
            if isinstance(boundary, BoundaryHypersurface):
                if boundary.level_set is not None:
                    normals = boundary.gradient(src)
                else:
                    normals = nus
            else:
                normals = nus
        good = ok & np.isfinite(rhs) & np.all(np.isfinite(ua), axis=-1) & (np.abs(rhs) < 1e8)
        if sig is not None:
            good &= np.abs(speed) > 1e-6
        idx = np.flatnonzero(good)[: samples - got]
        cosang = np.abs(np.sum(nus[idx] * normals[idx], axis=-1)) / (
            np.linalg.norm(nus[idx], axis=-1) * np.linalg.norm(normals[idx], axis=-1)
        )
        lhs_all.append(lhs[idx])
        rhs_all.append(rhs[idx])
        angle_all.append(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
        resid_all.append(resid[idx])
        got += len(idx)
    lhs = np.concatenate(lhs_all)
    rhs = np.concatenate(rhs_all)
    diff = np.abs(lhs - rhs)
    mag = np.maximum(np.abs(lhs), np.abs(rhs))
    return NaturalityReport(
        samples=got,
        max_discrepancy=float(diff.max()),
        max_scaled_discrepancy=float(np.max(diff / (1.0 + mag))),
        max_magnitude=float(mag.max()),
        max_normal_angle_deg=float(np.concatenate(angle_all).max()),
        max_boundary_residual=float(np.concatenate(resid_all).max()),
        transformed=Lt,
        condition=cond,
        details={"flat_side": lhs, "direct_side": rhs},
    )


__all__ = [
    "BoundaryCurve",
    "BoundaryHypersurface",
    "NaturalityReport",
    "NotBoundaryFriendly",
    "PointTransformation",
    "SingularLift",
    "boundary_normal",
    "cross",
    "det",
    "generalized_transversality",
    "lift_first_order",
    "pullback_lagrangian",
    "source_space",
    "target_space",
    "total_jacobian",
    "transversality_1d",
    "transversality_condition",
    "verify_naturality",
    "equivalent",
    "ZERO",
]
