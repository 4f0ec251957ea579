"""Free-endpoint problems in one independent variable.

A graph y(t) runs from a point of the curve gamma0 to a point of gamma1.  The
unknowns are the endpoint parameters (sigma0, sigma1) and the N-1 interior
values on the uniform grid between the endpoint abscissas.  Moving an endpoint
re-derives the whole grid, so domain variations enter the discrete action
exactly rather than through an extension of the graph.

The action uses the midpoint rule on each cell: L is evaluated at the cell
center with the averaged value and the cell slope (y_{k+1} - y_k) / h.  Its
gradient is computed analytically from the symbolic partials of L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..contact import BoundaryCurve, transversality_1d
from ..jet import Lagrangian, diff_partial, evaluate_many
from ..jet.expr import Dep, Indep
from ..variational import euler_lagrange

T, Y, P, Q = Indep(0), Dep(0, ()), Dep(0, (1,)), Dep(0, (2,))

MIN_NODES = 8


class DegenerateInterval(ValueError):
    """Endpoint abscissas met or crossed."""


class NonConvergence(RuntimeError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


@dataclass
class Problem1D:
    """Minimize the action of L over graphs joining gamma0 to gamma1.

    ``initial`` is an optional callable y(t) used for the interior of the first
    grid; by default the straight segment between the two endpoints.
    """

    L: Lagrangian
    gamma0: BoundaryCurve
    gamma1: BoundaryCurve
    sigma0: float = 0.0
    sigma1: float = 0.0
    initial: object = None

    def __post_init__(self):
        if (self.L.n, self.L.m, self.L.r) != (1, 1, 1):
            raise ValueError("Problem1D needs a first-order Lagrangian with n = m = 1")
        for g in (self.gamma0, self.gamma1):
            g.check_regular()
        self._check_disjoint()
        a, ya = self.endpoint(0, self.sigma0)
        b, yb = self.endpoint(1, self.sigma1)
        if not b > a:
            raise DegenerateInterval(f"initial endpoints give t0 = {a:.6g} >= t1 = {b:.6g}")
        slope = (yb - ya) / (b - a)
        for k, (g, s) in enumerate(((self.gamma0, self.sigma0), (self.gamma1, self.sigma1))):
            if g.is_degenerate:
                continue
            dt, dy = (float(v) for v in g.derivative(s))
            if abs(dy - slope * dt) <= 1e-9 * math.hypot(dt, dy):
                raise ValueError(f"initial graph is tangent to gamma{k} at its endpoint")

    def _check_disjoint(self, samples: int = 64):
        s0 = np.linspace(*self.gamma0.param_range, samples)
        s1 = np.linspace(*self.gamma1.param_range, samples)
        p0 = np.stack(self.gamma0(s0), axis=-1)
        p1 = np.stack(self.gamma1(s1), axis=-1)
        d = np.linalg.norm(p0[:, None, :] - p1[None, :, :], axis=-1)
        if d.min() < 1e-9:
            raise ValueError("boundary curves intersect on their parameter ranges")

    def endpoint(self, k: int, sigma: float):
        g = self.gamma1 if k else self.gamma0
        t, y = g(sigma)
        return float(t), float(y)

    @property
    def free(self) -> tuple:
        """Which endpoint parameters are unknowns (degenerate curves are pinned)."""
        return (not self.gamma0.is_degenerate, not self.gamma1.is_degenerate)


@dataclass
class DiscreteSolution1D:
    N: int
    sigma0: float
    sigma1: float
    t: np.ndarray
    y: np.ndarray
    action: float
    iterations: int = 0
    grad_norm: float = math.nan
    converged: bool = False
    history: list = field(default_factory=list)

    @property
    def interior(self) -> np.ndarray:
        return self.y[1:-1]

    @property
    def h(self) -> float:
        return float(self.t[1] - self.t[0])

    def slopes(self) -> np.ndarray:
        """Node derivatives: centered inside, second-order one-sided at the ends."""
        return np.gradient(self.y, self.t, edge_order=2)


class DiscreteAction:
    """Midpoint-rule action as a function of z = (free sigmas, interior values)."""

    def __init__(self, problem: Problem1D, N: int):
        if N < MIN_NODES:
            raise ValueError(f"need N >= {MIN_NODES} intervals, got {N}")
        self.p = problem
        self.N = N
        dens = problem.L.density
        self._L = dens
        self._Lt = diff_partial(dens, T)
        self._Ly = diff_partial(dens, Y)
        self._Lp = diff_partial(dens, P)
        self._free = problem.free
        self.nsig = sum(self._free)

    # -- packing -----------------------------------------------------------
    def pack(self, sigma0: float, sigma1: float, interior) -> np.ndarray:
        sig = [s for s, f in zip((sigma0, sigma1), self._free) if f]
        return np.concatenate([np.asarray(sig, dtype=float), np.asarray(interior, dtype=float)])

    def sigmas(self, z) -> tuple:
        it = iter(z[: self.nsig])
        s0 = float(next(it)) if self._free[0] else self.p.sigma0
        s1 = float(next(it)) if self._free[1] else self.p.sigma1
        return s0, s1

    def grid(self, z):
        s0, s1 = self.sigmas(z)
        a, ya = self.p.endpoint(0, s0)
        b, yb = self.p.endpoint(1, s1)
        if not b - a > 1e-12 * (1 + abs(a) + abs(b)):
            raise DegenerateInterval(f"endpoint abscissas crossed: t0 = {a:.6g}, t1 = {b:.6g}")
        t = np.linspace(a, b, self.N + 1)
        y = np.concatenate([[ya], z[self.nsig :], [yb]])
        return s0, s1, t, y

    def initial(self) -> np.ndarray:
        p = self.p
        a, ya = p.endpoint(0, p.sigma0)
        b, yb = p.endpoint(1, p.sigma1)
        t = np.linspace(a, b, self.N + 1)[1:-1]
        if p.initial is None:
            inner = ya + (yb - ya) * (t - a) / (b - a)
        else:
            inner = np.asarray(p.initial(t), dtype=float)
        return self.pack(p.sigma0, p.sigma1, inner)

    def solution(self, z, **info) -> DiscreteSolution1D:
        s0, s1, t, y = self.grid(z)
        return DiscreteSolution1D(self.N, s0, s1, t, y, self(z), **info)

    # -- evaluation --------------------------------------------------------
    def _cells(self, t, y):
        h = t[1] - t[0]
        env = {T: 0.5 * (t[:-1] + t[1:]), Y: 0.5 * (y[:-1] + y[1:]), P: np.diff(y) / h}
        return h, env

    def _eval(self, e, env):
        vals, ok = evaluate_many(e, env)
        vals = np.broadcast_to(vals, (self.N,))
        if not np.all(ok):
            return np.full(self.N, np.nan)
        return vals

    def __call__(self, z) -> float:
        _, _, t, y = self.grid(np.asarray(z, dtype=float))
        h, env = self._cells(t, y)
        return float(h * np.sum(self._eval(self._L, env)))

    def gradient(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        s0, s1, t, y = self.grid(z)
        N = self.N
        h, env = self._cells(t, y)
        L = self._eval(self._L, env)
        Lt = self._eval(self._Lt, env)
        Ly = self._eval(self._Ly, env)
        Lp = self._eval(self._Lp, env)
        slope = env[P]

        # dS/dY_k for every node k = 0..N
        gY = np.zeros(N + 1)
        gY[:-1] += h * 0.5 * Ly - Lp
        gY[1:] += h * 0.5 * Ly + Lp

        # explicit dependence on the endpoint abscissas a and b
        frac = (np.arange(N) + 0.5) / N
        common = L - slope * Lp  # d(h L)/dh at fixed t-mid and nodes, per cell
        ga = -common.sum() / N + h * np.sum(Lt * (1 - frac))
        gb = common.sum() / N + h * np.sum(Lt * frac)

        out = []
        if self._free[0]:
            dt, dy = (float(v) for v in self.p.gamma0.derivative(s0))
            out.append(ga * dt + gY[0] * dy)
        if self._free[1]:
            dt, dy = (float(v) for v in self.p.gamma1.derivative(s1))
            out.append(gb * dt + gY[-1] * dy)
        return np.concatenate([out, gY[1:-1]])


def discretize_action(p: Problem1D, N: int) -> DiscreteAction:
    """Differentiable discrete action over (sigma0, sigma1, interior values)."""
    return DiscreteAction(p, N)


def _hessian(S: DiscreteAction, z, g0=None) -> np.ndarray:
    """Finite-difference Hessian of the analytic gradient, using its sparsity.

    Interior values couple only to their neighbours and to the sigmas, so three
    colour classes plus one column per free sigma suffice.
    """
    n = z.size
    k = S.nsig
    H = np.zeros((n, n))

    def dgrad(d):
        eps = 1e-6 * (1 + np.max(np.abs(z)))
        return (S.gradient(z + eps * d) - S.gradient(z - eps * d)) / (2 * eps)

    for c in range(k):
        e = np.zeros(n)
        e[c] = 1.0
        H[:, c] = dgrad(e)
    m = n - k
    for colour in range(3):
        cols = np.arange(colour, m, 3)
        if cols.size == 0:
            continue
        d = np.zeros(n)
        d[k + cols] = 1.0
        col = dgrad(d)
        for i in range(m):
            for j in (i - 1, i, i + 1):
                if 0 <= j < m and j % 3 == colour:
                    H[k + i, k + j] = col[k + i]
    H[:k, k:] = H[k:, :k].T
    return 0.5 * (H + H.T)


def minimize_1d(p: Problem1D, N: int = 200, gtol: float = 1e-9, max_iter: int = 200, z0=None) -> DiscreteSolution1D:
    """Damped Newton iteration until the gradient sup-norm is <= gtol.

    The Hessian comes from finite differences of the analytic gradient; it is
    shifted toward the identity when not positive definite, and steps are
    backtracked so that the action decreases and the interval stays proper.
    """
    S = discretize_action(p, N)
    z = S.initial() if z0 is None else np.asarray(z0, dtype=float)
    f = S(z)
    g = S.gradient(z)
    history = [f]
    for it in range(max_iter):
        gn = float(np.max(np.abs(g)))
        if not math.isfinite(gn):
            raise NonConvergence("gradient is not finite", S.solution(z, iterations=it))
        if gn <= gtol:
            return S.solution(z, iterations=it, grad_norm=gn, converged=True, history=history)
        H = _hessian(S, z)
        shift = 0.0
        scale = max(1e-12, float(np.max(np.abs(np.diag(H)))))
        while True:
            try:
                C = np.linalg.cholesky(H + shift * np.eye(z.size))
                break
            except np.linalg.LinAlgError:
                shift = max(2 * shift, 1e-8 * scale)
        step = -np.linalg.solve(C.T, np.linalg.solve(C, g))
        slope = float(g @ step)
        lam = 1.0
        accepted = False
        for _ in range(60):
            zn = z + lam * step
            try:
                fn = S(zn)
                gnew = S.gradient(zn)
            except DegenerateInterval:
                lam *= 0.5
                continue
            if math.isfinite(fn) and np.all(np.isfinite(gnew)):
                if fn <= f + 1e-4 * lam * slope:
                    accepted = True
                elif abs(fn - f) <= 1e-13 * (1 + abs(f)) and np.max(np.abs(gnew)) < gn:
                    # decrease is below rounding; judge by the gradient instead
                    accepted = True
            if accepted:
                break
            lam *= 0.5
        if not accepted:
            raise NonConvergence(
                f"line search failed at iteration {it} (gradient norm {gn:.3e})",
                S.solution(z, iterations=it, grad_norm=gn, history=history),
            )
        z, f, g = zn, fn, gnew
        history.append(f)
    gn = float(np.max(np.abs(g)))
    if gn <= gtol:
        return S.solution(z, iterations=max_iter, grad_norm=gn, converged=True, history=history)
    raise NonConvergence(
        f"no convergence in {max_iter} iterations (gradient norm {gn:.3e})",
        S.solution(z, iterations=max_iter, grad_norm=gn, history=history),
    )


def _direction(S: DiscreteAction, sol: DiscreteSolution1D, xi, X0, X1) -> np.ndarray:
    inner = sol.t[1:-1]
    xi = np.zeros(inner.size) if xi is None else (np.asarray(xi(inner) if callable(xi) else xi, dtype=float))
    if xi.shape != inner.shape:
        raise ValueError(f"variation needs {inner.size} interior values")
    return S.pack(X0, X1, xi)


def first_variation(p: Problem1D, sol: DiscreteSolution1D, xi=None, X0: float = 0.0, X1: float = 0.0, eps: float = 1e-4) -> float:
    """Central difference (S[z + eps d] - S[z - eps d]) / (2 eps) along d = (X0, X1, xi).

    ``xi`` is an array of interior values or a callable of t; X0 and X1 are the
    speeds of the endpoint parameters (ignored for pinned endpoints).
    """
    S = discretize_action(p, sol.N)
    z = S.pack(sol.sigma0, sol.sigma1, sol.interior)
    d = _direction(S, sol, xi, X0, X1)
    return (S(z + eps * d) - S(z - eps * d)) / (2 * eps)


def _jets(sol: DiscreteSolution1D):
    t, y, h = sol.t, sol.y, sol.h
    yp = np.gradient(y, t, edge_order=2)
    ypp = np.zeros_like(y)
    ypp[1:-1] = (y[2:] - 2 * y[1:-1] + y[:-2]) / h**2
    return yp, ypp


def check_residuals_1d(p: Problem1D, sol: DiscreteSolution1D) -> dict:
    """Euler-Lagrange residual at interior nodes and transversality residuals at the ends.

    Derivatives are finite differences on the grid (centered inside, second-order
    one-sided at the endpoints); pinned endpoints report a zero residual.
    """
    el = euler_lagrange(p.L)[0]
    yp, ypp = _jets(sol)
    env = {T: sol.t[1:-1], Y: sol.y[1:-1], P: yp[1:-1], Q: ypp[1:-1]}
    vals, _ = evaluate_many(el, env)
    report = {"el_residual_max": float(np.max(np.abs(np.broadcast_to(vals, sol.t[1:-1].shape))))}
    for k, (g, s, idx) in enumerate(((p.gamma0, sol.sigma0, 0), (p.gamma1, sol.sigma1, -1))):
        if g.is_degenerate:
            report[f"transversality_residual_{k}"] = 0.0
            continue
        tv = transversality_1d(p.L, g, s)
        v, _ = evaluate_many(tv, {T: sol.t[idx], Y: sol.y[idx], P: yp[idx]})
        report[f"transversality_residual_{k}"] = float(abs(v))
    report["expected_scale"] = sol.h**2 + sol.grad_norm / sol.h
    report["N"] = sol.N
    return report


def incidence_angles(p: Problem1D, sol: DiscreteSolution1D) -> tuple:
    """Angles in degrees between the graph tangent and each boundary curve at the endpoints."""
    yp, _ = _jets(sol)
    out = []
    for g, s, idx in ((p.gamma0, sol.sigma0, 0), (p.gamma1, sol.sigma1, -1)):
        if g.is_degenerate:
            out.append(math.nan)
            continue
        dt, dy = (float(v) for v in g.derivative(s))
        c = (dt + dy * yp[idx]) / (math.hypot(dt, dy) * math.hypot(1.0, yp[idx]))
        out.append(math.degrees(math.acos(max(-1.0, min(1.0, c)))))
    return tuple(out)


def graph_length(sol: DiscreteSolution1D) -> float:
    return float(np.sum(np.hypot(np.diff(sol.t), np.diff(sol.y))))
