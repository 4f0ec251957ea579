"""Soap films spanning a pipe, written as height graphs y(t1, t2).

The pipe is a level set Phi(t1, t2, y) = 0 around the y axis, crossed by every
horizontal ray from the axis exactly once near the film.  The mesh is polar: a
centre node plus ``nr`` rings of ``ntheta`` nodes.  Heights are the unknowns.
The boundary node on spoke j sits at radius rho_j solving
Phi(rho cos th_j, rho sin th_j, y_j) = 0, and ring i of that spoke sits at
radius (i / nr) rho_j, so boundary nodes always lie on the wall.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..contact import BoundaryHypersurface
from ..jet import diff_partial, evaluate_many
from ..jet.expr import Dep, Indep
from .onedim import NonConvergence

WALL_TOL = 1e-8


class MeshDegeneration(RuntimeError):
    """A cell would be inverted or collapsed."""


def _triangles(nr: int, nt: int) -> np.ndarray:
    def node(i, j):
        return 0 if i == 0 else 1 + (i - 1) * nt + (j % nt)

    tris = [(0, node(1, j), node(1, j + 1)) for j in range(nt)]
    for i in range(1, nr):
        for j in range(nt):
            a, b = node(i, j), node(i, j + 1)
            c, d = node(i + 1, j), node(i + 1, j + 1)
            tris.append((a, c, d))
            tris.append((a, d, b))
    return np.array(tris, dtype=np.intp)


class Wall:
    """Numeric view of a pipe wall Phi(t1, t2, y) = 0."""

    def __init__(self, surface: BoundaryHypersurface):
        if surface.n != 2 or surface.level_set is None:
            raise ValueError("the film solver needs a level-set wall in (t1, t2, y)")
        self.surface = surface
        phi = surface.level_set
        self._vars = (Indep(0), Indep(1), Dep(0, (0, 0)))
        self._phi = phi
        self._grad = tuple(diff_partial(phi, v) for v in self._vars)

    def _env(self, p):
        return {v: p[..., k] for k, v in enumerate(self._vars)}

    def phi(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        v, _ = evaluate_many(self._phi, self._env(p))
        return np.broadcast_to(v, p.shape[:-1]) + 0.0

    def gradient(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        env = self._env(p)
        return np.stack([np.broadcast_to(evaluate_many(g, env)[0], p.shape[:-1]) for g in self._grad], axis=-1)

    def radius(self, theta, y, guess) -> np.ndarray:
        """Radii with Phi(rho cos th, rho sin th, y) = 0 by vectorized Newton."""
        c, s = np.cos(theta), np.sin(theta)
        rho = np.array(guess, dtype=float)
        for _ in range(50):
            p = np.stack([rho * c, rho * s, y], axis=-1)
            f = self.phi(p)
            g = self.gradient(p)
            fr = g[:, 0] * c + g[:, 1] * s
            step = f / fr
            rho = rho - step
            if np.all(np.abs(step) <= 1e-14 * (1 + np.abs(rho))):
                break
        p = np.stack([rho * c, rho * s, y], axis=-1)
        if not np.all(np.isfinite(rho)) or np.any(rho <= 0) or np.max(np.abs(self.phi(p))) > WALL_TOL:
            raise MeshDegeneration("could not place boundary nodes on the wall")
        return rho

    def radius_slope(self, theta, rho, y) -> np.ndarray:
        """d rho / d y along the wall at fixed angle: -Phi_y / Phi_rho."""
        c, s = np.cos(theta), np.sin(theta)
        g = self.gradient(np.stack([rho * c, rho * s, y], axis=-1))
        return -g[:, 2] / (g[:, 0] * c + g[:, 1] * s)


@dataclass
class FilmMesh:
    wall: BoundaryHypersurface
    nr: int
    ntheta: int
    heights: np.ndarray
    rho: np.ndarray
    iterations: int = 0
    converged: bool = False
    history: list = field(default_factory=list)

    @classmethod
    def create(cls, wall: BoundaryHypersurface, nr: int = 64, ntheta: int = 64, height=0.0, radius_guess=1.0) -> "FilmMesh":
        """Mesh with initial heights ``height(t1, t2)`` (callable or constant).

        Boundary heights and radii are made consistent by a few alternating
        passes of wall projection and height evaluation.
        """
        if nr < 2 or ntheta < 3:
            raise ValueError("need nr >= 2 and ntheta >= 3")
        theta = 2 * np.pi * np.arange(ntheta) / ntheta
        w = Wall(wall)
        hfun = height if callable(height) else (lambda t1, t2: np.full(np.shape(t1), float(height)))
        rho = np.full(ntheta, float(radius_guess))
        for _ in range(100):
            yb = np.asarray(hfun(rho * np.cos(theta), rho * np.sin(theta)), dtype=float)
            new = w.radius(theta, yb, rho)
            if np.max(np.abs(new - rho)) < 1e-14:
                rho = new
                break
            rho = new
        frac = np.arange(1, nr + 1) / nr
        r = frac[:, None] * rho[None, :]
        X = np.concatenate([[0.0], (r * np.cos(theta)).ravel()])
        Y = np.concatenate([[0.0], (r * np.sin(theta)).ravel()])
        heights = np.asarray(hfun(X, Y), dtype=float) + np.zeros(X.shape)
        heights[cls._boundary_slice(nr, ntheta)] = yb
        return cls(wall, nr, ntheta, heights, rho)

    @staticmethod
    def _boundary_slice(nr, nt):
        return slice(1 + (nr - 1) * nt, 1 + nr * nt)

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.ntheta) / self.ntheta

    @property
    def boundary(self) -> np.ndarray:
        s = self._boundary_slice(self.nr, self.ntheta)
        return np.arange(s.start, s.stop)

    @property
    def triangles(self) -> np.ndarray:
        return _triangles(self.nr, self.ntheta)

    def positions(self, heights=None, rho=None) -> np.ndarray:
        heights = self.heights if heights is None else heights
        rho = self.rho if rho is None else rho
        frac = np.arange(1, self.nr + 1) / self.nr
        r = frac[:, None] * rho[None, :]
        th = self.theta
        X = np.concatenate([[0.0], (r * np.cos(th)).ravel()])
        Y = np.concatenate([[0.0], (r * np.sin(th)).ravel()])
        return np.stack([X, Y, heights], axis=-1)

    def area(self) -> float:
        return FilmEnergy(self)(self.heights)[0]

    def wall_residual(self) -> float:
        p = self.positions()[self.boundary]
        return float(np.max(np.abs(Wall(self.wall).phi(p))))

    def height_std(self) -> float:
        return float(np.std(self.heights))


class FilmEnergy:
    """Total triangle area and its gradient with respect to the node heights."""

    def __init__(self, mesh: FilmMesh):
        self.mesh = mesh
        self.wall = Wall(mesh.wall)
        self.tris = mesh.triangles
        self.bnd = mesh.boundary
        self.theta = mesh.theta
        nr, nt = mesh.nr, mesh.ntheta
        # spoke of every non-centre node and its radial fraction
        self.spoke = np.concatenate([[-1], np.tile(np.arange(nt), nr)])
        self.frac = np.concatenate([[0.0], np.repeat(np.arange(1, nr + 1) / nr, nt)])
        self.rho = mesh.rho.copy()

    def geometry(self, heights):
        yb = heights[self.bnd]
        rho = self.wall.radius(self.theta, yb, self.rho)
        pos = self.mesh.positions(heights, rho)
        a, b, c = (pos[self.tris[:, k]] for k in range(3))
        N = np.cross(b - a, c - a)
        if np.any(N[:, 2] <= 0):
            raise MeshDegeneration("inverted cell")
        return rho, pos, N

    def __call__(self, heights):
        rho, pos, N = self.geometry(heights)
        return 0.5 * float(np.sum(np.linalg.norm(N, axis=1))), rho

    def value_and_gradient(self, heights):
        rho, pos, N = self.geometry(heights)
        norm = np.linalg.norm(N, axis=1)
        area = 0.5 * float(norm.sum())
        nhat = N / norm[:, None]
        grad_pos = np.zeros_like(pos)
        for k in range(3):
            p1 = pos[self.tris[:, (k + 1) % 3]]
            p2 = pos[self.tris[:, (k + 2) % 3]]
            np.add.at(grad_pos, self.tris[:, k], 0.5 * np.cross(nhat, p2 - p1))
        g = grad_pos[:, 2].copy()
        # horizontal motion of each spoke follows its boundary radius
        c, s = np.cos(self.theta), np.sin(self.theta)
        radial = np.zeros(self.mesh.ntheta)
        mask = self.spoke >= 0
        np.add.at(radial, self.spoke[mask], self.frac[mask] * (grad_pos[mask, 0] * c[self.spoke[mask]] + grad_pos[mask, 1] * s[self.spoke[mask]]))
        drho = self.wall.radius_slope(self.theta, rho, heights[self.bnd])
        g[self.bnd] += radial * drho
        return area, g, rho


@dataclass
class FilmSettings:
    max_iter: int = 20000
    rel_tol: float = 1e-10
    memory: int = 12
    patience: int = 5
    max_rejections: int = 40


def relax_film(mesh: FilmMesh, settings: FilmSettings | None = None) -> FilmMesh:
    """Minimize the film area by L-BFGS steps with backtracking.

    Boundary nodes stay on the wall exactly (their radius is re-solved for every
    trial height vector).  A step that would invert a cell is rejected and
    halved.  Converged once the relative area decrease stays below
    ``rel_tol`` for ``patience`` consecutive accepted steps.
    """
    st = settings or FilmSettings()
    E = FilmEnergy(mesh)
    y = mesh.heights.astype(float).copy()
    f, g, rho = E.value_and_gradient(y)
    E.rho = rho
    history = [f]
    S, Yv = [], []
    quiet = 0
    for it in range(1, st.max_iter + 1):
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s_k, y_k in reversed(list(zip(S, Yv))):
            a = (s_k @ q) / (y_k @ s_k)
            alphas.append(a)
            q -= a * y_k
        if S:
            q *= (S[-1] @ Yv[-1]) / (Yv[-1] @ Yv[-1])
        for (s_k, y_k), a in zip(zip(S, Yv), reversed(alphas)):
            b = (y_k @ q) / (y_k @ s_k)
            q += (a - b) * s_k
        d = -q
        if g @ d >= 0:
            d = -g
            S.clear()
            Yv.clear()
        lam = 1.0
        inverted = 0
        for _ in range(st.max_rejections):
            yn = y + lam * d
            try:
                fn, gn, rn = E.value_and_gradient(yn)
            except MeshDegeneration:
                inverted += 1
                lam *= 0.5
                continue
            if fn <= f + 1e-4 * lam * (g @ d):
                break
            lam *= 0.5
        else:
            if inverted == st.max_rejections:
                raise MeshDegeneration(f"every trial step inverted a cell at step {it}")
            if quiet:
                # no representable decrease left along a descent direction
                return replace(mesh, heights=y, rho=rho, iterations=it, converged=True, history=history)
            out = replace(mesh, heights=y, rho=rho, iterations=it, converged=False, history=history)
            raise NonConvergence(f"line search failed at step {it}", out)
        s_k, y_k = yn - y, gn - g
        if s_k @ y_k > 1e-16 * np.linalg.norm(s_k) * np.linalg.norm(y_k):
            S.append(s_k)
            Yv.append(y_k)
            if len(S) > st.memory:
                S.pop(0)
                Yv.pop(0)
        decrease = (f - fn) / f
        y, f, g, rho = yn, fn, gn, rn
        E.rho = rho
        history.append(f)
        quiet = quiet + 1 if decrease <= st.rel_tol else 0
        if quiet >= st.patience:
            return replace(mesh, heights=y, rho=rho, iterations=it, converged=True, history=history)
    out = replace(mesh, heights=y, rho=rho, iterations=st.max_iter, converged=False, history=history)
    raise NonConvergence(f"film relaxation did not converge in {st.max_iter} steps", out)


def film_normals(mesh: FilmMesh) -> np.ndarray:
    """Area-weighted vertex normals (sum of unnormalized adjacent cell normals)."""
    pos = mesh.positions()
    tris = mesh.triangles
    a, b, c = (pos[tris[:, k]] for k in range(3))
    N = np.cross(b - a, c - a)
    acc = np.zeros_like(pos)
    for k in range(3):
        np.add.at(acc, tris[:, k], N)
    return acc / np.linalg.norm(acc, axis=1)[:, None]


def check_film_orthogonality(mesh: FilmMesh, wall: BoundaryHypersurface | None = None) -> dict:
    """|angle(film normal, wall normal) - 90 deg| over the boundary nodes."""
    w = Wall(wall or mesh.wall)
    idx = mesh.boundary
    nf = film_normals(mesh)[idx]
    nw = w.gradient(mesh.positions()[idx])
    nw /= np.linalg.norm(nw, axis=1)[:, None]
    cosang = np.clip(np.sum(nf * nw, axis=1), -1.0, 1.0)
    dev = np.abs(np.degrees(np.arccos(cosang)) - 90.0)
    return {"max_angle_deviation_deg": float(dev.max()), "mean_angle_deviation_deg": float(dev.mean())}
