"""Command-line front end.

    natbc derive    problem.toml   Euler-Lagrange equations and natural boundary conditions
    natbc transform problem.toml   pulled-back Lagrangian and a naturality report
    natbc solve     problem.toml   numerical solution (sliding endpoints or soap film)
    natbc selftest  [problem.toml] invariant checks of every module

Exit codes: 0 success, 1 selftest failure, 2 problem-file or usage error,
3 numerical non-convergence.  The problem-file schema is documented in README.md.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import variational
from .contact import (
    BoundaryCurve,
    BoundaryHypersurface,
    NotBoundaryFriendly,
    PointTransformation,
    SingularLift,
    generalized_transversality,
    source_space,
    verify_naturality,
)
from .jet import Lagrangian, ParseError, diff_partial, equivalent, evaluate_many, parse, restrict_to_boundary, total_derivative
from .jet.evaluate import DEFAULT_SEED, DEFAULT_TOL
from .jet.expr import ONE, ZERO, Dep, Indep, add, mul, power
from .jet.space import JetNameError, OrderCapError
from .solver import (
    FilmMesh,
    FilmSettings,
    MeshDegeneration,
    NonConvergence,
    Problem1D,
    check_film_orthogonality,
    check_residuals_1d,
    film_columns,
    graph_length,
    incidence_angles,
    minimize_1d,
    relax_film,
    solution_columns,
    write_csv,
    write_json,
)
from .solver.onedim import DegenerateInterval
from .variational import CurvedBoundaryError, natural_boundary_conditions

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_FAIL, EXIT_SPEC, EXIT_NONCONVERGED = 0, 1, 2, 3


class SpecError(ValueError):
    """The problem file is malformed or inconsistent."""


# ---------------------------------------------------------------- problem file


class ProblemSpec:
    """Parsed problem file: Lagrangian, boundary, optional transformation and solver settings."""

    def __init__(self, data: dict):
        self.data = data
        lag = data.get("lagrangian")
        if not isinstance(lag, dict) or "density" not in lag:
            raise SpecError("missing [lagrangian] table with a 'density' string")
        self.n = int(lag.get("n", 1))
        self.m = int(lag.get("m", 1))
        self.r = int(lag.get("r", 1))
        names = {k: tuple(lag[k]) for k in ("indep", "dep") if k in lag}
        if "cap" in lag:
            names["cap"] = int(lag["cap"])
        self.lagrangian = Lagrangian.parse(str(lag["density"]), self.n, self.m, self.r, **names)
        self.boundary_table = data.get("boundary", {"kind": "flat"})
        self.kind = str(self.boundary_table.get("kind", "flat")).lower()
        if self.kind not in ("flat", "none", "curves", "level_set"):
            raise SpecError(f"unknown boundary kind {self.kind!r} (flat, curves or level_set)")
        if self.kind == "curves" and self.n != 1:
            raise SpecError("boundary curves need n = 1")
        self.transformation_table = data.get("transformation")
        self.solver_table = data.get("solver")

    @classmethod
    def load(cls, path) -> "ProblemSpec":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise SpecError(f"cannot read {path}: {exc.strerror}") from None
        except tomllib.TOMLDecodeError as exc:
            raise SpecError(f"{path}: {exc}") from None
        return cls(data)

    @property
    def is_flat(self) -> bool:
        return self.kind in ("flat", "none")

    def _curve(self, k: int) -> BoundaryCurve:
        b = self.boundary_table
        key = f"gamma{k}"
        if key not in b:
            raise SpecError(f"[boundary] needs {key}")
        g = b[key]
        rng = tuple(b.get(f"range{k}", (-1.0, 1.0)))
        if isinstance(g, dict) and "point" in g:
            t0, y0 = g["point"]
            return BoundaryCurve.point(float(t0), float(y0))
        if not (isinstance(g, list) and len(g) == 2):
            raise SpecError(f"{key} must be two strings [t(s), y(s)] or {{point = [t, y]}}")
        return BoundaryCurve.parse(str(g[0]), str(g[1]), rng, key)

    def curves(self):
        return self._curve(0), self._curve(1)

    def hypersurface(self) -> BoundaryHypersurface:
        phi = self.boundary_table.get("phi")
        if not isinstance(phi, str):
            raise SpecError("level_set boundary needs a 'phi' string")
        return BoundaryHypersurface.parse_level_set(self.n, phi)

    def transformation(self) -> PointTransformation:
        t = self.transformation_table
        if not isinstance(t, dict) or "components" not in t:
            raise SpecError("missing [transformation] table with 'components'")
        if "inverse" not in t:
            raise SpecError("the transformation needs its 'inverse' components (no symbolic inversion)")
        F = PointTransformation.parse(self.n, t["components"], t["inverse"])
        err = F.check_inverse()
        if err > 1e-8:
            raise SpecError(f"inverse does not round-trip (error {err:.3e})")
        return F


# -------------------------------------------------------------------- commands


def _label(m: int, j: int) -> str:
    return f"[{j}]" if m > 1 else ""


def derive_lines(spec: ProblemSpec) -> list:
    L = spec.lagrangian
    if not spec.is_flat:
        raise CurvedBoundaryError(
            "derive handles the flat boundary x_n = 0 only; use 'natbc transform' with a flattening transformation"
        )
    sp = variational.boundary_space(L)
    lines = [f"L = {L}"]
    for j, e in enumerate(variational.euler_lagrange(L)):
        lines.append(f"EL{_label(L.m, j)}: {sp.format(e)} = 0")
    for (j, a), e in natural_boundary_conditions(L).items():
        tag = f"{j}, α={a}" if L.m > 1 else f"α={a}"
        lines.append(f"NBC[{tag}]: {sp.format(e)} = 0")
    return lines


def cmd_derive(spec: ProblemSpec, args) -> int:
    lines = derive_lines(spec)
    print("\n".join(lines))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "equations.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_transform(spec: ProblemSpec, args) -> int:
    F = spec.transformation()
    L = spec.lagrangian
    if spec.kind == "curves":
        boundary = spec.curves()[0]
    elif spec.kind == "level_set":
        boundary = spec.hypersurface()
    else:
        boundary = None
    rep = verify_naturality(L, F, boundary, samples=int(args.samples), seed=args.seed)
    tol = args.tol
    tgt = rep.transformed.space
    nbc = natural_boundary_conditions(rep.transformed)
    lines = [f"L~ = {rep.transformed}"]
    for (j, a), e in nbc.items():
        lines.append(f"NBC[α={a}]: {tgt.format(e)} = 0")
    lines.append(
        f"naturality: max discrepancy {rep.max_discrepancy:.3e}, scaled {rep.max_scaled_discrepancy:.3e} "
        f"over {rep.samples} samples (tol {tol:g}): {'PASS' if rep.passed(tol) else 'FAIL'}"
    )
    print("\n".join(lines))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "equations.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        write_json(
            out / "report.json",
            {
                "transformed": str(rep.transformed),
                "samples": rep.samples,
                "max_discrepancy": rep.max_discrepancy,
                "max_scaled_discrepancy": rep.max_scaled_discrepancy,
                "max_normal_angle_deg": rep.max_normal_angle_deg,
                "max_boundary_residual": rep.max_boundary_residual,
                "tol": tol,
                "passed": rep.passed(tol),
            },
        )
    return EXIT_OK if rep.passed(tol) else EXIT_FAIL


def _initial_function(spec: ProblemSpec, key: str, n: int):
    text = (spec.solver_table or {}).get(key)
    if text is None:
        return None
    e = spec.lagrangian.space.with_order(0, 0).parse(str(text)) if n == 1 else source_space(2, 0).parse(str(text))

    def f(*coords):
        env = {Indep(i): np.asarray(c, dtype=float) for i, c in enumerate(coords)}
        v, ok = evaluate_many(e, env)
        return np.broadcast_to(v, np.shape(coords[0])) + 0.0

    return f


def _solve_1d(spec: ProblemSpec, args):
    s = spec.solver_table
    g0, g1 = spec.curves()
    b = spec.boundary_table
    p = Problem1D(
        spec.lagrangian, g0, g1, float(b.get("sigma0", 0.0)), float(b.get("sigma1", 0.0)), _initial_function(spec, "initial", 1)
    )
    N = int(s.get("N", 200))
    gtol = float(s.get("gtol", 1e-9))
    try:
        sol = minimize_1d(p, N, gtol=gtol, max_iter=int(s.get("max_iter", 200)))
        status = EXIT_OK
    except NonConvergence as exc:
        if exc.solution is None:
            raise
        sol, status = exc.solution, EXIT_NONCONVERGED
        print(f"not converged: {exc}", file=sys.stderr)
    res = check_residuals_1d(p, sol)
    a0, a1 = incidence_angles(p, sol)
    report = {
        "kind": "sliding_endpoints",
        "converged": sol.converged,
        "iterations": sol.iterations,
        "gradient_norm": sol.grad_norm,
        "action": sol.action,
        "sigma0": sol.sigma0,
        "sigma1": sol.sigma1,
        "length": graph_length(sol),
        "incidence_angle_deg_0": a0,
        "incidence_angle_deg_1": a1,
        **res,
    }
    return report, solution_columns(sol), status


def _solve_film(spec: ProblemSpec, args):
    L = spec.lagrangian
    area = Lagrangian.parse("sqrt(1 + u_x^2 + u_y^2)", 2, 1, 1)
    if L.n != 2 or L.r != 1 or not equivalent(L.density, area.density, seed=args.seed):
        raise SpecError("the film solver handles the area functional sqrt(1 + |grad y|^2) with n = 2")
    s = spec.solver_table
    nr, nt = (int(v) for v in s.get("mesh", (64, 64)))
    wall = spec.hypersurface()
    init = _initial_function(spec, "initial", 2) or 0.0
    mesh = FilmMesh.create(wall, nr, nt, height=init, radius_guess=float(s.get("radius_guess", 1.0)))
    settings = FilmSettings(max_iter=int(s.get("max_iter", 20000)), rel_tol=float(s.get("rel_tol", 1e-10)))
    start = check_film_orthogonality(mesh)
    try:
        out = relax_film(mesh, settings)
        status = EXIT_OK
    except NonConvergence as exc:
        out, status = exc.solution, EXIT_NONCONVERGED
        print(f"not converged: {exc}", file=sys.stderr)
    orth = check_film_orthogonality(out)
    report = {
        "kind": "film",
        "converged": out.converged,
        "iterations": out.iterations,
        "area": out.area(),
        "initial_area": mesh.area(),
        "height_std": out.height_std(),
        "height_mean": float(np.mean(out.heights)),
        "wall_residual": out.wall_residual(),
        "initial_max_angle_deviation_deg": start["max_angle_deviation_deg"],
        **orth,
    }
    return report, film_columns(out), status


def cmd_solve(spec: ProblemSpec, args) -> int:
    if spec.solver_table is None:
        raise SpecError("missing [solver] table")
    if spec.kind == "curves":
        report, cols, status = _solve_1d(spec, args)
    elif spec.kind == "level_set":
        report, cols, status = _solve_film(spec, args)
    else:
        raise SpecError("solve needs boundary curves (n = 1) or a level-set pipe wall (n = 2)")
    width = max(len(k) for k in report)
    for k, v in report.items():
        print(f"{k:<{width}}  {v:.6g}" if isinstance(v, float) else f"{k:<{width}}  {v}")
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "solution.csv", cols)
    write_json(out / "report.json", report)
    return status


# ------------------------------------------------------------------- selftest


def _check_divergence(rng, tol, seed):
    dens = ["u*u_x^2", "sin(u)*x", "u_x^3 + x*u", "exp(u)*u_x", "u^2*x^3/(1 + u_x^2)"]
    for d in dens:
        f = parse(d, n=1, r=1)
        L = Lagrangian(1, 1, 2, total_derivative(f, 0))
        el = variational.euler_lagrange(L)[0]
        if not equivalent(el, ZERO, tol=tol, seed=seed):
            return False, f"E(D_x({d})) is not zero"
    return True, "Euler-Lagrange annihilates total divergences"


def _check_classical(rng, tol, seed):
    for d in ["sqrt(1 + u_x^2 + u_y^2)", "x*u_y^2/2 + sin(u)*u_x", "u^2*u_y + u_x*u_y"]:
        L = Lagrangian.parse(d, n=2, r=1)
        nbc = natural_boundary_conditions(L)[(0, 0)]
        expect = restrict_to_boundary(diff_partial(L.density, Dep(0, (0, 1))), 2)
        if not equivalent(nbc, expect, tol=tol, seed=seed):
            return False, f"NBC of {d} differs from dL/du_n on the boundary"
    L = Lagrangian.parse("u_xx^2/2 + u*u_x", n=1, r=2)
    nbc = natural_boundary_conditions(L)
    d1 = diff_partial(L.density, Dep(0, (1,)))
    d2 = diff_partial(L.density, Dep(0, (2,)))
    e0 = add(d1, mul(-1, total_derivative(d2, 0)))
    e0 = restrict_to_boundary(e0, 1)
    e1 = restrict_to_boundary(d2, 1)
    if not (equivalent(nbc[(0, 0)], e0, tol=tol, seed=seed) and equivalent(nbc[(0, 1)], e1, tol=tol, seed=seed)):
        return False, "second-order NBC differ from the classical free-end conditions"
    return True, "natural boundary conditions reduce to the classical forms"


def _check_relative(rng, tol, seed):
    for d, n, r in [("u_xx*u_y + x*u_yy^2", 2, 2), ("u_x*u_y*u + sin(u_y)", 2, 1), ("u_xx^3 + u*u_x", 1, 2)]:
        L = Lagrangian.parse(d, n=n, r=r)
        nbc = natural_boundary_conditions(L)
        rel = variational.relative_euler(variational.lagrangian_operator(L)).boundary
        for key, e in nbc.items():
            if not equivalent(e, rel.get(key, ZERO), tol=tol, seed=seed):
                return False, f"boundary operator and NBC differ for {d} at {key}"
    return True, "NBC agree with the relative boundary operator"


def _check_naturality(rng, tol, seed):
    L = Lagrangian.parse("sqrt(1 + y_t^2)", 1, 1, 1, indep=("t",), dep=("y",))
    theta = 0.6
    F = PointTransformation.rotation(theta)
    gamma = BoundaryCurve.parse(f"{math.cos(theta)!r}*s", f"{math.sin(theta)!r}*s")
    rep = verify_naturality(L, F, gamma, samples=100, seed=seed)
    if not rep.passed(tol):
        return False, f"rotation naturality discrepancy {rep.max_scaled_discrepancy:.3e}"
    shear = PointTransformation.parse(1, ("t - y^2", "y"), ("x + u^2", "u"))
    rep = verify_naturality(L, shear, BoundaryCurve.parse("s^2", "s"), samples=100, seed=seed)
    if not rep.passed(tol):
        return False, f"parabola naturality discrepancy {rep.max_scaled_discrepancy:.3e}"
    return True, "flattened NBC match transversality in original coordinates"


def _check_area(rng, tol, seed):
    for n in (1, 2, 3):
        names = ("t",) if n == 1 else tuple(f"t{i + 1}" for i in range(n))
        grads = " + ".join(f"y_{v}^2" for v in names)
        L = Lagrangian.parse(f"sqrt(1 + {grads})", n, 1, 1, indep=names, dep=("y",))
        H = generalized_transversality(L)
        norm2 = add(*(power(h, 2) for h in H))
        if not equivalent(norm2, ONE, tol=tol, seed=seed):
            return False, f"|H| != 1 for the area Lagrangian, n = {n}"
    return True, "|H| = 1 for the area Lagrangian"


def _check_solver(rng, tol, seed):
    L = Lagrangian.parse("y_t^2/2 + y", 1, 1, 1, indep=("t",), dep=("y",))
    p = Problem1D(L, BoundaryCurve.point(0.0, 0.0), BoundaryCurve.vertical_line(1.0), 0.0, 0.5)
    sol = minimize_1d(p, 64)
    err = float(np.max(np.abs(sol.y - (sol.t**2 / 2 - sol.t))))
    if err > 5e-3 or abs(sol.slopes()[-1]) > 1e-3:
        return False, f"loaded string error {err:.3e}"
    return True, "loaded string reaches y = t^2/2 - t with a free right end"


SELFTESTS = [_check_divergence, _check_classical, _check_relative, _check_naturality, _check_area, _check_solver]


def run_selftest(tol=DEFAULT_TOL, seed=DEFAULT_SEED, mutate: bool = False, stream=sys.stdout) -> bool:
    """Run every invariant check; ``mutate`` flips the boundary sign convention first."""
    original = variational._sign
    if mutate:
        variational._sign = lambda k: original(k + 1)
    ok = True
    rng = np.random.default_rng(seed)
    try:
        for check in SELFTESTS:
            t0 = time.perf_counter()
            try:
                passed, msg = check(rng, tol, seed)
            except Exception as exc:  # a crash counts as a failure of that check
                passed, msg = False, f"{type(exc).__name__}: {exc}"
            ok &= passed
            print(f"{'PASS' if passed else 'FAIL'}  {check.__name__[7:]:<12} {msg} ({time.perf_counter() - t0:.2f}s)", file=stream)
    finally:
        variational._sign = original
    return ok


def cmd_selftest(spec, args) -> int:
    ok = run_selftest(args.tol, args.seed, args.mutate)
    if spec is not None:
        try:
            if spec.is_flat:
                derive_lines(spec)
        except Exception as exc:
            print(f"FAIL  problem-file {exc}")
            ok = False
    print("selftest " + ("passed" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_FAIL


# ------------------------------------------------------------------------ main


COMMANDS = {"derive": cmd_derive, "transform": cmd_transform, "solve": cmd_solve, "selftest": cmd_selftest}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="natbc", description="Natural boundary conditions for free-boundary variational problems.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("spec", nargs="?", help="problem file (TOML); optional for selftest")
    ap.add_argument("--out", help="output directory for equations.txt, solution.csv, report.json")
    ap.add_argument("--tol", type=float, default=DEFAULT_TOL, help="tolerance of randomized identity checks")
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed of the random sampling")
    ap.add_argument("--samples", type=int, default=100, help="boundary samples for the naturality report")
    ap.add_argument("--mutate", action="store_true", help=argparse.SUPPRESS)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SPEC if exc.code else EXIT_OK
    try:
        if args.spec is None and args.command != "selftest":
            raise SpecError(f"'{args.command}' needs a problem file")
        spec = ProblemSpec.load(args.spec) if args.spec else None
        return COMMANDS[args.command](spec, args)
    except (SpecError, ParseError, JetNameError, OrderCapError, CurvedBoundaryError, NotBoundaryFriendly, SingularLift, DegenerateInterval) as exc:
        print(f"natbc: error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except ValueError as exc:
        print(f"natbc: error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (NonConvergence, MeshDegeneration) as exc:
        print(f"natbc: not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
