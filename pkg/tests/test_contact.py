import math

import numpy as np
import pytest
from scipy.integrate import quad

from natbc.contact import (
    BoundaryCurve,
    BoundaryHypersurface,
    NotBoundaryFriendly,
    PointTransformation,
    SingularLift,
    boundary_normal,
    cross,
    generalized_transversality,
    lift_first_order,
    pullback_lagrangian,
    source_space,
    target_space,
    total_jacobian,
    transversality_1d,
    transversality_condition,
    verify_naturality,
)
from natbc.jet import Lagrangian, equivalent, evaluate, evaluate_many, simplify, substitute
from natbc.jet.expr import ONE, Constant, Dep, Indep, Var, add, mul, power

T, Y, YP = Indep(0), Dep(0, (0,)), Dep(0, (1,))
S1 = source_space(1)


def src(s):
    return S1.parse(s)


def lagr(s, n=1):
    sp = source_space(n)
    return Lagrangian.parse(s, n, 1, 1, indep=sp.indep, dep=sp.dep)


ARC = lagr("sqrt(1 + y_t^2)")


def rotation(theta):
    return PointTransformation.rotation(theta)


# ---------------------------------------------------------------- lifts


def test_lift_identity():
    lift = lift_first_order(PointTransformation.identity(1))
    assert simplify(lift[YP]) == Var(YP)


def test_lift_swap():
    F = PointTransformation.parse(1, ("y", "t"), ("u", "x"))
    assert equivalent(lift_first_order(F)[YP], src("1/y_t"))


def test_lift_rotation_formula_and_slopes():
    theta = 0.4
    lift = lift_first_order(rotation(theta))[YP]
    c, s = math.cos(theta), math.sin(theta)
    # this rotation maps the direction angle phi of a line to phi + pi/2 - theta
    expect = src(f"({c!r} + {s!r}*y_t)/({-s!r} + {c!r}*y_t)")
    assert equivalent(lift, expect)
    for slope in (-1.5, 0.2, 3.0):
        pts = np.array([[0.0, 0.0], [1.0, slope]])
        img = rotation(theta).apply(pts)
        d = img[1] - img[0]
        assert math.isclose(evaluate(lift, {YP: slope}), d[1] / d[0], rel_tol=1e-12)


def test_lift_rotation_general_form():
    # (-sin + y' cos) / (cos + y' sin) for the rotation of the plane by theta
    theta = 0.7
    c, s = math.cos(theta), math.sin(theta)
    F = PointTransformation.parse(1, (f"{c!r}*t + {s!r}*y", f"{-s!r}*t + {c!r}*y"), (f"{c!r}*x - {s!r}*u", f"{s!r}*x + {c!r}*u"))
    assert equivalent(lift_first_order(F)[YP], src(f"({-s!r} + {c!r}*y_t)/({c!r} + {s!r}*y_t)"))


def test_singular_lift():
    with pytest.raises(SingularLift):
        lift_first_order(PointTransformation.parse(1, ("1", "y"), None))
    with pytest.raises(SingularLift):
        lift_first_order(PointTransformation.parse(2, ("t1 + t2", "t1 + t2", "y"), None))


def test_components_must_be_zero_order():
    with pytest.raises(ValueError):
        PointTransformation(1, (Var(YP), Var(Y)))
    with pytest.raises(ValueError):
        PointTransformation(1, (Var(T),))


def _graph_slopes(F, yfun, dyfun, ts):
    """Slopes du/dx of the image of the graph of y, by the chain rule on the parametrized image."""
    h = 1e-6
    pts = lambda t: F.apply(np.stack([t, yfun(t)], axis=-1))
    d = (pts(ts + h) - pts(ts - h)) / (2 * h)
    return d[:, 1] / d[:, 0]


@pytest.mark.parametrize(
    "comps",
    [("t + 0.3*y^2", "y + 0.2*sin(t)"), ("exp(0.2*y)*t", "y - 0.1*t^2"), ("t - sin(y)", "y")],
)
def test_contact_property_1d(comps):
    F = PointTransformation.parse(1, comps)
    lift = lift_first_order(F)[YP]
    rng = np.random.default_rng(0)
    for _ in range(5):
        a, b, c = rng.uniform(-1, 1, 3)
        yfun = lambda t: a + b * t + c * np.sin(2 * t)
        dy = lambda t: b + 2 * c * np.cos(2 * t)
        ts = np.linspace(-0.8, 0.8, 9)
        got, ok = evaluate_many(lift, {T: ts, Y: yfun(ts), YP: dy(ts)})
        assert np.allclose(got, _graph_slopes(F, yfun, dy, ts), rtol=1e-6, atol=1e-6)


def test_contact_property_2d():
    F = PointTransformation.parse(2, ("t1 + 0.2*y", "t2 - 0.3*t1*y", "y + 0.1*t1^2 - 0.2*t2"))
    lift = lift_first_order(F)
    rng = np.random.default_rng(1)
    for _ in range(5):
        a = rng.uniform(-1, 1, 4)
        yf = lambda t1, t2: a[0] + a[1] * t1 + a[2] * t2 + a[3] * np.sin(t1 * t2)
        y1 = lambda t1, t2: a[1] + a[3] * t2 * np.cos(t1 * t2)
        y2 = lambda t1, t2: a[2] + a[3] * t1 * np.cos(t1 * t2)
        t = rng.uniform(-0.7, 0.7, 2)
        h = 1e-6
        img = lambda p: F.apply(np.array([p[0], p[1], yf(*p)]))
        J = np.array([(img(t + h * e) - img(t - h * e)) / (2 * h) for e in np.eye(2)])
        # rows: d/dt_i of (x1, x2, u); solve for du/dx_a
        du = np.linalg.solve(J[:, :2], J[:, 2])
        env = {Indep(0): t[0], Indep(1): t[1], Dep(0, (0, 0)): yf(*t), Dep(0, (1, 0)): y1(*t), Dep(0, (0, 1)): y2(*t)}
        for k in range(2):
            assert math.isclose(evaluate(lift[Dep(0, tuple(int(i == k) for i in range(2)))], env), du[k], rel_tol=1e-6, abs_tol=1e-6)


def test_inverse_lift_undoes_lift():
    F = PointTransformation.parse(1, ("t - y^2", "y"), ("x + u^2", "u"))
    fwd = lift_first_order(F)[YP]
    back = lift_first_order(F.inverse())[YP]
    composed = substitute(back, {T: F.components[0], Y: F.components[1], YP: fwd})
    assert equivalent(composed, Var(YP))
    F2 = PointTransformation.parse(2, ("t1", "t2 - t1^2 - 0.5*y", "y + 0.2*t1"), ("x", "y + x^2 + 0.5*(u - 0.2*x)", "u - 0.2*x"))
    fwd = lift_first_order(F2)
    back = lift_first_order(F2.inverse())
    mapping = {Indep(0): F2.components[0], Indep(1): F2.components[1], Dep(0, (0, 0)): F2.components[2], **fwd}
    for v, e in back.items():
        assert equivalent(substitute(e, mapping), Var(v))


def test_inverse_round_trip_and_numeric_inversion():
    F = PointTransformation.parse(1, ("t - y^2", "y"), ("x + u^2", "u"))
    assert F.check_inverse() < 1e-12
    p = np.array([0.3, -0.4])
    assert np.allclose(F.invert_numeric(F.apply(p)), p, atol=1e-10)


# ------------------------------------------------------- total Jacobian


def test_total_jacobian_examples():
    assert simplify(total_jacobian(PointTransformation.identity(1))) == ONE
    dil = PointTransformation.parse(1, ("t/3", "y"), ("3*x", "u"))
    assert simplify(total_jacobian(dil)) == Constant(3)
    swap = PointTransformation.parse(1, ("y", "t"), ("u", "x"))
    assert total_jacobian(swap) == Var(YP)


def test_total_jacobian_needs_inverse():
    with pytest.raises(ValueError):
        total_jacobian(PointTransformation.parse(1, ("y", "t")))


# ------------------------------------------------------------ pullback


def test_pullback_identity():
    L = lagr("y_t^2/2 + t*y")
    assert equivalent(pullback_lagrangian(PointTransformation.identity(1), L).density, L.density)


def test_pullback_arclength_rotation():
    Lt = pullback_lagrangian(rotation(0.5), ARC)
    # equal to sqrt(1 + u'^2) up to the orientation sign of D_x t
    assert equivalent(power(Lt.density, 2), target_space(1).parse("1 + u_x^2"))
    ux = Dep(0, (1,))
    jac = total_jacobian(rotation(0.5))
    for v in (-1.0, 0.9, 2.0):
        sgn = math.copysign(1.0, evaluate(jac, {ux: v}))
        assert math.isclose(evaluate(Lt.density, {ux: v}), sgn * math.sqrt(1 + v * v), rel_tol=1e-12)


def _action(L, yfun, dyfun, a, b):
    f = lambda t: evaluate(L.density, {Indep(0): t, Dep(0, (0,)): yfun(t), Dep(0, (1,)): dyfun(t)})
    return quad(f, a, b, epsabs=1e-12, epsrel=1e-12)[0]


@pytest.mark.parametrize(
    "F,density",
    [
        (PointTransformation.parse(1, ("t/2", "y"), ("2*x", "u")), "y_t^2/2"),
        (PointTransformation.parse(1, ("t - 0.2*y^2", "y"), ("x + 0.2*u^2", "u")), "sqrt(1 + y_t^2) + t*y"),
        (PointTransformation.parse(1, ("t", "y + t^2"), ("x", "u - x^2")), "exp(y/3)*y_t^2"),
    ],
)
def test_pullback_preserves_action(F, density):
    L = lagr(density)
    Lt = pullback_lagrangian(F, L)
    rng = np.random.default_rng(2)
    for _ in range(5):
        a, b, c = rng.uniform(-0.5, 0.5, 3)
        yf = lambda t: a + b * t + c * t**2
        dy = lambda t: b + 2 * c * t
        S = _action(L, yf, dy, 0.0, 1.0)
        # the image graph is parametrized by t; x is increasing along it for these maps
        ts = np.linspace(0.0, 1.0, 4001)
        img = F.apply(np.stack([ts, yf(ts)], axis=-1))
        xs, us = img[:, 0], img[:, 1]
        assert np.all(np.diff(xs) > 0)
        lift = lift_first_order(F)[YP]
        up, _ = evaluate_many(lift, {T: ts, Y: yf(ts), YP: dy(ts)})
        dens, _ = evaluate_many(Lt.density, {Indep(0): xs, Dep(0, (0,)): us, Dep(0, (1,)): up})
        from scipy.integrate import simpson

        St = simpson(dens, x=xs)
        assert abs(S - St) <= 1e-6 * (1 + abs(S))


def test_pullback_requires_first_order():
    with pytest.raises(ValueError):
        pullback_lagrangian(PointTransformation.identity(1), Lagrangian.parse("u_xx^2", 1, 1, 2))


# ------------------------------------------------------- transversality


def test_transversality_arclength_generic_curve():
    gamma = BoundaryCurve.parse("cos(s)", "2*sin(s)")
    s0 = 0.7
    dt, dy = -math.sin(s0), 2 * math.cos(s0)
    got = transversality_1d(ARC, gamma, s0)
    assert equivalent(got, src(f"({dy!r}*y_t + {dt!r})/sqrt(1 + y_t^2)"))


def test_transversality_vertical_line_is_flat_condition():
    gamma = BoundaryCurve.vertical_line(2.0)
    L = lagr("y_t^2/2 + sin(y)*y_t + t")
    assert equivalent(transversality_1d(L, gamma, 0.3), src("y_t + sin(y)"))


def test_transversality_horizontal_line():
    gamma = BoundaryCurve.parse("s", "1")
    got = transversality_1d(lagr("y_t^2/2"), gamma, 0.0)
    assert equivalent(got, src("-y_t^2/2"))


def test_transversality_is_projective():
    L = lagr("exp(y)*sqrt(1 + y_t^2) + t*y_t")
    g1 = BoundaryCurve.parse("s^2", "s + sin(s)")
    g2 = BoundaryCurve.parse("(3*s)^2", "3*s + sin(3*s)")
    a, b = transversality_1d(L, g1, 0.6), transversality_1d(L, g2, 0.2)
    assert equivalent(mul(Constant(3), a), b)


def test_generalized_transversality_area():
    for n in (1, 2, 3):
        sp = source_space(n)
        grads = " + ".join(f"{sp.dep[0]}_{v}^2" for v in sp.indep)
        L = lagr(f"sqrt(1 + {grads})", n)
        H = generalized_transversality(L)
        root = f"sqrt(1 + {grads})"
        for i, v in enumerate(sp.indep):
            assert equivalent(H[i], sp.with_order(1).parse(f"y_{v}/{root}"))
        assert equivalent(H[-1], sp.with_order(1).parse(f"-1/{root}"))
        assert equivalent(add(*(power(h, 2) for h in H)), ONE)


def test_generalized_transversality_without_jets():
    L = lagr("t1*y^2 + sin(t2)", 2)
    H = generalized_transversality(L)
    assert H[0] == Constant(0) and H[1] == Constant(0)
    # energy component y_i dL/dy_i - L reduces to -L
    assert equivalent(H[2], mul(Constant(-1), L.density))


def test_generalized_reduces_to_1d():
    L = lagr("exp(y)*sqrt(1 + y_t^2) + t*y_t^2")
    gamma = BoundaryCurve.parse("s^2 + 1", "sin(s)")
    s0 = 0.4
    dt, dy = (float(v) for v in gamma.derivative(s0))
    nu = (dy, -dt)
    assert equivalent(transversality_condition(L, nu), transversality_1d(L, gamma, s0))


def test_area_condition_is_orthogonality_of_normals():
    """nu . H = 0 for the area density iff the graph's normal is orthogonal to nu."""
    L = lagr("sqrt(1 + y_t1^2 + y_t2^2)", 2)
    H = generalized_transversality(L)
    rng = np.random.default_rng(4)
    for _ in range(20):
        nu = rng.normal(size=3)
        g = rng.uniform(-2, 2, 2)
        env = {Dep(0, (1, 0)): g[0], Dep(0, (0, 1)): g[1]}
        nh = sum(c * evaluate(h, env) for c, h in zip(nu, H))
        # graph tangents (1, 0, y_1), (0, 1, y_2) reordered to (t1, t2, y)
        normal = cross([[1, 0, g[0]], [0, 1, g[1]]])
        geo = nu @ normal / np.linalg.norm(normal)
        assert math.isclose(abs(nh), abs(geo), rel_tol=1e-12, abs_tol=1e-12)


# ------------------------------------------------------------- normals


def test_boundary_normal_examples():
    flat = BoundaryHypersurface.flat(2)
    assert np.allclose(boundary_normal(flat, [0.3, 0.0, 5.0]), [0, 1, 0])
    cyl = BoundaryHypersurface.parse_level_set(2, "t1^2 + t2^2 - 1")
    assert np.allclose(boundary_normal(cyl, [1, 0, 0.7]), [1, 0, 0])
    sph = BoundaryHypersurface.parse_level_set(2, "t1^2 + t2^2 + y^2 - 1")
    assert np.allclose(boundary_normal(sph, [0, 0, 1]), [0, 0, 1])


def test_boundary_normal_parametrized_matches_level_set():
    par = BoundaryHypersurface.parse_parametrization(2, ("cos(s1)*cos(s2)", "sin(s1)*cos(s2)", "sin(s2)"))
    sph = BoundaryHypersurface.parse_level_set(2, "t1^2 + t2^2 + y^2 - 1")
    for s in [(0.3, 0.2), (2.0, -0.5), (-1.0, 1.0)]:
        p = [math.cos(s[0]) * math.cos(s[1]), math.sin(s[0]) * math.cos(s[1]), math.sin(s[1])]
        a, b = boundary_normal(par, s), boundary_normal(sph, p)
        assert math.isclose(abs(a @ b), 1.0, rel_tol=1e-12)


def test_boundary_normal_errors():
    cyl = BoundaryHypersurface.parse_level_set(2, "t1^2 + t2^2 - 1")
    with pytest.raises(ValueError, match="not on the hypersurface"):
        boundary_normal(cyl, [0.5, 0, 0])
    cone = BoundaryHypersurface.parse_level_set(2, "t1^2 + t2^2 - y^2")
    with pytest.raises(ValueError, match="degenerate"):
        boundary_normal(cone, [0, 0, 0])


def test_cross_is_orthogonal_and_oriented():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3):
        M = rng.normal(size=(n, n + 1))
        nu = cross(M)
        assert np.allclose(M @ nu, 0, atol=1e-12)
        assert np.linalg.det(np.vstack([M, nu])) > 0


def test_curve_regularity():
    with pytest.raises(ValueError):
        BoundaryCurve.parse("s^2", "s^3", (0, 1)).check_regular()
    BoundaryCurve.point(0, 1).check_regular()


# ----------------------------------------------------------- naturality


def test_naturality_identity_flat():
    rep = verify_naturality(lagr("y_t^2/2 + t*y"), PointTransformation.identity(1), None, samples=50)
    assert rep.max_discrepancy == 0.0


@pytest.mark.parametrize("theta", [0.3, 1.1, -0.8])
def test_naturality_rotated_line(theta):
    gamma = BoundaryCurve.parse(f"{math.cos(theta)!r}*s", f"{math.sin(theta)!r}*s")
    rep = verify_naturality(ARC, rotation(theta), gamma, samples=100)
    assert rep.samples == 100
    assert rep.max_scaled_discrepancy <= 1e-9
    assert rep.max_normal_angle_deg < 1e-5


@pytest.mark.parametrize("density", ["y_t^2/2 + t*y", "exp(y)*sqrt(1 + y_t^2)", "sin(t)*y_t^3 + y^2"])
def test_naturality_nonlinear_flattening(density):
    """Flatten the parabola t = y^2 + y/2 by a map whose inverse has t_u and y_u both nonzero."""
    F = PointTransformation.parse(
        1,
        ("t - y^2 - y/2", "y + (t - y^2 - y/2)/3"),
        ("x + (u - x/3)^2 + (u - x/3)/2", "u - x/3"),
    )
    assert F.check_inverse() < 1e-12
    gamma = BoundaryCurve.parse("s^2 + s/2", "s")
    rep = verify_naturality(lagr(density), F, gamma, samples=100)
    assert rep.max_scaled_discrepancy <= 1e-9


def test_naturality_needs_inverse():
    F = PointTransformation.parse(1, ("t - y^2 - y/2", "y"), None)
    with pytest.raises(ValueError):
        verify_naturality(ARC, F, BoundaryCurve.parse("s^2 + s/2", "s"))


def test_naturality_not_boundary_friendly():
    gamma = BoundaryCurve.parse("s", "s + 0.1")
    with pytest.raises(NotBoundaryFriendly):
        verify_naturality(ARC, rotation(-math.pi / 4), gamma, samples=10)


def test_naturality_surface_n2():
    F = PointTransformation.parse(2, ("t1", "t2 - t1^2 - 0.5*y", "y + 0.2*t1"), ("x", "y + x^2 + 0.5*(u - 0.2*x)", "u - 0.2*x"))
    S = BoundaryHypersurface.parse_level_set(2, "t2 - t1^2 - 0.5*y")
    for density in ["sqrt(1 + y_t1^2 + y_t2^2)", "t1*y_t2^2 + sin(y)*y_t1 + y^2"]:
        rep = verify_naturality(lagr(density, 2), F, S, samples=100)
        assert rep.max_scaled_discrepancy <= 1e-9
        assert rep.max_normal_angle_deg < 1e-5


def test_naturality_n3():
    F = PointTransformation.parse(
        3,
        ("t1 + 0.1*y", "t2", "t3 - t1*t2 - 0.3*y^2", "y - 0.2*t2"),
        ("x1 - 0.1*(u + 0.2*x2)", "x2", "x3 + (x1 - 0.1*(u + 0.2*x2))*x2 + 0.3*(u + 0.2*x2)^2", "u + 0.2*x2"),
    )
    assert F.check_inverse() < 1e-12
    S = BoundaryHypersurface.parse_level_set(3, "t3 - t1*t2 - 0.3*y^2")
    L = lagr("sqrt(1 + y_t1^2 + y_t2^2 + y_t3^2) + t3*y_t1*y_t3", 3)
    rep = verify_naturality(L, F, S, samples=60)
    assert rep.max_scaled_discrepancy <= 1e-9
