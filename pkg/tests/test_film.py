import math
from dataclasses import replace

import numpy as np
import pytest

from natbc.contact import BoundaryHypersurface
from natbc.solver import (
    FilmEnergy,
    FilmMesh,
    FilmSettings,
    MeshDegeneration,
    NonConvergence,
    check_film_orthogonality,
    relax_film,
)
from natbc.solver.film import Wall

CYLINDER = BoundaryHypersurface.parse_level_set(2, "t1^2 + t2^2 - 1")
BULGED = BoundaryHypersurface.parse_level_set(2, "t1^2 + t2^2 - (1 + 0.5*(y - 0.3*t1)^2)^2")


def test_flat_disk_is_a_fixed_point():
    mesh = FilmMesh.create(CYLINDER, 12, 24, height=0.4)
    area, g, _ = FilmEnergy(mesh).value_and_gradient(mesh.heights)
    assert np.max(np.abs(g)) < 1e-12
    # inscribed 24-gon
    assert math.isclose(area, 12 * math.sin(2 * math.pi / 24), rel_tol=1e-12)


def test_mesh_validation():
    with pytest.raises(ValueError):
        FilmMesh.create(CYLINDER, 1, 16)
    with pytest.raises(ValueError):
        FilmMesh.create(CYLINDER, 8, 2)


def test_boundary_nodes_sit_on_the_wall():
    mesh = FilmMesh.create(BULGED, 10, 20, height=lambda a, b: 0.2 * a + 0.1)
    assert mesh.wall_residual() <= 1e-8


def test_radius_slope_matches_finite_differences():
    w = Wall(BULGED)
    theta = np.linspace(0, 2 * np.pi, 7, endpoint=False)
    y = np.full(theta.size, 0.3)
    rho = w.radius(theta, y, np.ones(theta.size))
    h = 1e-6
    fd = (w.radius(theta, y + h, rho) - w.radius(theta, y - h, rho)) / (2 * h)
    assert np.allclose(w.radius_slope(theta, rho, y), fd, atol=1e-7)


@pytest.mark.parametrize("wall", [CYLINDER, BULGED])
def test_area_gradient_matches_finite_differences(wall):
    mesh = FilmMesh.create(wall, 5, 9, height=lambda a, b: 0.2 * a + 0.1 * b * b)
    E = FilmEnergy(mesh)
    rng = np.random.default_rng(0)
    y = mesh.heights + 0.02 * rng.normal(size=mesh.heights.size)
    _, g, _ = E.value_and_gradient(y)
    h = 1e-6
    fd = np.array([(E(y + h * e)[0] - E(y - h * e)[0]) / (2 * h) for e in np.eye(y.size)])
    assert np.allclose(g, fd, atol=1e-7)


def test_relaxation_decreases_area_monotonically():
    mesh = FilmMesh.create(CYLINDER, 16, 24, height=lambda a, b: 0.3 * a)
    out = relax_film(mesh)
    assert out.converged
    assert np.all(np.diff(out.history) <= 0)
    assert out.history[-1] < out.history[0]
    assert out.wall_residual() <= 1e-8


def test_tilted_start_relaxes_to_flat_disk_and_meets_wall_orthogonally():
    mesh = FilmMesh.create(CYLINDER, 24, 32, height=lambda a, b: 0.3 * a)
    before = check_film_orthogonality(mesh)["max_angle_deviation_deg"]
    out = relax_film(mesh)
    after = check_film_orthogonality(out)["max_angle_deviation_deg"]
    assert before > 10
    assert after < 0.05
    assert out.height_std() < 1e-4


def test_bulged_pipe_film_is_orthogonal_but_not_flat():
    mesh = FilmMesh.create(BULGED, 24, 32, height=lambda a, b: 0.2 * a + 0.1)
    out = relax_film(mesh)
    assert out.converged
    assert check_film_orthogonality(out)["max_angle_deviation_deg"] < 0.1
    assert out.height_std() > 1e-2


def test_flipped_spoke_is_rejected():
    mesh = FilmMesh.create(CYLINDER, 4, 8, height=0.0)
    rho = mesh.rho.copy()
    rho[2] = -1.0  # the other root of the wall equation would fold the cells of this spoke
    bad = replace(mesh, rho=rho)
    with pytest.raises(MeshDegeneration):
        FilmEnergy(bad)(bad.heights)


def test_iteration_cap_raises_nonconvergence():
    mesh = FilmMesh.create(CYLINDER, 16, 24, height=lambda a, b: 0.3 * a)
    with pytest.raises(NonConvergence) as info:
        relax_film(mesh, FilmSettings(max_iter=3))
    assert info.value.solution.iterations == 3


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_wall_projection_failure():
    w = Wall(BoundaryHypersurface.parse_level_set(2, "t1^2 + t2^2 + 1"))
    with pytest.raises(MeshDegeneration):
        w.radius(np.zeros(1), np.zeros(1), np.ones(1))
