"""Numerical free-boundary problems: sliding endpoints in 1-D and soap films in pipes."""

from .film import FilmEnergy, FilmMesh, FilmSettings, MeshDegeneration, Wall, check_film_orthogonality, film_normals, relax_film
from .io import film_columns, solution_columns, write_csv, write_json
from .onedim import (
    DegenerateInterval,
    DiscreteAction,
    DiscreteSolution1D,
    NonConvergence,
    Problem1D,
    check_residuals_1d,
    discretize_action,
    first_variation,
    graph_length,
    incidence_angles,
    minimize_1d,
)

__all__ = [
    "DegenerateInterval",
    "DiscreteAction",
    "DiscreteSolution1D",
    "FilmEnergy",
    "FilmMesh",
    "FilmSettings",
    "MeshDegeneration",
    "NonConvergence",
    "Problem1D",
    "Wall",
    "check_film_orthogonality",
    "check_residuals_1d",
    "discretize_action",
    "film_columns",
    "film_normals",
    "first_variation",
    "graph_length",
    "incidence_angles",
    "minimize_1d",
    "relax_film",
    "solution_columns",
    "write_csv",
    "write_json",
]
