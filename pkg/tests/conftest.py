import numpy as np
import pytest

from pnsubd import sampling


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(scope="session")
def corpus():
    """Small mixed corpus used by round-trip, validation and refinement
    property tests."""
    meshes = {
        "cube": sampling.cube(),
        "cube_sphere_normals": sampling.cube(sphere_normals=True),
        "tetrahedron": sampling.tetrahedron(),
        "quad_grid": sampling.quad_grid(3, 4),
        "tri_grid": sampling.tri_grid(3, 3),
        "cylinder": sampling.cylinder_quad_mesh(6, 3),
        "cylinder_uneven": sampling.cylinder_quad_mesh(7, 3, uneven=True),
        "torus": sampling.torus_quad_mesh(4, 4),
        "sheet_v8": sampling.hyperbolic_sheet(valence=8, rings=2),
        "sphere_tris": sampling.octahedron_sphere(3),
        "random_quads": sampling.random_quad_mesh(11),
        "random_quads2": sampling.random_quad_mesh(21, 4, 2),
        "random_tris": sampling.random_tri_mesh(12),
        "random_tris2": sampling.random_tri_mesh(22, 4, 2),
    }
    return meshes


def scheme_compatible(scheme: str, mesh) -> bool:
    arities = set(mesh.faces.arities().tolist())
    if scheme in ("loop", "butterfly"):
        return arities == {3}
    if scheme == "kobbelt":
        return arities == {4}
    return True
