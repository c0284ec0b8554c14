import numpy as np
import pytest

from pnsubd.analysis import (
    compare_meshes,
    decay_rate,
    discrete_curvature,
    primitive_residual,
)
from pnsubd.errors import (
    FitDiverged,
    NonPositiveEntry,
    TooFewPoints,
    TopologyMismatch,
)
from pnsubd.meshes import PNMesh
from pnsubd.sampling import (
    cube,
    cylinder_quad_mesh,
    octahedron_sphere,
    quad_grid,
    torus_quad_mesh,
)


class TestPrimitiveResidual:
    def test_unit_circle_supplied(self):
        th = np.linspace(0, 2 * np.pi, 40, endpoint=False)
        pts = np.stack([np.cos(th), np.sin(th), 0 * th], axis=1)
        fit = primitive_residual(pts, "circle",
                                 {"center": [0, 0, 0], "axis": [0, 0, 1],
                                  "radius": 1.0})
        assert fit.max_residual < 1e-15
        assert not fit.fitted

    def test_cube_corners_vs_unit_sphere(self):
        pts = cube(size=2.0).positions  # corners at distance sqrt(3)
        fit = primitive_residual(pts, "sphere",
                                 {"center": [0, 0, 0], "radius": 1.0})
        assert abs(fit.max_residual - (np.sqrt(3) - 1.0)) < 1e-12

    def test_supplied_parameters_never_mutated(self):
        params = {"center": [0, 0, 0], "radius": 1.0}
        primitive_residual(np.eye(3), "sphere", params)
        assert params == {"center": [0, 0, 0], "radius": 1.0}

    def test_fitted_sphere_recovers(self, rng):
        n = rng.normal(size=(60, 3))
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        pts = 2.5 * n + np.array([1.0, -2.0, 0.5])
        fit = primitive_residual(pts, "sphere")
        assert fit.fitted
        assert abs(fit.parameters["radius"] - 2.5) < 1e-9
        assert fit.max_residual < 1e-9

    def test_fitted_circle_recovers(self, rng):
        th = rng.uniform(0, 2 * np.pi, 30)
        pts = np.stack([3 * np.cos(th) + 1, 3 * np.sin(th) - 2,
                        np.full_like(th, 4.0)], axis=1)
        fit = primitive_residual(pts, "circle")
        assert abs(fit.parameters["radius"] - 3.0) < 1e-9
        assert fit.max_residual < 1e-9

    def test_fitted_cylinder_recovers(self, rng):
        mesh = cylinder_quad_mesh(16, 6, radius=1.5, height=4.0)
        fit = primitive_residual(mesh.positions, "cylinder")
        assert abs(fit.parameters["radius"] - 1.5) < 1e-7
        assert fit.max_residual < 1e-7

    def test_fitted_plane(self, rng):
        pts = rng.normal(size=(30, 3))
        pts[:, 2] = 0.25 * pts[:, 0] - 0.5 * pts[:, 1] + 2.0
        fit = primitive_residual(pts, "plane")
        assert fit.max_residual < 1e-12

    def test_torus_requires_parameters(self):
        pts = torus_quad_mesh(8, 8).positions
        with pytest.raises(FitDiverged):
            primitive_residual(pts, "torus")

    def test_torus_supplied_exact(self):
        pts = torus_quad_mesh(8, 8, 2.0, 1.0).positions
        fit = primitive_residual(pts, "torus",
                                 {"center": [0, 0, 0], "axis": [0, 0, 1],
                                  "major_radius": 2.0, "minor_radius": 1.0})
        assert fit.max_residual < 1e-12

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            primitive_residual(np.zeros((3, 3)), "sphere")


class TestDiscreteCurvature:
    def test_sphere_gaussian(self):
        mesh = octahedron_sphere(32, radius=2.0)
        field = discrete_curvature(mesh)
        K = field.finite_gaussian()
        assert np.abs(K - 0.25).max() / 0.25 < 0.05

    def test_plane_gaussian_zero(self):
        field = discrete_curvature(quad_grid(8, 8))
        K = field.finite_gaussian()
        assert np.abs(K).max() < 1e-8

    def test_cylinder(self):
        mesh = cylinder_quad_mesh(96, 32, radius=1.0, height=2.0)
        field = discrete_curvature(mesh)
        K = field.finite_gaussian()
        H = field.mean[field.interior]
        assert np.abs(K).max() < 1e-6
        assert np.abs(H - 0.5).max() / 0.5 < 0.05

    def test_sphere_mean_positive(self):
        mesh = octahedron_sphere(24, radius=2.0)
        field = discrete_curvature(mesh)
        H = field.mean[field.interior]
        assert np.all(H > 0)
        assert np.abs(H - 0.5).max() / 0.5 < 0.05

    def test_convergence_under_refinement(self):
        errs = []
        for n in (8, 16, 32):  # halving edge length each step
            field = discrete_curvature(octahedron_sphere(n, radius=2.0))
            errs.append(np.abs(field.finite_gaussian() - 0.25).max())
        assert errs[0] / errs[1] >= 1.5
        assert errs[1] / errs[2] >= 1.5

    def test_boundary_flagged_nan(self):
        field = discrete_curvature(quad_grid(4, 4))
        assert np.isnan(field.gaussian[0])  # grid corner
        assert not np.isnan(field.gaussian[12])  # interior


class TestDecayRate:
    def test_exact_geometric(self):
        assert abs(decay_rate([1.0, 0.5, 0.25, 0.125]) - 0.5) < 1e-12

    def test_linear_cubic_bspline_differences(self, rng):
        from pnsubd.curves import PNPolygon, decay_norms

        pts = rng.normal(size=(8, 3))
        poly = PNPolygon(pts, None, closed=True)
        norms = decay_norms(poly, "bspline3", order=1, levels=8,
                            variant="linear")
        assert abs(decay_rate(norms) - 0.5) < 0.05

    def test_errors(self):
        with pytest.raises(TooFewPoints):
            decay_rate([1.0, 0.5])
        with pytest.raises(NonPositiveEntry):
            decay_rate([1.0, 0.5, -0.25, 0.125])


class TestCompareMeshes:
    def test_identical(self):
        mesh = cube()
        assert compare_meshes(mesh, mesh) == 0.0

    def test_translated(self):
        mesh = cube()
        moved = PNMesh(mesh.positions + [1.0, 0, 0], None,
                       mesh.faces.to_lists())
        assert abs(compare_meshes(mesh, moved) - 1.0) < 1e-15

    def test_topology_mismatch(self):
        with pytest.raises(TopologyMismatch):
            compare_meshes(cube(), quad_grid(2, 2))
