import numpy as np
import pytest

from pnsubd.analysis import compare_meshes, primitive_residual
from pnsubd.errors import DegenerateNormalWarning, UnsupportedVariant
from pnsubd.meshes import PNMesh, validate
from pnsubd.refine import (
    estimate_normals,
    linear_refine_mesh,
    pn_refine_mesh,
    subdivide_surface,
)
from pnsubd.sampling import (
    cube,
    cylinder_quad_mesh,
    quad_grid,
    random_quad_mesh,
    random_rotation,
    random_tri_mesh,
    tetrahedron,
    torus_quad_mesh,
    torus_meridian_indices,
    tri_grid,
)
from pnsubd.stencils import build_stencils

from conftest import scheme_compatible

ALL_SCHEMES = ["catmull-clark", "doo-sabin", "loop", "kobbelt", "butterfly"]


def with_constant_normals(mesh, direction=(0.0, 0.0, 1.0)):
    n = np.tile(np.asarray(direction, float), (mesh.vertex_count, 1))
    return PNMesh(mesh.positions, n, mesh.faces.to_lists())


def with_random_normals(mesh, seed):
    rng = np.random.default_rng(seed)
    n = rng.normal(size=(mesh.vertex_count, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    return PNMesh(mesh.positions, n, mesh.faces.to_lists())


class TestLinearRefineMesh:
    def test_planar_stays_planar(self):
        mesh = with_constant_normals(quad_grid(3, 3))
        out = linear_refine_mesh(mesh, build_stencils(mesh, "cc"))
        assert np.abs(out.positions[:, 2]).max() == 0.0

    def test_constant_normals_stay_constant(self):
        mesh = with_constant_normals(quad_grid(3, 3))
        out = linear_refine_mesh(mesh, build_stencils(mesh, "cc"))
        assert np.allclose(out.normals, [0.0, 0.0, 1.0])

    def test_butterfly_projected_normals_unit(self):
        mesh = tetrahedron()
        out = linear_refine_mesh(mesh, build_stencils(mesh, "butterfly"))
        lengths = np.linalg.norm(out.normals, axis=1)
        assert np.allclose(lengths, 1.0, atol=1e-12)

    def test_degenerate_average_warns_and_falls_back(self):
        pos = quad_grid(2, 1).positions
        normals = np.zeros_like(pos)
        normals[1] = [0.0, 0.0, 1.0]
        normals[4] = [0.0, 0.0, -1.0]  # antipodal across the middle edge
        mesh = PNMesh(pos, normals, quad_grid(2, 1).faces.to_lists())
        with pytest.warns(DegenerateNormalWarning):
            out = linear_refine_mesh(mesh, build_stencils(mesh, "cc"))
        assert np.isfinite(out.positions).all()


class TestPNRefineMesh:
    @pytest.mark.parametrize("scheme", ALL_SCHEMES)
    def test_reduces_to_linear_for_constant_normals(self, scheme, corpus):
        count = 0
        for name, mesh in corpus.items():
            if not scheme_compatible(scheme, mesh):
                continue
            m = with_constant_normals(mesh)
            s = build_stencils(m, scheme)
            pn = pn_refine_mesh(m, s)
            lin = linear_refine_mesh(m, s)
            assert compare_meshes(pn, lin) < 1e-14, (scheme, name)
            count += 1
        assert count >= 5

    @pytest.mark.parametrize("scheme", ALL_SCHEMES)
    def test_rotation_translation_equivariance(self, scheme):
        mesh = (random_quad_mesh(5) if scheme_compatible(scheme,
                random_quad_mesh(5)) else random_tri_mesh(5))
        R = random_rotation(17)
        t = np.array([0.4, -1.2, 2.0])
        moved = PNMesh(mesh.positions @ R.T + t, mesh.normals @ R.T,
                       mesh.faces.to_lists())
        a = pn_refine_mesh(moved, build_stencils(moved, scheme))
        b = pn_refine_mesh(mesh, build_stencils(mesh, scheme))
        assert np.abs(a.positions - (b.positions @ R.T + t)).max() < 1e-12
        assert np.abs(a.normals - b.normals @ R.T).max() < 1e-12

    @pytest.mark.parametrize("scheme", ALL_SCHEMES)
    def test_normal_inversion_leaves_positions(self, scheme):
        mesh = (random_quad_mesh(6) if scheme_compatible(scheme,
                random_quad_mesh(6)) else random_tri_mesh(6))
        flipped = PNMesh(mesh.positions, -mesh.normals,
                         mesh.faces.to_lists())
        a = pn_refine_mesh(flipped, build_stencils(flipped, scheme))
        b = pn_refine_mesh(mesh, build_stencils(mesh, scheme))
        assert np.abs(a.positions - b.positions).max() < 1e-12

    def test_uniform_scaling_equivariance(self):
        mesh = random_quad_mesh(7)
        s = 2.5
        scaled = PNMesh(mesh.positions * s, mesh.normals,
                        mesh.faces.to_lists())
        a = pn_refine_mesh(scaled, build_stencils(scaled, "cc"))
        b = pn_refine_mesh(mesh, build_stencils(mesh, "cc"))
        assert np.abs(a.positions - s * b.positions).max() < 1e-12

    @pytest.mark.parametrize("scheme", ["kobbelt", "butterfly"])
    def test_interpolatory_keeps_positions_bitwise(self, scheme):
        mesh = (random_quad_mesh(8, 4, 4) if scheme == "kobbelt"
                else random_tri_mesh(8, 4, 4))
        cur = mesh
        index = np.arange(mesh.vertex_count)
        for _ in range(3):
            s = build_stencils(cur, scheme)
            nxt = pn_refine_mesh(cur, s)
            index = np.array([s.vertex_point[int(v)] for v in index])
            cur = nxt
        assert np.array_equal(cur.positions[index], mesh.positions)

    def test_zero_normal_regions_match_linear(self):
        mesh = random_quad_mesh(9)
        normals = mesh.normals.copy()
        normals[:6] = 0.0  # a zero-normal patch
        m = PNMesh(mesh.positions, normals, mesh.faces.to_lists())
        s = build_stencils(m, "cc")
        pn = pn_refine_mesh(m, s)
        lin = linear_refine_mesh(m, s)
        coo = s.matrix.tocoo()
        nonzero = np.abs(normals).sum(axis=1) > 0.0
        touched = np.zeros(s.new_vertex_count, dtype=bool)
        touched[coo.row[nonzero[coo.col]]] = True
        assert np.array_equal(pn.positions[~touched], lin.positions[~touched])

    def test_cylinder_preservation(self):
        mesh = cylinder_quad_mesh(8, 4, radius=1.0, height=2.0, uneven=True)
        out = subdivide_surface(mesh, "cc", 5, "pn")
        radii = np.linalg.norm(out.positions[:, :2], axis=1)
        assert np.abs(radii - 1.0).max() < 1e-9

    def test_sphere_preservation(self):
        out = subdivide_surface(tetrahedron(), "butterfly", 4, "pn")
        radii = np.linalg.norm(out.positions, axis=1)
        assert np.abs(radii - 1.0).max() < 1e-9

    def test_validate_after_pn_rounds(self, corpus):
        for scheme in ALL_SCHEMES:
            for name, mesh in corpus.items():
                if not scheme_compatible(scheme, mesh):
                    continue
                m = with_random_normals(mesh, 3)
                out = subdivide_surface(m, scheme, 2, "pn")
                rep = validate(out)
                assert rep.orientation_consistent, (scheme, name)


class TestEstimateNormals:
    def test_cube_corner_symmetry(self):
        out = estimate_normals(cube())
        expect = cube().positions
        expect = expect / np.linalg.norm(expect, axis=1, keepdims=True)
        assert np.abs(out.normals - expect).max() < 1e-12

    def test_planar_grid_normal(self):
        out = estimate_normals(quad_grid(3, 3))
        assert np.allclose(out.normals, [0.0, 0.0, 1.0])

    def test_cylinder_normals_close_to_analytic(self):
        mesh = cylinder_quad_mesh(24, 8, radius=1.0, height=2.0,
                                  with_normals=False)
        out = estimate_normals(mesh)
        analytic = mesh.positions.copy()
        analytic[:, 2] = 0.0
        analytic /= np.linalg.norm(analytic, axis=1, keepdims=True)
        dots = np.einsum("ij,ij->i", out.normals, analytic)
        assert np.arccos(np.clip(dots, -1, 1)).max() < 1e-2

    def test_existing_normals_kept_unless_overwrite(self):
        mesh = cube(sphere_normals=True)
        kept = estimate_normals(mesh)
        assert np.array_equal(kept.normals, mesh.normals)
        replaced = estimate_normals(mesh, overwrite=True)
        assert np.allclose(replaced.normals, mesh.normals, atol=1e-12)


class TestSubdivideSurface:
    def test_levels_zero_identity(self):
        mesh = cube()
        out = subdivide_surface(mesh, "cc", 0, "pn")
        assert compare_meshes(out, mesh) == 0.0

    def test_unsupported_variant(self):
        with pytest.raises(UnsupportedVariant):
            subdivide_surface(cube(), "butterfly", 1, "modified")
        with pytest.raises(UnsupportedVariant):
            subdivide_surface(cube(), "cc", 1, "cubic")

    def test_normal_editing_makes_waves(self):
        # planar grid, alternating tilted normals: the point-normal variant
        # leaves the plane while the linear variant stays in it
        grid = quad_grid(6, 6)
        tilt = np.deg2rad(30.0)
        normals = np.zeros_like(grid.positions)
        for v in range(grid.vertex_count):
            i = v % 7
            s = 1.0 if i % 2 == 0 else -1.0
            normals[v] = [s * np.sin(tilt), 0.0, np.cos(tilt)]
        mesh = PNMesh(grid.positions, normals, grid.faces.to_lists())
        wavy = subdivide_surface(mesh, "ds", 3, "pn")
        flat = subdivide_surface(mesh, "ds", 3, "linear")
        assert np.abs(flat.positions[:, 2]).max() < 1e-14
        assert np.abs(wavy.positions[:, 2]).max() > 1e-2

    def test_torus_not_preserved_but_meridians_are(self):
        mesh = torus_quad_mesh(4, 4, 2.0, 1.0)
        rings = [set(r) for r in torus_meridian_indices(4, 4)]
        cur = mesh
        for _ in range(4):
            s = build_stencils(cur, "kobbelt")
            new_rings = []
            for rs in rings:
                ns = {s.vertex_point[v] for v in rs}
                for (a, b), idx in s.edge_point.items():
                    if a in rs and b in rs:
                        ns.add(idx)
                new_rings.append(ns)
            cur = pn_refine_mesh(cur, s)
            rings = new_rings
        torus_fit = primitive_residual(
            cur.positions, "torus",
            {"center": [0, 0, 0], "axis": [0, 0, 1],
             "major_radius": 2.0, "minor_radius": 1.0},
        )
        assert torus_fit.max_residual > 1e-3
        for i, ns in enumerate(rings):
            u = 2 * np.pi * i / 4
            fit = primitive_residual(
                cur.positions[sorted(ns)], "circle",
                {"center": [2 * np.cos(u), 2 * np.sin(u), 0.0],
                 "axis": [-np.sin(u), np.cos(u), 0.0], "radius": 1.0},
            )
            assert fit.max_residual < 1e-9
