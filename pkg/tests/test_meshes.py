import io

import numpy as np
import pytest

from pnsubd.errors import IndexOutOfRange, ParseError
from pnsubd.meshes import PNMesh, load_obj, obj_dumps, save_obj, validate
from pnsubd.sampling import cube, quad_grid

CUBE_OBJ = """\
# unit cube
v -0.5 -0.5 -0.5
v 0.5 -0.5 -0.5
v 0.5 0.5 -0.5
v -0.5 0.5 -0.5
v -0.5 -0.5 0.5
v 0.5 -0.5 0.5
v 0.5 0.5 0.5
v -0.5 0.5 0.5
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
"""


class TestLoadObj:
    def test_cube_without_normals(self):
        mesh = load_obj(io.BytesIO(CUBE_OBJ.encode()))
        assert mesh.vertex_count == 8
        assert len(mesh.faces) == 6
        assert all(len(f) == 4 for f in mesh.faces)
        assert np.all(mesh.normals == 0.0)

    def test_cube_with_normals(self):
        m = cube(sphere_normals=True)
        back = load_obj(io.BytesIO(obj_dumps(m).encode()))
        assert np.allclose(np.linalg.norm(back.normals, axis=1), 1.0)

    def test_index_out_of_range(self):
        bad = CUBE_OBJ + "f 1 2 9\n"
        with pytest.raises(IndexOutOfRange):
            load_obj(io.BytesIO(bad.encode()))

    def test_parse_error_carries_line(self):
        with pytest.raises(ParseError) as err:
            load_obj(io.BytesIO(b"v 1 2\n"))
        assert "line 1" in str(err.value)

    def test_renormalization_warning(self):
        text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 3\nf 1//1 2//1 3//1\n"
        with pytest.warns(UserWarning, match="re-normalized"):
            mesh = load_obj(io.BytesIO(text.encode()))
        assert np.allclose(mesh.normals[0], [0, 0, 1])


class TestSaveObj:
    def test_round_trip_corpus(self, corpus):
        for name, mesh in corpus.items():
            text = obj_dumps(mesh)
            back = load_obj(io.BytesIO(text.encode()))
            assert np.array_equal(back.positions, mesh.positions), name
            assert np.array_equal(back.normals, mesh.normals), name
            assert np.array_equal(back.faces.indices, mesh.faces.indices)
            assert np.array_equal(back.faces.offsets, mesh.faces.offsets)

    def test_zero_normals_omit_vn(self):
        mesh = cube()
        text = obj_dumps(mesh)
        assert "vn" not in text
        assert "//" not in text

    def test_partial_normals_mix_references(self):
        normals = np.zeros((8, 3))
        normals[0] = [0, 0, 1.0]
        base = cube()
        mesh = PNMesh(base.positions, normals, base.faces.to_lists())
        text = obj_dumps(mesh)
        assert text.count("vn ") == 1
        assert "1//1" in text

    def test_seventeen_digit_round_trip(self):
        pos = np.array([[np.pi, np.e, 1 / 3],
                        [1e-17, -2.5e16, 0.1],
                        [7.0, 8.0, 9.0]])
        mesh = PNMesh(pos, None, [[0, 1, 2]])
        back = load_obj(io.BytesIO(obj_dumps(mesh).encode()))
        assert np.array_equal(back.positions, pos)

    def test_save_to_path(self, tmp_path):
        path = tmp_path / "cube.obj"
        save_obj(cube(), str(path))
        assert load_obj(str(path)).vertex_count == 8


class TestValidate:
    def test_cube_report(self):
        rep = validate(cube())
        assert (rep.vertex_count, rep.edge_count, rep.face_count) == (8, 12, 6)
        assert rep.boundary_edge_count == 0
        assert rep.orientation_consistent
        assert rep.manifold
        assert sorted(rep.extraordinary_vertices) == list(range(8))
        assert rep.valence_histogram == {3: 8}
        assert rep.euler_characteristic == 2

    def test_open_grid_boundary(self):
        rep = validate(quad_grid(4, 4))
        assert rep.boundary_edge_count == 16
        assert rep.orientation_consistent

    def test_flipped_face_detected(self):
        base = cube()
        faces = base.faces.to_lists()
        faces[0] = list(reversed(faces[0]))
        rep = validate(PNMesh(base.positions, None, faces))
        assert not rep.orientation_consistent

    def test_pure(self):
        mesh = cube()
        a = validate(mesh).as_dict()
        b = validate(mesh).as_dict()
        assert a == b


class TestPNMeshInvariants:
    def test_face_repeating_vertex_rejected(self):
        with pytest.raises(ValueError, match="repeats"):
            PNMesh(np.eye(3), None, [[0, 1, 1]])

    def test_bad_index_rejected(self):
        with pytest.raises(IndexOutOfRange):
            PNMesh(np.eye(3), None, [[0, 1, 7]])

    def test_non_unit_normals_rejected(self):
        with pytest.raises(ValueError, match="unit"):
            PNMesh(np.eye(3), np.eye(3) * 2.0, [[0, 1, 2]])
