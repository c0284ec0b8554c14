"""Indexed polygonal meshes with optional per-vertex unit normals, OBJ I/O
and topology validation.

Faces are stored flat (one index buffer plus offsets) so refined meshes with
hundreds of thousands of faces stay cheap; mixed arities are allowed here and
policed by the individual subdivision schemes, not by the mesh type.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .curves import check_unit_normals
from .errors import IndexOutOfRange, ParseError


class FaceArray:
    """Flat storage of variable-arity index rings."""

    def __init__(self, faces=None, indices=None, offsets=None):
        if faces is not None:
            idx: list[int] = []
            off = [0]
            for f in faces:
                idx.extend(int(v) for v in f)
                off.append(len(idx))
            self.indices = np.asarray(idx, dtype=np.int64)
            self.offsets = np.asarray(off, dtype=np.int64)
        else:
            self.indices = np.asarray(indices, dtype=np.int64)
            self.offsets = np.asarray(offsets, dtype=np.int64)

    def __len__(self) -> int:
        return self.offsets.size - 1

    def __getitem__(self, i: int) -> np.ndarray:
        return self.indices[self.offsets[i]: self.offsets[i + 1]]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def arity(self, i: int) -> int:
        return int(self.offsets[i + 1] - self.offsets[i])

    def arities(self) -> np.ndarray:
        return np.diff(self.offsets)

    def next_in_ring(self) -> np.ndarray:
        """For every corner (flat index) the next vertex in its face ring."""
        nxt = np.empty_like(self.indices)
        if self.indices.size:
            nxt[:-1] = self.indices[1:]
            nxt[self.offsets[1:] - 1] = self.indices[self.offsets[:-1]]
        return nxt

    def face_of_corner(self) -> np.ndarray:
        return np.repeat(np.arange(len(self), dtype=np.int64), self.arities())

    def to_lists(self) -> list[list[int]]:
        return [list(map(int, f)) for f in self]


class PNMesh:
    """Control mesh: positions, optional unit normals, and index-ring faces.

    A zero normal row marks "no control normal".  Values are treated as
    immutable after construction; all refinement returns new meshes.
    """

    def __init__(self, positions, normals=None, faces=None):
        self.positions = np.array(positions, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise ValueError("positions must be (V, 3)")
        nv = self.positions.shape[0]
        if normals is None:
            self.normals = np.zeros((nv, 3))
        else:
            self.normals = np.array(normals, dtype=float)
            if self.normals.shape != (nv, 3):
                raise ValueError("normals must parallel positions")
        check_unit_normals(self.normals)
        if isinstance(faces, FaceArray):
            self.faces = faces
        else:
            self.faces = FaceArray(faces or [])
        if len(self.faces) and self.faces.indices.size:
            if self.faces.indices.min() < 0 or self.faces.indices.max() >= nv:
                raise IndexOutOfRange(
                    f"face index out of range for {nv} vertices"
                )
            arities = self.faces.arities()
            if arities.min() < 3:
                bad = int(np.argmax(arities < 3))
                raise ValueError(f"face {bad} has arity {arities[bad]} < 3")
            # a repeated vertex inside a ring shows up as a duplicate
            # (face, vertex) pair
            pairs = np.stack(
                [self.faces.face_of_corner(), self.faces.indices], axis=1
            )
            if np.unique(pairs, axis=0).shape[0] != pairs.shape[0]:
                raise ValueError("a face repeats a vertex")

    @property
    def vertex_count(self) -> int:
        return self.positions.shape[0]

    @property
    def face_count(self) -> int:
        return len(self.faces)

    def has_normals(self) -> bool:
        return bool(np.any(np.abs(self.normals).sum(axis=1) > 0.0))

    def copy(self) -> "PNMesh":
        return PNMesh(
            self.positions.copy(),
            self.normals.copy(),
            FaceArray(indices=self.faces.indices.copy(),
                      offsets=self.faces.offsets.copy()),
        )

    def undirected_edges(self):
        """(edge vertex pairs, per-corner edge id, per-edge face count)."""
        head = self.faces.indices
        nxt = self.faces.next_in_ring()
        und = np.sort(np.stack([head, nxt], axis=1), axis=1)
        uniq, inverse, counts = np.unique(
            und, axis=0, return_inverse=True, return_counts=True
        )
        return uniq, inverse.ravel(), counts


@dataclass
class MeshReport:
    """Connectivity summary produced by :func:`validate`."""

    vertex_count: int
    edge_count: int
    face_count: int
    valence_histogram: dict[int, int]
    boundary_edge_count: int
    orientation_consistent: bool
    manifold: bool
    extraordinary_vertices: list[int]
    euler_characteristic: int
    boundary_vertices: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "vertex_count": self.vertex_count,
            "edge_count": self.edge_count,
            "face_count": self.face_count,
            "valence_histogram": {str(k): v for k, v in
                                  sorted(self.valence_histogram.items())},
            "boundary_edge_count": self.boundary_edge_count,
            "orientation_consistent": self.orientation_consistent,
            "manifold": self.manifold,
            "extraordinary_vertices": self.extraordinary_vertices,
            "euler_characteristic": self.euler_characteristic,
            "boundary_vertex_count": len(self.boundary_vertices),
        }


def validate(mesh: PNMesh) -> MeshReport:
    """Pure connectivity check; problems become report entries, not errors.

    Extraordinary vertices are interior vertices whose valence differs from
    4 in an all-quad neighborhood or from 6 in an all-triangle neighborhood;
    interior vertices with mixed-arity neighborhoods are listed too.
    """
    nv = mesh.vertex_count
    if mesh.face_count == 0:
        return MeshReport(nv, 0, 0, {0: nv} if nv else {}, 0, True, True,
                          [], nv, [])
    head = mesh.faces.indices
    nxt = mesh.faces.next_in_ring()
    edge_verts, edge_of_corner, counts = mesh.undirected_edges()
    ne = edge_verts.shape[0]

    valence = np.bincount(edge_verts.ravel(), minlength=nv)
    boundary_edge = counts == 1
    boundary_vertex = np.zeros(nv, dtype=bool)
    boundary_vertex[edge_verts[boundary_edge].ravel()] = True

    manifold = bool(counts.max() <= 2)
    forward = np.bincount(edge_of_corner, weights=(head < nxt),
                          minlength=ne)
    interior2 = counts == 2
    orientation = manifold and bool(np.all(forward[interior2] == 1.0))

    arity_of_corner = np.repeat(mesh.faces.arities(),
                                mesh.faces.arities())
    faces_at = np.bincount(head, minlength=nv)
    quads_at = np.bincount(head, weights=(arity_of_corner == 4),
                           minlength=nv)
    tris_at = np.bincount(head, weights=(arity_of_corner == 3),
                          minlength=nv)
    interior = ~boundary_vertex & (faces_at > 0)
    all_quad = interior & (quads_at == faces_at)
    all_tri = interior & (tris_at == faces_at)
    mixed = interior & ~all_quad & ~all_tri
    extraordinary = np.nonzero(
        (all_quad & (valence != 4)) | (all_tri & (valence != 6)) | mixed
    )[0]

    vals, freq = np.unique(valence, return_counts=True)
    hist = {int(v): int(c) for v, c in zip(vals, freq)}

    return MeshReport(
        vertex_count=nv,
        edge_count=ne,
        face_count=mesh.face_count,
        valence_histogram=hist,
        boundary_edge_count=int(boundary_edge.sum()),
        orientation_consistent=orientation,
        manifold=manifold,
        extraordinary_vertices=[int(v) for v in extraordinary],
        euler_characteristic=nv - ne + mesh.face_count,
        boundary_vertices=[int(v) for v in np.nonzero(boundary_vertex)[0]],
    )


# -- OBJ I/O -------------------------------------------------------------------

def load_obj(source) -> PNMesh:
    """Parse the OBJ subset ``v`` / ``vn`` / ``f`` (with ``v`` or ``v//vn``).

    Normals are re-normalized on load; a warning is emitted when the
    correction exceeds 1e-6.  Vertices never referenced with a ``//vn``
    keep a zero normal.
    """
    if isinstance(source, str):
        with open(source, "rb") as f:
            data = f.read()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    text = data.decode("utf-8")

    positions: list[list[float]] = []
    raw_normals: list[list[float]] = []
    faces: list[list[int]] = []
    normal_of_vertex: dict[int, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ParseError("v needs 3 coordinates", line=lineno)
            try:
                positions.append([float(x) for x in parts[1:4]])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
        elif tag == "vn":
            if len(parts) < 4:
                raise ParseError("vn needs 3 coordinates", line=lineno)
            try:
                raw_normals.append([float(x) for x in parts[1:4]])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
        elif tag == "f":
            if len(parts) < 4:
                raise ParseError("f needs at least 3 vertices", line=lineno)
            ring = []
            for entry in parts[1:]:
                fields = entry.split("/")
                try:
                    vi = int(fields[0])
                except ValueError as exc:
                    raise ParseError(f"bad face entry {entry!r}",
                                     line=lineno) from exc
                if vi < 0:
                    vi = len(positions) + 1 + vi
                if not (1 <= vi <= len(positions)):
                    raise IndexOutOfRange(
                        f"line {lineno}: vertex index {vi} out of range "
                        f"(have {len(positions)})"
                    )
                if len(fields) >= 3 and fields[2]:
                    ni = int(fields[2])
                    if ni < 0:
                        ni = len(raw_normals) + 1 + ni
                    if not (1 <= ni <= len(raw_normals)):
                        raise IndexOutOfRange(
                            f"line {lineno}: normal index {ni} out of range"
                        )
                    normal_of_vertex[vi - 1] = ni - 1
                ring.append(vi - 1)
            faces.append(ring)
        # other records (vt, o, g, s, usemtl, ...) are ignored

    pos = np.array(positions, dtype=float) if positions else np.zeros((0, 3))
    normals = np.zeros_like(pos)
    worst = 0.0
    for v, ni in normal_of_vertex.items():
        n = np.asarray(raw_normals[ni], dtype=float)
        length = np.linalg.norm(n)
        if length == 0.0:
            continue
        worst = max(worst, abs(length - 1.0))
        # already-unit normals pass through verbatim (bit-exact round trip)
        normals[v] = n if abs(length - 1.0) < 1e-12 else n / length
    if worst > 1e-6:
        warnings.warn(
            f"normals re-normalized on load (worst deviation {worst:.3g})"
        )
    return PNMesh(pos, normals, faces)


def save_obj(mesh: PNMesh, sink) -> None:
    """Write the mesh as OBJ: UTF-8, LF endings, 17 significant digits.

    Vertices without a control normal produce no ``vn`` line and plain ``v``
    face references.
    """
    own = isinstance(sink, str)
    f = open(sink, "w", encoding="utf-8", newline="\n") if own else sink
    try:
        has_normal = np.abs(mesh.normals).sum(axis=1) > 0.0
        vn_index = np.full(mesh.vertex_count, -1, dtype=int)
        count = 0
        for p in mesh.positions:
            f.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        for v in range(mesh.vertex_count):
            if has_normal[v]:
                n = mesh.normals[v]
                f.write(f"vn {n[0]:.17g} {n[1]:.17g} {n[2]:.17g}\n")
                count += 1
                vn_index[v] = count
        for face in mesh.faces:
            entries = []
            for v in face:
                if has_normal[v]:
                    entries.append(f"{v + 1}//{vn_index[v]}")
                else:
                    entries.append(f"{v + 1}")
            f.write("f " + " ".join(entries) + "\n")
    finally:
        if own:
            f.close()


def obj_dumps(mesh: PNMesh) -> str:
    import io

    buf = io.StringIO()
    save_obj(mesh, buf)
    return buf.getvalue()
