"""Stencil construction for the surface subdivision schemes.

Every scheme is reduced to the same currency: a sparse row of affine weights
over the old vertices for each new vertex, plus the refined face rings and a
provenance tag per new vertex.  The point-normal update then consumes those
rows uniformly, so the nonlinear machinery never needs to know which scheme
produced them.

Boundary policy: the primal B-spline schemes (Catmull-Clark, Loop) refine
boundary polylines with the cubic curve rules (midpoint edge points,
1/8-3/4-1/8 vertex points, corners pinned); the interpolatory schemes
(Kobbelt, Butterfly) use the 4-point curve rule along boundaries; Doo-Sabin
simply trims faces at the boundary.  Missing stencil support near boundaries
and extraordinary vertices of the interpolatory schemes is filled with
affine reflections (virtual point ``2a - b``), which keeps every row summing
to one and is exact on regular grids.
"""

from __future__ import annotations

import math
from array import array
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import UnknownScheme, WrongFaceArity
from .meshes import FaceArray, PNMesh

KIND_VERTEX, KIND_EDGE, KIND_FACE, KIND_DUAL, KIND_INTERP = range(5)
KIND_NAMES = ("vertex-point", "edge-point", "face-point", "dual-point",
              "interpolated")

SCHEME_ALIASES = {
    "cc": "catmull-clark", "catmull-clark": "catmull-clark",
    "catmullclark": "catmull-clark",
    "ds": "doo-sabin", "doo-sabin": "doo-sabin", "doosabin": "doo-sabin",
    "loop": "loop",
    "kobbelt": "kobbelt",
    "butterfly": "butterfly",
}

TRIANGLE_SCHEMES = {"loop", "butterfly"}
QUAD_SCHEMES = {"kobbelt"}
INTERPOLATORY_SCHEMES = {"kobbelt", "butterfly"}


def canonical_scheme(name: str) -> str:
    key = name.strip().lower()
    if key not in SCHEME_ALIASES:
        raise UnknownScheme(f"unknown surface scheme {name!r}")
    return SCHEME_ALIASES[key]


# -- topology ------------------------------------------------------------------

class MeshTopology:
    """Edge/vertex adjacency queried by all stencil builders."""

    def __init__(self, mesh: PNMesh):
        self.mesh = mesh
        edge_ids: dict[tuple[int, int], int] = {}
        edge_verts: list[tuple[int, int]] = []
        edge_faces: list[list[tuple[int, bool]]] = []
        vertex_faces: list[list[int]] = [[] for _ in range(mesh.vertex_count)]
        vertex_edges: list[list[int]] = [[] for _ in range(mesh.vertex_count)]
        directed: dict[tuple[int, int], int] = {}
        for fi, f in enumerate(mesh.faces):
            k = len(f)
            for t in range(k):
                a, b = int(f[t]), int(f[(t + 1) % k])
                directed[(a, b)] = fi
                key = (a, b) if a < b else (b, a)
                eid = edge_ids.get(key)
                if eid is None:
                    eid = len(edge_verts)
                    edge_ids[key] = eid
                    edge_verts.append(key)
                    edge_faces.append([])
                    vertex_edges[key[0]].append(eid)
                    vertex_edges[key[1]].append(eid)
                edge_faces[eid].append((fi, a < b))
                vertex_faces[int(f[t])].append(fi)
        self.edge_ids = edge_ids
        self.edge_verts = edge_verts
        self.edge_faces = edge_faces
        self.vertex_faces = vertex_faces
        self.vertex_edges = vertex_edges
        self.directed = directed
        self.valence = np.array([len(e) for e in vertex_edges], dtype=int)
        self.boundary_vertex = np.zeros(mesh.vertex_count, dtype=bool)
        for eid, uses in enumerate(edge_faces):
            if len(uses) == 1:
                a, b = edge_verts[eid]
                self.boundary_vertex[a] = True
                self.boundary_vertex[b] = True

    def edge_id(self, a: int, b: int) -> int:
        return self.edge_ids[(a, b) if a < b else (b, a)]

    def is_boundary_edge(self, eid: int) -> bool:
        return len(self.edge_faces[eid]) == 1

    def is_interior_vertex(self, v: int) -> bool:
        return not self.boundary_vertex[v]

    def face_across(self, fid: int, a: int, b: int) -> int | None:
        """The other face sharing edge (a, b), or None at the boundary."""
        for gf, _ in self.edge_faces[self.edge_id(a, b)]:
            if gf != fid:
                return gf
        return None

    def face_ring_from(self, fid: int, v: int) -> list[int]:
        """Face ring rotated so that v comes first."""
        f = list(map(int, self.mesh.faces[fid]))
        i = f.index(v)
        return f[i:] + f[:i]

    def vertex_star(self, v: int) -> list[list[int]] | None:
        """Faces around interior vertex v, each rotated to start at v, in
        cyclic order: face k's last ring entry is face k+1's first neighbor.

        Returns None for boundary vertices or when the walk fails (bad
        orientation / non-manifold star).
        """
        if self.boundary_vertex[v] or not self.vertex_faces[v]:
            return None
        start = self.vertex_faces[v][0]
        order = []
        fid = start
        seen = set()
        for _ in range(len(self.vertex_faces[v]) + 1):
            ring = self.face_ring_from(fid, v)
            order.append(ring)
            incoming = ring[-1]  # face winds ... -> incoming -> v
            nxt = self.face_across(fid, v, incoming)
            if nxt is None:
                return None
            if nxt == start:
                return order if len(order) == len(self.vertex_faces[v]) else None
            if nxt in seen:
                return None
            seen.add(fid)
            fid = nxt
        return None

    def quad_star(self, v: int) -> tuple[list[int], list[int], list[int]] | None:
        """(edge neighbors e_k, diagonals d_k, faces) around an interior
        vertex of an all-quad star, ordered so face k is (v, e_k, d_k, e_k+1).
        """
        star = self.vertex_star(v)
        if star is None or any(len(r) != 4 for r in star):
            return None
        e = [r[1] for r in star]
        d = [r[2] for r in star]
        faces = [self.directed[(v, r[1])] for r in star]
        return e, d, faces

    def tri_star(self, v: int) -> tuple[list[int], list[int]] | None:
        """(ring neighbors e_k, faces) around an interior all-triangle star,
        ordered so face k is (v, e_k, e_k+1)."""
        star = self.vertex_star(v)
        if star is None or any(len(r) != 3 for r in star):
            return None
        e = [r[1] for r in star]
        faces = [self.directed[(v, r[1])] for r in star]
        return e, faces

    def boundary_neighbors(self, v: int) -> list[int]:
        out = []
        for eid in self.vertex_edges[v]:
            if self.is_boundary_edge(eid):
                a, b = self.edge_verts[eid]
                out.append(b if a == v else a)
        return out

    def third_vertex(self, fid: int, a: int, b: int) -> int:
        f = self.mesh.faces[fid]
        for x in f:
            if int(x) != a and int(x) != b:
                return int(x)
        raise ValueError("degenerate triangle")

    def opposite_edge_vertex(self, v: int, b: int) -> int | None:
        """In an interior valence-4 all-quad star, the neighbor of v on the
        grid line through edge (v, b): the edge at v sharing no face with
        (v, b).  None when the star is not a regular quad cross."""
        star = self.quad_star(v)
        if star is None:
            return None
        e, _, _ = star
        if len(e) != 4 or b not in e:
            return None
        return e[(e.index(b) + 2) % 4]


# -- row assembly -----------------------------------------------------------------

class _Builder:
    """Accumulates sparse affine rows plus provenance."""

    def __init__(self, old_count: int):
        self.old_count = old_count
        self.rows = array("q")
        self.cols = array("q")
        self.wts = array("d")
        self.kinds = array("B")
        self.src_a = array("q")
        self.src_b = array("q")
        self.count = 0

    def add(self, weights: dict[int, float], kind: int,
            source: tuple[int, int] = (-1, -1)) -> int:
        i = self.count
        self.count += 1
        for c, w in weights.items():
            if w != 0.0:
                self.rows.append(i)
                self.cols.append(c)
                self.wts.append(w)
        self.kinds.append(kind)
        self.src_a.append(source[0])
        self.src_b.append(source[1])
        return i

    def finish(self, new_faces: list[list[int]] | FaceArray) -> "StencilSet":
        mat = sp.coo_matrix(
            (np.asarray(self.wts),
             (np.asarray(self.rows), np.asarray(self.cols))),
            shape=(self.count, self.old_count),
        ).tocsr()
        faces = new_faces if isinstance(new_faces, FaceArray) \
            else FaceArray(new_faces)
        return StencilSet(
            matrix=mat,
            new_faces=faces,
            kinds=np.asarray(self.kinds),
            source=np.stack(
                [np.asarray(self.src_a), np.asarray(self.src_b)], axis=1
            ) if self.count else np.zeros((0, 2), dtype=np.int64),
        )


def _combine(terms) -> dict[int, float]:
    """Affine combination of rows; a bare int means the identity row."""
    out: dict[int, float] = {}
    for coef, row in terms:
        if isinstance(row, dict):
            for c, w in row.items():
                out[c] = out.get(c, 0.0) + coef * w
        else:
            out[row] = out.get(row, 0.0) + coef
    return out


class StencilSet:
    """One refinement round: affine rows, refined faces, provenance."""

    def __init__(self, matrix: sp.csr_matrix, new_faces: FaceArray,
                 kinds: np.ndarray, source: np.ndarray):
        self.matrix = matrix
        self.new_faces = new_faces
        self.kinds = kinds
        self.source = source

    @property
    def new_vertex_count(self) -> int:
        return self.matrix.shape[0]

    def kind_name(self, i: int) -> str:
        return KIND_NAMES[self.kinds[i]]

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        sl = slice(self.matrix.indptr[i], self.matrix.indptr[i + 1])
        return self.matrix.indices[sl], self.matrix.data[sl]

    def stencils(self) -> list[list[tuple[int, float]]]:
        return [
            [(int(c), float(w)) for c, w in zip(*self.row(i))]
            for i in range(self.new_vertex_count)
        ]

    @cached_property
    def vertex_point(self) -> dict[int, int]:
        """old vertex id -> new index of its vertex-point / kept copy."""
        mask = (self.kinds == KIND_VERTEX) | (self.kinds == KIND_INTERP)
        return {int(a): int(i) for i, a in
                zip(np.nonzero(mask)[0], self.source[mask, 0])}

    @cached_property
    def edge_point(self) -> dict[tuple[int, int], int]:
        mask = self.kinds == KIND_EDGE
        return {
            (int(a), int(b)): int(i)
            for i, (a, b) in zip(np.nonzero(mask)[0], self.source[mask])
        }

    @cached_property
    def face_point(self) -> dict[int, int]:
        mask = self.kinds == KIND_FACE
        return {int(a): int(i) for i, a in
                zip(np.nonzero(mask)[0], self.source[mask, 0])}

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()


Override = dict[tuple[str, int], dict[int, float]]


# -- Catmull-Clark -----------------------------------------------------------------

def stencils_catmull_clark(mesh: PNMesh, overrides: Override | None = None
                           ) -> StencilSet:
    """Classical Catmull-Clark rules on any-arity polygonal meshes.

    Face points are centroids, edge points average the edge ends with the
    two adjacent face points, and interior vertex points use the valence-n
    rule (Q + 2R + (n-3)S)/n.  ``overrides`` replaces selected rows (keyed
    ``("v", vertex)``, ``("e", (a, b))`` with a < b, ``("f", face id)``) and
    is how the eigenvalue-tuned variants inject modified stencils.

    Row layout is fixed: vertex points 0..V-1, edge points V..V+E-1 (edges
    in lexicographic vertex order), face points after that.  Everything
    regular is assembled with flat array arithmetic; only boundary and
    overridden rows drop to per-element code.
    """
    overrides = overrides or {}
    V = mesh.vertex_count
    F = mesh.face_count
    head = mesh.faces.indices
    foc = mesh.faces.face_of_corner()
    arities = mesh.faces.arities()
    offsets = mesh.faces.offsets
    aoc = np.repeat(arities, arities)
    edge_verts, eoc, counts = mesh.undirected_edges()
    E = edge_verts.shape[0]

    valence = np.bincount(edge_verts.ravel(), minlength=V)
    boundary_edge = counts == 1
    boundary_vertex = np.zeros(V, dtype=bool)
    boundary_vertex[edge_verts[boundary_edge].ravel()] = True
    has_face = np.bincount(head, minlength=V) > 0

    edge_keys = edge_verts[:, 0] * V + edge_verts[:, 1]

    def edge_index(a: int, b: int) -> int:
        if a > b:
            a, b = b, a
        return int(np.searchsorted(edge_keys, a * V + b))

    ov_v = np.zeros(V, dtype=bool)
    ov_e = np.zeros(E, dtype=bool)
    ov_f = np.zeros(F, dtype=bool)
    for key in overrides:
        tag, ident = key
        if tag == "v":
            ov_v[ident] = True
        elif tag == "e":
            ov_e[edge_index(*ident)] = True
        elif tag == "f":
            ov_f[ident] = True

    R: list[np.ndarray] = []
    C: list[np.ndarray] = []
    W: list[np.ndarray] = []

    def emit(rows, cols, wts):
        R.append(np.asarray(rows, dtype=np.int64))
        C.append(np.asarray(cols, dtype=np.int64))
        W.append(np.asarray(wts, dtype=float))

    # interior vertex points
    emit_v = has_face & ~boundary_vertex & (valence >= 3) & ~ov_v
    idx = np.nonzero(emit_v)[0]
    emit(idx, idx, (valence[idx] - 2.0) / valence[idx])
    both_a = np.concatenate([edge_verts[:, 0], edge_verts[:, 1]])
    both_b = np.concatenate([edge_verts[:, 1], edge_verts[:, 0]])
    keep = emit_v[both_a]
    emit(both_a[keep], both_b[keep],
         1.0 / valence[both_a[keep]].astype(float) ** 2)

    for m in np.unique(arities) if arities.size else []:
        group = np.nonzero(arities == m)[0]
        starts = offsets[group]
        ring = head[starts[:, None] + np.arange(m)[None, :]]
        rows = np.repeat(ring.ravel(), m)
        cols = np.tile(ring, (1, m)).ravel()
        keep = emit_v[rows]
        rows, cols = rows[keep], cols[keep]
        emit(rows, cols, 1.0 / (valence[rows].astype(float) ** 2 * m))
        # interior edge points: each corner whose edge is interior feeds the
        # face ring at 1/(4m)
        ering = eoc[starts[:, None] + np.arange(m)[None, :]]
        erows = np.repeat(ering.ravel(), m)
        keep = ~boundary_edge[erows] & ~ov_e[erows]
        emit(V + erows[keep], cols0 := np.tile(ring, (1, m)).ravel()[keep],
             np.full(cols0.shape[0], 1.0 / (4.0 * m)))

    # edge endpoints
    interior_e = ~boundary_edge & ~ov_e
    ie = np.nonzero(interior_e)[0]
    emit(V + ie, edge_verts[ie, 0], np.full(ie.size, 0.25))
    emit(V + ie, edge_verts[ie, 1], np.full(ie.size, 0.25))
    be = np.nonzero(boundary_edge & ~ov_e)[0]
    emit(V + be, edge_verts[be, 0], np.full(be.size, 0.5))
    emit(V + be, edge_verts[be, 1], np.full(be.size, 0.5))

    # face centroids
    keep = ~ov_f[foc]
    emit(V + E + foc[keep], head[keep], 1.0 / aoc[keep])

    # boundary / degenerate vertex rows
    special = np.nonzero(~emit_v & ~ov_v)[0]
    if special.size:
        bnd_neighbors: dict[int, list[int]] = {}
        for eid in np.nonzero(boundary_edge)[0]:
            a, bb = map(int, edge_verts[eid])
            bnd_neighbors.setdefault(a, []).append(bb)
            bnd_neighbors.setdefault(bb, []).append(a)
        for v in special:
            v = int(v)
            nb = bnd_neighbors.get(v, [])
            if boundary_vertex[v] and len(nb) == 2 and valence[v] > 2:
                emit([v, v, v], [v, nb[0], nb[1]], [0.75, 0.125, 0.125])
            else:
                emit([v], [v], [1.0])  # corner or isolated: pinned

    # overridden rows
    for (tag, ident), row in overrides.items():
        if tag == "v":
            rid = int(ident)
        elif tag == "e":
            rid = V + edge_index(*ident)
        else:
            rid = V + E + int(ident)
        cols = np.fromiter(row.keys(), dtype=np.int64, count=len(row))
        wts = np.fromiter(row.values(), dtype=float, count=len(row))
        emit(np.full(cols.size, rid), cols, wts)

    matrix = sp.coo_matrix(
        (np.concatenate(W), (np.concatenate(R), np.concatenate(C))),
        shape=(V + E + F, V),
    ).tocsr()

    # refined faces: one quad per corner
    prev_eoc = np.empty_like(eoc)
    if eoc.size:
        prev_eoc[1:] = eoc[:-1]
        prev_eoc[offsets[:-1]] = eoc[offsets[1:] - 1]
    quads = np.stack(
        [head, V + eoc, V + E + foc, V + prev_eoc], axis=1
    ).astype(np.int64)
    new_faces = FaceArray(
        indices=quads.ravel(),
        offsets=np.arange(quads.shape[0] + 1, dtype=np.int64) * 4,
    )

    kinds = np.concatenate([
        np.full(V, KIND_VERTEX, dtype=np.uint8),
        np.full(E, KIND_EDGE, dtype=np.uint8),
        np.full(F, KIND_FACE, dtype=np.uint8),
    ])
    source = np.concatenate([
        np.stack([np.arange(V), np.full(V, -1)], axis=1),
        edge_verts,
        np.stack([np.arange(F), np.full(F, -1)], axis=1),
    ]).astype(np.int64)
    return StencilSet(matrix=matrix, new_faces=new_faces, kinds=kinds,
                      source=source)


# -- Doo-Sabin ----------------------------------------------------------------------

def _doo_sabin_weights(m: int) -> np.ndarray:
    w = np.array([(3.0 + 2.0 * math.cos(2.0 * math.pi * k / m)) / (4.0 * m)
                  for k in range(m)])
    w[0] = (m + 5.0) / (4.0 * m)
    return w


def stencils_doo_sabin(mesh: PNMesh) -> StencilSet:
    """Dual corner-cutting: one new vertex per (face, corner) pair.

    Faces of the refined mesh come from old faces, interior edges and
    interior vertices; boundary faces are trimmed.
    """
    topo = MeshTopology(mesh)
    b = _Builder(mesh.vertex_count)

    corner: dict[tuple[int, int], int] = {}
    for fid, f in enumerate(mesh.faces):
        ring = list(map(int, f))
        m = len(ring)
        w = _doo_sabin_weights(m)
        for t, v in enumerate(ring):
            row = {ring[(t + k) % m]: float(w[k]) for k in range(m)}
            corner[(fid, v)] = b.add(row, KIND_DUAL, (fid, v))

    new_faces = []
    for fid, f in enumerate(mesh.faces):
        new_faces.append([corner[(fid, int(v))] for v in f])
    for eid, (x, y) in enumerate(topo.edge_verts):
        uses = topo.edge_faces[eid]
        if len(uses) != 2:
            continue
        f_ab = topo.directed.get((x, y))
        f_ba = topo.directed.get((y, x))
        if f_ab is None or f_ba is None:
            continue  # inconsistent orientation; skip the edge face
        new_faces.append([
            corner[(f_ab, x)], corner[(f_ba, x)],
            corner[(f_ba, y)], corner[(f_ab, y)],
        ])
    for v in range(mesh.vertex_count):
        star = topo.vertex_star(v)
        if star is None or len(star) < 3:
            continue
        ring = [corner[(topo.directed[(v, r[1])], v)] for r in star]
        new_faces.append(ring)
    return b.finish(new_faces)


# -- Loop ----------------------------------------------------------------------------

def _loop_beta(n: int) -> float:
    c = 0.375 + 0.25 * math.cos(2.0 * math.pi / n)
    return (0.625 - c * c) / n


def stencils_loop(mesh: PNMesh, overrides: Override | None = None) -> StencilSet:
    """Loop's triangle rules with cubic-spline boundary treatment."""
    arities = mesh.faces.arities()
    if arities.size and set(arities.tolist()) != {3}:
        raise WrongFaceArity("loop subdivision needs a pure triangle mesh")
    topo = MeshTopology(mesh)
    b = _Builder(mesh.vertex_count)
    overrides = overrides or {}

    vp = {}
    for v in range(mesh.vertex_count):
        n = int(topo.valence[v])
        row = overrides.get(("v", v))
        if row is None:
            if topo.boundary_vertex[v]:
                nb = topo.boundary_neighbors(v)
                if len(nb) == 2 and n > 2:
                    row = {v: 0.75, nb[0]: 0.125, nb[1]: 0.125}
                else:
                    row = {v: 1.0}
            elif n >= 3:
                beta = _loop_beta(n)
                row = {v: 1.0 - n * beta}
                for eid in topo.vertex_edges[v]:
                    a, bb = topo.edge_verts[eid]
                    row[bb if a == v else a] = beta
            else:
                row = {v: 1.0}
        vp[v] = b.add(row, KIND_VERTEX, (v, -1))

    ep = {}
    for eid, (x, y) in enumerate(topo.edge_verts):
        row = overrides.get(("e", (x, y) if x < y else (y, x)))
        if row is None:
            uses = topo.edge_faces[eid]
            if len(uses) == 2:
                row = {x: 0.375, y: 0.375}
                for fid, _ in uses:
                    c = topo.third_vertex(fid, x, y)
                    row[c] = row.get(c, 0.0) + 0.125
            else:
                row = {x: 0.5, y: 0.5}
        ep[eid] = b.add(row, KIND_EDGE, (x, y))

    new_faces = _triangle_split_faces(mesh, topo, vp, ep)
    return b.finish(new_faces)


def _triangle_split_faces(mesh, topo, vp, ep):
    faces = []
    for f in mesh.faces:
        a, bb, c = map(int, f)
        eab, ebc, eca = (topo.edge_id(a, bb), topo.edge_id(bb, c),
                         topo.edge_id(c, a))
        faces.append([vp[a], ep[eab], ep[eca]])
        faces.append([vp[bb], ep[ebc], ep[eab]])
        faces.append([vp[c], ep[eca], ep[ebc]])
        faces.append([ep[eab], ep[ebc], ep[eca]])
    return faces


# -- Butterfly -----------------------------------------------------------------------

def _zorin_ring_weights(n: int) -> np.ndarray:
    if n == 3:
        return np.array([5.0 / 12.0, -1.0 / 12.0, -1.0 / 12.0])
    if n == 4:
        return np.array([0.375, 0.0, -0.125, 0.0])
    j = np.arange(n)
    return (0.25 + np.cos(2 * np.pi * j / n)
            + 0.5 * np.cos(4 * np.pi * j / n)) / n


def stencils_butterfly(mesh: PNMesh) -> StencilSet:
    """Interpolatory butterfly rules with the valence-adapted stencils at
    extraordinary vertices and 4-point boundary treatment."""
    arities = mesh.faces.arities()
    if arities.size and set(arities.tolist()) != {3}:
        raise WrongFaceArity("butterfly subdivision needs a triangle mesh")
    topo = MeshTopology(mesh)
    b = _Builder(mesh.vertex_count)

    vp = {v: b.add({v: 1.0}, KIND_INTERP, (v, -1))
          for v in range(mesh.vertex_count)}

    def outer_row(fid: int, x: int, y: int, missing: int) -> dict[int, float]:
        # third vertex of the face across (x, y); reflected when absent
        g = topo.face_across(fid, x, y)
        if g is None:
            return _combine([(1.0, x), (1.0, y), (-1.0, missing)])
        return {topo.third_vertex(g, x, y): 1.0}

    def regular_row(x: int, y: int, fxy: int, fyx: int) -> dict[int, float]:
        c = topo.third_vertex(fxy, x, y)
        d = topo.third_vertex(fyx, x, y)
        terms = [(0.5, x), (0.5, y), (0.125, c), (0.125, d)]
        for fid, (u, w) in ((fxy, (x, c)), (fxy, (y, c)),
                            (fyx, (x, d)), (fyx, (y, d))):
            other = y if u == x else x
            terms.append((-0.0625, outer_row(fid, u, w, other)))
        return _combine(terms)

    def extraordinary_row(v: int, other: int) -> dict[int, float] | None:
        star = topo.tri_star(v)
        if star is None:
            return None
        ring, _ = star
        if other not in ring:
            return None
        k = ring.index(other)
        ring = ring[k:] + ring[:k]
        s = _zorin_ring_weights(len(ring))
        row = {v: 0.75}
        for w, e in zip(s, ring):
            row[e] = row.get(e, 0.0) + float(w)
        return row

    ep = {}
    for eid, (x, y) in enumerate(topo.edge_verts):
        uses = topo.edge_faces[eid]
        if len(uses) == 1:
            row = _boundary_four_point(topo, x, y)
        else:
            fxy = topo.directed.get((x, y), uses[0][0])
            fyx = topo.directed.get((y, x), uses[-1][0])
            ext_x = topo.is_interior_vertex(x) and topo.valence[x] != 6
            ext_y = topo.is_interior_vertex(y) and topo.valence[y] != 6
            row = None
            if ext_x and ext_y:
                rx = extraordinary_row(x, y)
                ry = extraordinary_row(y, x)
                if rx is not None and ry is not None:
                    row = _combine([(0.5, rx), (0.5, ry)])
            elif ext_x:
                row = extraordinary_row(x, y)
            elif ext_y:
                row = extraordinary_row(y, x)
            if row is None:
                row = regular_row(x, y, fxy, fyx)
        ep[eid] = b.add(row, KIND_EDGE, (x, y))

    new_faces = _triangle_split_faces(mesh, topo, vp, ep)
    return b.finish(new_faces)


def _boundary_four_point(topo: MeshTopology, x: int, y: int) -> dict[int, float]:
    """4-point rule along the boundary polyline through edge (x, y)."""
    def beyond(v: int, inward: int):
        for w in topo.boundary_neighbors(v):
            if w != inward:
                return w
        return None

    px = beyond(x, y)
    py = beyond(y, x)
    rx = {px: 1.0} if px is not None else _combine([(2.0, x), (-1.0, y)])
    ry = {py: 1.0} if py is not None else _combine([(2.0, y), (-1.0, x)])
    return _combine([(-0.0625, rx), (0.5625, x), (0.5625, y), (-0.0625, ry)])


# -- Kobbelt -------------------------------------------------------------------------

def stencils_kobbelt(mesh: PNMesh) -> StencilSet:
    """Interpolatory 4-point rules on quad meshes, tensor-product style.

    Edge points apply the univariate 4-point rule along the grid line of the
    edge; face points apply it across the face to the surrounding edge
    points, averaged over the two directions.  Rows beyond extraordinary
    vertices or boundaries use affine reflection.
    """
    arities = mesh.faces.arities()
    if arities.size and set(arities.tolist()) != {4}:
        raise WrongFaceArity("kobbelt subdivision needs a pure quad mesh")
    topo = MeshTopology(mesh)
    b = _Builder(mesh.vertex_count)

    vp = {v: b.add({v: 1.0}, KIND_INTERP, (v, -1))
          for v in range(mesh.vertex_count)}

    def beyond(v: int, other: int, boundary: bool) -> dict[int, float]:
        if boundary:
            for w in topo.boundary_neighbors(v):
                if w != other:
                    return {w: 1.0}
            return _combine([(2.0, v), (-1.0, other)])
        w = topo.opposite_edge_vertex(v, other)
        if w is None:
            return _combine([(2.0, v), (-1.0, other)])
        return {w: 1.0}

    ep_rows: list[dict[int, float]] = []
    ep = {}
    for eid, (x, y) in enumerate(topo.edge_verts):
        boundary = topo.is_boundary_edge(eid)
        row = _combine([
            (-0.0625, beyond(x, y, boundary)),
            (0.5625, x), (0.5625, y),
            (-0.0625, beyond(y, x, boundary)),
        ])
        ep_rows.append(row)
        ep[eid] = -1  # filled after face points exist (stable numbering)

    # face points: 4-point across the stored edge-point rows, both directions
    def edge_row(a: int, c: int) -> dict[int, float]:
        return ep_rows[topo.edge_id(a, c)]

    def across(fid: int, a: int, c: int, oa: int, oc: int) -> dict[int, float]:
        """Edge-point row beyond edge (a, c), i.e. the opposite edge of the
        neighbor face across (a, c); reflected when that face is missing."""
        g = topo.face_across(fid, a, c)
        if g is None:
            return _combine([(2.0, edge_row(a, c)), (-1.0, edge_row(oa, oc))])
        ring = topo.face_ring_from(g, a)
        # opposite edge of (a, c) within quad g = (a, p, q, r): edge (p, q)
        # when c == r, else (q, r)
        _, p, q, r = ring
        if c == r:
            return edge_row(p, q)
        return edge_row(q, r)

    fp_rows = []
    for fid, f in enumerate(mesh.faces):
        v0, v1, v2, v3 = map(int, f)
        rows = []
        for (a, c), (oa, oc) in (((v0, v1), (v3, v2)), ((v1, v2), (v0, v3))):
            e0 = edge_row(a, c)
            e1 = edge_row(oa, oc)
            rows.append(_combine([
                (-0.0625, across(fid, a, c, oa, oc)),
                (0.5625, e0), (0.5625, e1),
                (-0.0625, across(fid, oa, oc, a, c)),
            ]))
        fp_rows.append(_combine([(0.5, rows[0]), (0.5, rows[1])]))

    for eid, (x, y) in enumerate(topo.edge_verts):
        ep[eid] = b.add(ep_rows[eid], KIND_EDGE, (x, y))
    fp = {fid: b.add(row, KIND_FACE, (fid, -1))
          for fid, row in enumerate(fp_rows)}

    new_faces = []
    for fid, f in enumerate(mesh.faces):
        m = len(f)
        for t in range(m):
            v = int(f[t])
            e_next = topo.edge_id(v, int(f[(t + 1) % m]))
            e_prev = topo.edge_id(int(f[(t - 1) % m]), v)
            new_faces.append([vp[v], ep[e_next], fp[fid], ep[e_prev]])
    return b.finish(new_faces)


BUILDERS = {
    "catmull-clark": stencils_catmull_clark,
    "doo-sabin": stencils_doo_sabin,
    "loop": stencils_loop,
    "kobbelt": stencils_kobbelt,
    "butterfly": stencils_butterfly,
}


def build_stencils(mesh: PNMesh, scheme: str, overrides: Override | None = None
                   ) -> StencilSet:
    name = canonical_scheme(scheme)
    if overrides:
        if name not in ("catmull-clark", "loop"):
            raise UnknownScheme(f"{name} has no modified variant")
        return BUILDERS[name](mesh, overrides=overrides)
    return BUILDERS[name](mesh)
