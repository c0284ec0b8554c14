"""Canonical control meshes and polygons sampled from analytic shapes.

These feed the test corpus, the acceptance suite and the CLI demos: circles
with uneven sampling, cylinder and torus grids with analytic normals, the
tetrahedron with radial normals, and a hyperbolic sheet with a single
valence-8 vertex for the flat-point experiments.
"""

from __future__ import annotations

import numpy as np

from .curves import PNPolygon
from .meshes import PNMesh


def circle_polygon(count: int = 8, uneven: bool = True, seed: int = 7,
                   radius: float = 1.0) -> PNPolygon:
    """Closed polygon sampled on a circle in z=0, normals pointing outward."""
    if uneven:
        rng = np.random.default_rng(seed)
        theta = np.sort(rng.uniform(0.0, 2.0 * np.pi, count))
        # keep samples separated so no stencil straddles a near-duplicate
        theta = (theta + np.linspace(0, 2 * np.pi, count, endpoint=False)) / 2.0
    else:
        theta = np.linspace(0, 2 * np.pi, count, endpoint=False)
    normals = np.stack([np.cos(theta), np.sin(theta), np.zeros(count)], axis=1)
    return PNPolygon(radius * normals, normals, closed=True)


def quad_grid(nx: int, ny: int, spacing: float = 1.0) -> PNMesh:
    """Open planar quad grid in z=0 with (nx+1)(ny+1) vertices."""
    xs = np.arange(nx + 1) * spacing
    ys = np.arange(ny + 1) * spacing
    pos = np.array([[x, y, 0.0] for y in ys for x in xs])
    faces = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            faces.append([a, a + 1, a + nx + 2, a + nx + 1])
    return PNMesh(pos, None, faces)


def tri_grid(nx: int, ny: int, spacing: float = 1.0) -> PNMesh:
    """Open planar triangle grid (each quad cell split along one diagonal)."""
    grid = quad_grid(nx, ny, spacing)
    faces = []
    for f in grid.faces:
        a, b, c, d = map(int, f)
        faces.append([a, b, c])
        faces.append([a, c, d])
    return PNMesh(grid.positions, None, faces)


def cube(size: float = 1.0, sphere_normals: bool = False) -> PNMesh:
    """Axis-aligned cube centered at the origin, outward-oriented quads."""
    s = size / 2.0
    pos = np.array([
        [-s, -s, -s], [s, -s, -s], [s, s, -s], [-s, s, -s],
        [-s, -s, s], [s, -s, s], [s, s, s], [-s, s, s],
    ])
    faces = [
        [0, 3, 2, 1],  # bottom (z = -s), outward = -z
        [4, 5, 6, 7],  # top
        [0, 1, 5, 4],  # front (y = -s)
        [1, 2, 6, 5],  # right
        [2, 3, 7, 6],  # back
        [3, 0, 4, 7],  # left
    ]
    normals = None
    if sphere_normals:
        normals = pos / np.linalg.norm(pos, axis=1, keepdims=True)
    return PNMesh(pos, normals, faces)


def tetrahedron(radius: float = 1.0, radial_normals: bool = True) -> PNMesh:
    """Regular tetrahedron inscribed in a sphere, outward-oriented."""
    pos = np.array([
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]) / np.sqrt(3.0) * radius
    faces = [[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]]
    normals = pos / np.linalg.norm(pos, axis=1, keepdims=True) \
        if radial_normals else None
    return PNMesh(pos, normals, faces)


def octahedron_sphere(subdiv: int, radius: float = 1.0) -> PNMesh:
    """Geodesic triangle mesh: octahedron faces split ``subdiv``^2-fold and
    projected onto the sphere.  Used as an analytic curvature target."""
    corners = np.array([
        [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1],
    ], dtype=float)
    oct_faces = [
        [4, 0, 2], [4, 2, 1], [4, 1, 3], [4, 3, 0],
        [5, 2, 0], [5, 1, 2], [5, 3, 1], [5, 0, 3],
    ]
    key_of: dict[tuple, int] = {}
    positions: list[np.ndarray] = []

    def vertex(p: np.ndarray) -> int:
        p = p / np.linalg.norm(p)
        key = tuple(np.round(p * 1e12).astype(np.int64))
        if key not in key_of:
            key_of[key] = len(positions)
            positions.append(p)
        return key_of[key]

    faces = []
    n = subdiv
    for fa, fb, fc in oct_faces:
        a, b, c = corners[fa], corners[fb], corners[fc]
        # barycentric lattice on the face
        idx = {}
        for i in range(n + 1):
            for j in range(n + 1 - i):
                p = a + (b - a) * (i / n) + (c - a) * (j / n)
                idx[(i, j)] = vertex(p)
        for i in range(n):
            for j in range(n - i):
                faces.append([idx[(i, j)], idx[(i + 1, j)], idx[(i, j + 1)]])
                if i + j < n - 1:
                    faces.append(
                        [idx[(i + 1, j)], idx[(i + 1, j + 1)], idx[(i, j + 1)]]
                    )
    pos = np.array(positions) * radius
    normals = np.array(positions)
    return PNMesh(pos, normals, faces)


def cylinder_quad_mesh(n_around: int = 8, n_axis: int = 4, radius: float = 1.0,
                       height: float = 2.0, with_normals: bool = True,
                       uneven: bool = False, seed: int = 3) -> PNMesh:
    """Open tube: quad mesh around a circular cylinder (axis z).

    Normals, when sampled, are the true horizontal cylinder normals.
    """
    if uneven:
        rng = np.random.default_rng(seed)
        theta = np.sort(rng.uniform(0, 2 * np.pi, n_around))
        theta = (theta + np.linspace(0, 2 * np.pi, n_around,
                                     endpoint=False)) / 2.0
        zs = np.sort(rng.uniform(0, height, n_axis + 1))
        zs = (zs + np.linspace(0, height, n_axis + 1)) / 2.0
    else:
        theta = np.linspace(0, 2 * np.pi, n_around, endpoint=False)
        zs = np.linspace(0, height, n_axis + 1)
    pos = []
    nrm = []
    for z in zs:
        for t in theta:
            c, s = np.cos(t), np.sin(t)
            pos.append([radius * c, radius * s, z])
            nrm.append([c, s, 0.0])
    faces = []
    for j in range(n_axis):
        for i in range(n_around):
            a = j * n_around + i
            b = j * n_around + (i + 1) % n_around
            faces.append([a, b, b + n_around, a + n_around])
    return PNMesh(np.array(pos), np.array(nrm) if with_normals else None, faces)


def torus_quad_mesh(n_major: int = 4, n_minor: int = 4, major: float = 2.0,
                    minor: float = 1.0, with_normals: bool = True) -> PNMesh:
    """Closed quad grid on a torus (axis z); every vertex is regular."""
    pos = []
    nrm = []
    for i in range(n_major):
        u = 2 * np.pi * i / n_major
        cu, su = np.cos(u), np.sin(u)
        for j in range(n_minor):
            v = 2 * np.pi * j / n_minor
            cv, sv = np.cos(v), np.sin(v)
            pos.append([(major + minor * cv) * cu,
                        (major + minor * cv) * su,
                        minor * sv])
            nrm.append([cv * cu, cv * su, sv])
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = i * n_minor + (j + 1) % n_minor
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = ((i + 1) % n_major) * n_minor + j
            faces.append([a, d, c, b])  # wound so face normals point outward
    return PNMesh(np.array(pos), np.array(nrm) if with_normals else None, faces)


def torus_meridian_indices(n_major: int = 4, n_minor: int = 4) -> list[list[int]]:
    """Vertex index rings of the minor (geodesic) circles of the torus grid."""
    return [
        [i * n_minor + j for j in range(n_minor)] for i in range(n_major)
    ]


def hyperbolic_sheet(valence: int = 8, rings: int = 2, spread: float = 1.0,
                     with_normals: bool = False) -> PNMesh:
    """Quad mesh over z = 2xy with one central vertex of the given valence.

    The parameter domain is split into ``valence`` wedge sectors, each
    carrying a ``rings`` x ``rings`` quad grid; all non-central interior
    vertices are regular.
    """
    if valence < 3:
        raise ValueError("valence must be >= 3")
    dirs = [
        np.array([np.cos(2 * np.pi * s / valence),
                  np.sin(2 * np.pi * s / valence)])
        for s in range(valence)
    ]
    key_of: dict[tuple[int, int, int], int] = {}
    pts2d: list[np.ndarray] = []

    def vertex(s: int, a: int, b: int) -> int:
        # (a, 0) of sector s is shared with (0, a) of sector s-1
        if b == 0 and a > 0:
            s, a, b = (s - 1) % valence, 0, a
        if a == 0 and b == 0:
            key = (-1, 0, 0)
        else:
            key = (s, a, b)
        if key not in key_of:
            d1, d2 = dirs[s], dirs[(s + 1) % valence]
            p = (a * d1 + b * d2) * (spread / rings)
            key_of[key] = len(pts2d)
            pts2d.append(p)
        return key_of[key]

    faces = []
    for s in range(valence):
        for a in range(rings):
            for b in range(rings):
                faces.append([
                    vertex(s, a, b), vertex(s, a + 1, b),
                    vertex(s, a + 1, b + 1), vertex(s, a, b + 1),
                ])
    xy = np.array(pts2d)
    x, y = xy[:, 0], xy[:, 1]
    pos = np.stack([x, y, 2.0 * x * y], axis=1)
    normals = None
    if with_normals:
        # surface normal of z = 2xy: (-2y, -2x, 1) normalized
        n = np.stack([-2.0 * y, -2.0 * x, np.ones_like(x)], axis=1)
        normals = n / np.linalg.norm(n, axis=1, keepdims=True)
    return PNMesh(pos, normals, faces)


def random_quad_mesh(seed: int, nx: int = 3, ny: int = 3) -> PNMesh:
    """Perturbed open quad grid with random unit normals (seeded)."""
    rng = np.random.default_rng(seed)
    mesh = quad_grid(nx, ny)
    pos = mesh.positions + rng.normal(scale=0.15, size=mesh.positions.shape)
    nrm = rng.normal(size=pos.shape)
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    return PNMesh(pos, nrm, mesh.faces.to_lists())


def random_tri_mesh(seed: int, nx: int = 3, ny: int = 3) -> PNMesh:
    rng = np.random.default_rng(seed)
    mesh = tri_grid(nx, ny)
    pos = mesh.positions + rng.normal(scale=0.15, size=mesh.positions.shape)
    nrm = rng.normal(size=pos.shape)
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    return PNMesh(pos, nrm, mesh.faces.to_lists())


def random_rotation(seed: int) -> np.ndarray:
    """Uniform-ish random rotation matrix (QR of a Gaussian sample)."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
