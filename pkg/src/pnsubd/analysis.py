"""Numerical verification utilities: primitive fits, discrete curvature,
decay-rate probes and mesh comparison.

Discrete curvature uses the standard angle-defect Gaussian and
cotangent-Laplacian mean operators with mixed Voronoi areas (quads are cut
along their shorter diagonal first).  That is accurate enough to verify
convergence toward analytic curvatures on refined primitives, which is all
the diagnostics need.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FitDiverged,
    NonPositiveEntry,
    TooFewPoints,
    TopologyMismatch,
)
from .meshes import PNMesh

PRIMITIVE_KINDS = ("plane", "circle", "sphere", "cylinder", "torus")
_MIN_POINTS = {"plane": 3, "circle": 3, "sphere": 4, "cylinder": 6, "torus": 8}


@dataclass
class PrimitiveFit:
    """Residuals of a point set against an analytic primitive."""

    kind: str
    parameters: dict
    max_residual: float
    rms_residual: float
    fitted: bool

    def as_dict(self) -> dict:
        params = {
            k: (list(map(float, v)) if np.ndim(v) else float(v))
            for k, v in self.parameters.items()
        }
        return {
            "kind": self.kind,
            "parameters": params,
            "max_residual": self.max_residual,
            "rms_residual": self.rms_residual,
            "fitted": self.fitted,
        }


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero axis")
    return v / n


def primitive_distances(points: np.ndarray, kind: str, params: dict) -> np.ndarray:
    """Orthogonal distances from points to the primitive."""
    p = np.asarray(points, dtype=float)
    if kind == "plane":
        c = np.asarray(params["center"], float)
        n = _unit(params["axis"])
        return np.abs((p - c) @ n)
    if kind == "sphere":
        c = np.asarray(params["center"], float)
        return np.abs(np.linalg.norm(p - c, axis=1) - params["radius"])
    if kind == "cylinder":
        c = np.asarray(params["center"], float)
        n = _unit(params["axis"])
        d = p - c
        axial = d @ n
        radial = np.linalg.norm(d - axial[:, None] * n[None, :], axis=1)
        return np.abs(radial - params["radius"])
    if kind == "circle":
        c = np.asarray(params["center"], float)
        n = _unit(params["axis"])
        d = p - c
        axial = d @ n
        radial = np.linalg.norm(d - axial[:, None] * n[None, :], axis=1)
        return np.sqrt((radial - params["radius"]) ** 2 + axial**2)
    if kind == "torus":
        c = np.asarray(params["center"], float)
        n = _unit(params["axis"])
        d = p - c
        axial = d @ n
        radial = np.linalg.norm(d - axial[:, None] * n[None, :], axis=1)
        tube = np.sqrt((radial - params["major_radius"]) ** 2 + axial**2)
        return np.abs(tube - params["minor_radius"])
    raise ValueError(f"unknown primitive kind {kind!r}")


def _fit_plane(p: np.ndarray) -> dict:
    center = p.mean(axis=0)
    _, _, vt = np.linalg.svd(p - center, full_matrices=False)
    return {"center": center, "axis": vt[-1]}


def _fit_sphere(p: np.ndarray) -> dict:
    # linear least squares on |x|^2 = 2 c.x + (r^2 - |c|^2)
    A = np.hstack([2.0 * p, np.ones((p.shape[0], 1))])
    b = (p**2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    center = sol[:3]
    r2 = sol[3] + center @ center
    if r2 <= 0.0:
        raise FitDiverged("sphere fit produced a nonpositive radius")
    return {"center": center, "radius": float(np.sqrt(r2))}


def _fit_circle(p: np.ndarray) -> dict:
    plane = _fit_plane(p)
    n = plane["axis"]
    c0 = plane["center"]
    # orthonormal frame of the plane
    u = np.cross(n, [1.0, 0.0, 0.0])
    if np.linalg.norm(u) < 1e-8:
        u = np.cross(n, [0.0, 1.0, 0.0])
    u = _unit(u)
    v = np.cross(n, u)
    q = np.stack([(p - c0) @ u, (p - c0) @ v], axis=1)
    A = np.hstack([2.0 * q, np.ones((q.shape[0], 1))])
    b = (q**2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    cc = sol[:2]
    r2 = sol[2] + cc @ cc
    if r2 <= 0.0:
        raise FitDiverged("circle fit produced a nonpositive radius")
    center = c0 + cc[0] * u + cc[1] * v
    return {"center": center, "axis": n, "radius": float(np.sqrt(r2))}


def _fit_cylinder(p: np.ndarray) -> dict:
    from scipy.optimize import least_squares

    center = p.mean(axis=0)
    spread = p - center
    _, _, vt = np.linalg.svd(spread, full_matrices=False)
    axis0 = vt[0]  # dominant direction as the axis seed

    def residual(x):
        c = x[:3]
        n = x[3:6]
        ln = np.linalg.norm(n)
        if ln == 0.0:
            return np.full(p.shape[0], 1e6)
        n = n / ln
        d = p - c
        radial = np.linalg.norm(
            d - (d @ n)[:, None] * n[None, :], axis=1
        )
        return radial - x[6]

    d0 = p - center
    r0 = float(np.median(np.linalg.norm(
        d0 - (d0 @ axis0)[:, None] * axis0[None, :], axis=1)))
    x0 = np.concatenate([center, axis0, [max(r0, 1e-6)]])
    res = least_squares(residual, x0, method="lm", max_nfev=2000)
    if not res.success or res.x[6] <= 0.0:
        raise FitDiverged("cylinder fit did not converge")
    return {
        "center": res.x[:3],
        "axis": _unit(res.x[3:6]),
        "radius": float(res.x[6]),
    }


def primitive_residual(points, kind: str, parameters: dict | None = None
                       ) -> PrimitiveFit:
    """Max/rms orthogonal distance to a primitive.

    With ``parameters`` supplied they are used verbatim; otherwise plane,
    circle, sphere and cylinder are least-squares fitted (centroid + PCA
    initialization).  The torus supports supplied parameters only.
    """
    p = np.asarray(points, dtype=float)
    if kind not in PRIMITIVE_KINDS:
        raise ValueError(f"unknown primitive kind {kind!r}")
    fitted = False
    if parameters is None:
        if p.shape[0] < _MIN_POINTS[kind]:
            raise TooFewPoints(
                f"{kind} fit needs >= {_MIN_POINTS[kind]} points"
            )
        if kind == "plane":
            parameters = _fit_plane(p)
        elif kind == "sphere":
            parameters = _fit_sphere(p)
        elif kind == "circle":
            parameters = _fit_circle(p)
        elif kind == "cylinder":
            parameters = _fit_cylinder(p)
        else:
            raise FitDiverged("torus fitting is not supported; supply "
                              "center/axis/major_radius/minor_radius")
        fitted = True
    dist = primitive_distances(p, kind, parameters)
    return PrimitiveFit(
        kind=kind,
        parameters=parameters,
        max_residual=float(dist.max()),
        rms_residual=float(np.sqrt((dist**2).mean())),
        fitted=fitted,
    )


# -- discrete curvature -----------------------------------------------------------

@dataclass
class CurvatureField:
    """Per-vertex discrete curvatures; boundary vertices carry NaN."""

    gaussian: np.ndarray
    mean: np.ndarray
    area_weights: np.ndarray
    interior: np.ndarray = field(default=None)

    def finite_gaussian(self) -> np.ndarray:
        return self.gaussian[self.interior]


def _triangulate(mesh: PNMesh) -> np.ndarray:
    """Triangle index array; quads split along their shorter diagonal,
    larger rings fanned from their first vertex."""
    P = mesh.positions
    arities = mesh.faces.arities()
    offsets = mesh.faces.offsets
    head = mesh.faces.indices
    blocks = []
    tri_starts = offsets[np.nonzero(arities == 3)[0]]
    if tri_starts.size:
        blocks.append(head[tri_starts[:, None] + np.arange(3)[None, :]])
    quad_starts = offsets[np.nonzero(arities == 4)[0]]
    if quad_starts.size:
        q = head[quad_starts[:, None] + np.arange(4)[None, :]]
        a, b, c, d = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
        ac = np.linalg.norm(P[a] - P[c], axis=1)
        bd = np.linalg.norm(P[b] - P[d], axis=1)
        first = np.where(ac[:, None] <= bd[:, None],
                         np.stack([a, b, c], axis=1),
                         np.stack([a, b, d], axis=1))
        second = np.where(ac[:, None] <= bd[:, None],
                          np.stack([a, c, d], axis=1),
                          np.stack([b, c, d], axis=1))
        blocks.append(first)
        blocks.append(second)
    other = np.nonzero(arities > 4)[0]
    if other.size:
        fans = []
        for fid in other:
            ring = list(map(int, mesh.faces[int(fid)]))
            for t in range(1, len(ring) - 1):
                fans.append([ring[0], ring[t], ring[t + 1]])
        blocks.append(np.asarray(fans, dtype=np.int64))
    if not blocks:
        return np.zeros((0, 3), dtype=np.int64)
    return np.concatenate(blocks, axis=0)


def discrete_curvature(mesh: PNMesh) -> CurvatureField:
    """Angle-defect Gaussian and cotangent-Laplacian mean curvature.

    Mixed Voronoi areas per Meyer et al.; the mean curvature sign is taken
    against an angle-weighted outward vertex normal, so convex surfaces with
    outward orientation report positive values.
    """
    tris = _triangulate(mesh)
    P = mesh.positions
    nv = mesh.vertex_count
    edge_verts, _, counts = mesh.undirected_edges()
    interior = np.ones(nv, dtype=bool)
    interior[edge_verts[counts == 1].ravel()] = False
    used = np.zeros(nv, dtype=bool)
    used[np.unique(tris)] = True
    interior &= used

    i0, i1, i2 = tris[:, 0], tris[:, 1], tris[:, 2]
    e0 = P[i2] - P[i1]  # edge opposite corner 0
    e1 = P[i0] - P[i2]
    e2 = P[i1] - P[i0]
    l0 = np.einsum("ij,ij->i", e0, e0)
    l1 = np.einsum("ij,ij->i", e1, e1)
    l2 = np.einsum("ij,ij->i", e2, e2)
    cross = np.cross(e2, -e1)
    double_area = np.linalg.norm(cross, axis=1)
    area = 0.5 * double_area
    ok = double_area > 1e-300

    def corner_angle(u, v):
        dots = np.einsum("ij,ij->i", u, v)
        crosses = np.linalg.norm(np.cross(u, v), axis=1)
        return np.arctan2(crosses, dots)

    a0 = corner_angle(e2, -e1)
    a1 = corner_angle(e0, -e2)
    a2 = corner_angle(e1, -e0)
    angles = np.stack([a0, a1, a2], axis=1)

    # cotangents of the corner angles
    with np.errstate(divide="ignore", invalid="ignore"):
        cot = np.cos(angles) / np.sin(angles)
    cot[~ok] = 0.0

    # mixed Voronoi areas
    areas = np.zeros(nv)
    obtuse = angles > 0.5 * np.pi
    any_obtuse = obtuse.any(axis=1)
    for k, (ia, lb, lc, cb, cc) in enumerate((
        (i0, l2, l1, 2, 1),
        (i1, l0, l2, 0, 2),
        (i2, l1, l0, 1, 0),
    )):
        voronoi = (lb * cot[:, cb] + lc * cot[:, cc]) / 8.0
        contrib = np.where(
            any_obtuse,
            np.where(obtuse[:, k], area / 2.0, area / 4.0),
            voronoi,
        )
        areas += np.bincount(ia, weights=np.where(ok, contrib, 0.0),
                             minlength=nv)

    defect = np.full(nv, 2.0 * np.pi)
    for k, ia in enumerate((i0, i1, i2)):
        defect -= np.bincount(ia, weights=np.where(ok, angles[:, k], 0.0),
                              minlength=nv)

    gaussian = np.full(nv, np.nan)
    good = interior & (areas > 0.0)
    gaussian[good] = defect[good] / areas[good]

    # cotangent mean-curvature vector: sum (cot a + cot b)(p_i - p_j) / (2A)
    hvec = np.zeros((nv, 3))
    for (ia, ib, ck) in ((i0, i1, 2), (i1, i0, 2),
                         (i1, i2, 0), (i2, i1, 0),
                         (i2, i0, 1), (i0, i2, 1)):
        w = np.where(ok, cot[:, ck], 0.0)
        part = 0.5 * w[:, None] * (P[ia] - P[ib])
        for c in range(3):
            hvec[:, c] += np.bincount(ia, weights=part[:, c], minlength=nv)

    from .refine import estimate_normals

    oriented = estimate_normals(mesh, overwrite=True).normals
    mean = np.full(nv, np.nan)
    hv = np.zeros(nv)
    # |K|/2 with K the Meyer mean-curvature normal: (1/(2A)) sum cot (pi-pj)
    hv[good] = np.linalg.norm(hvec[good], axis=1) / (2.0 * areas[good])
    sign = np.sign(np.einsum("ij,ij->i", hvec, oriented))
    sign[sign == 0.0] = 1.0
    mean[good] = hv[good] * sign[good]

    return CurvatureField(
        gaussian=gaussian, mean=mean, area_weights=areas, interior=good
    )


# -- sequences and comparisons ------------------------------------------------------

def decay_rate(norm_sequence) -> float:
    """Per-level contraction ratio from the tail of a norm sequence.

    Least-squares slope of ``log(s_k)`` against ``k`` over the last half of
    the sequence (transients in the early levels are ignored).
    """
    s = np.asarray(norm_sequence, dtype=float)
    if s.size < 4:
        raise TooFewPoints("need at least 4 entries")
    if np.any(s <= 0.0):
        raise NonPositiveEntry("norm sequence must be strictly positive")
    half = (s.size + 1) // 2
    tail = np.log(s[-half:])
    k = np.arange(tail.size, dtype=float)
    slope = np.polyfit(k, tail, 1)[0]
    return float(np.exp(slope))


def compare_meshes(a: PNMesh, b: PNMesh) -> float:
    """Max vertex-position distance between two topology-identical meshes."""
    if a.vertex_count != b.vertex_count:
        raise TopologyMismatch("vertex counts differ")
    if len(a.faces) != len(b.faces) or not np.array_equal(
        a.faces.indices, b.faces.indices
    ) or not np.array_equal(a.faces.offsets, b.faces.offsets):
        raise TopologyMismatch("face lists differ")
    if a.vertex_count == 0:
        return 0.0
    return float(np.linalg.norm(a.positions - b.positions, axis=1).max())
