"""Stencil-driven mesh refinement: linear, point-normal, and the
eigenvalue-tuned variants, plus normal estimation.

The point-normal update is fully vectorized over the sparse stencil
entries: positions and normals of a whole refinement round are produced by
a handful of segment sums, so large meshes stay cheap.
"""

from __future__ import annotations

import warnings

import numpy as np

from .curves import DEGENERATE_AVERAGE_TOL, HEIGHT_DENOMINATOR_GUARD
from .errors import DegenerateFace, DegenerateNormalWarning, UnsupportedVariant
from .meshes import PNMesh
from .stencils import StencilSet, build_stencils, canonical_scheme

VARIANTS = ("linear", "pn", "modified", "pn-modified")


def _refined_normals(s: StencilSet, normals: np.ndarray,
                     rows: np.ndarray, cols: np.ndarray):
    """Projected stencil averages of the control normals.

    Returns (unit normals with zero rows for "no normal", raw average
    lengths).  A vanishing average backed by nonzero normals falls back to a
    zero normal with a warning; the caller then uses the linear rule there.
    """
    count = s.new_vertex_count
    lin = s.matrix @ normals
    length = np.linalg.norm(lin, axis=1)
    flags = np.abs(normals[cols]).sum(axis=1) > 0.0
    has_input = np.bincount(rows, weights=flags, minlength=count) > 0.0
    degenerate = has_input & (length < DEGENERATE_AVERAGE_TOL)
    if np.any(degenerate):
        warnings.warn(
            f"{int(degenerate.sum())} refined normals degenerated "
            "(antipodal control normals); falling back to linear refinement "
            "there",
            DegenerateNormalWarning,
        )
    ok = has_input & ~degenerate
    unit = np.zeros_like(lin)
    unit[ok] = lin[ok] / length[ok, None]
    return unit, length


def linear_refine_mesh(mesh: PNMesh, s: StencilSet) -> PNMesh:
    """Positions by the stencil rows; normals by the same rows, projected."""
    pos = s.matrix @ mesh.positions
    coo = s.matrix.tocoo()
    normals, _ = _refined_normals(s, mesh.normals, coo.row, coo.col)
    return PNMesh(pos, normals, s.new_faces)


def pn_refine_mesh(mesh: PNMesh, s: StencilSet) -> PNMesh:
    """One point-normal refinement round driven by a stencil set.

    Per new vertex: linear point q, projected normal n, then the height
    update ``p = q + (sum_j w_j h_j) n`` with the same weights for points,
    normals and heights.  Vertices whose stencil sees no control normal (or
    a degenerate average) keep the linear point and a zero normal.
    """
    coo = s.matrix.tocoo()
    rows, cols, wts = coo.row, coo.col, coo.data
    q = s.matrix @ mesh.positions
    n_new, _ = _refined_normals(s, mesh.normals, rows, cols)

    nn = n_new[rows]
    active = np.abs(nn).sum(axis=1) > 0.0
    h = np.zeros(rows.shape[0])
    if np.any(active):
        pj = mesh.positions[cols[active]]
        nj = mesh.normals[cols[active]]
        na = nn[active]
        su = nj + na
        denom = np.einsum("ij,ij->i", su, na)
        guard = np.abs(denom) < HEIGHT_DENOMINATOR_GUARD
        if np.any(guard):
            su = su.copy()
            su[guard] = nj[guard] + 2.0 * na[guard]
            denom[guard] = np.einsum("ij,ij->i", su[guard], na[guard])
        offs = pj - q[rows[active]]
        h[active] = np.einsum("ij,ij->i", su, offs) / denom
    h_sum = np.bincount(rows, weights=wts * h, minlength=s.new_vertex_count)
    pos = q + h_sum[:, None] * n_new
    return PNMesh(pos, n_new, s.new_faces)


def estimate_normals(mesh: PNMesh, overwrite: bool = False) -> PNMesh:
    """Angle-weighted face-normal average at every vertex with a face.

    Existing nonzero control normals are kept unless ``overwrite``.
    Zero-area faces contribute nothing and raise a warning.
    """
    acc = np.zeros_like(mesh.positions)
    degenerate = 0
    arities = mesh.faces.arities()
    offsets = mesh.faces.offsets
    head = mesh.faces.indices
    for m in (np.unique(arities) if arities.size else []):
        starts = offsets[np.nonzero(arities == m)[0]]
        ring = head[starts[:, None] + np.arange(m)[None, :]]
        X = mesh.positions[ring]                      # (F, m, 3)
        nrm = np.cross(X, np.roll(X, -1, axis=1)).sum(axis=1)  # Newell
        length = np.linalg.norm(nrm, axis=1)
        ok = length > 1e-300
        degenerate += int((~ok).sum())
        unit = np.zeros_like(nrm)
        unit[ok] = nrm[ok] / length[ok, None]
        u = np.roll(X, -1, axis=1) - X
        v = np.roll(X, 1, axis=1) - X
        crossn = np.linalg.norm(np.cross(u, v), axis=2)
        dots = np.einsum("fmi,fmi->fm", u, v)
        angle = np.arctan2(crossn, dots)              # corner angles
        contrib = angle[:, :, None] * unit[:, None, :] * ok[:, None, None]
        flat = ring.ravel()
        for c in range(3):
            acc[:, c] += np.bincount(
                flat, weights=contrib[:, :, c].ravel(),
                minlength=mesh.vertex_count,
            )
    if degenerate:
        warnings.warn(f"{degenerate} zero-area faces ignored", DegenerateFace)
    lengths = np.linalg.norm(acc, axis=1)
    estimated = np.zeros_like(acc)
    ok = lengths > 0.0
    estimated[ok] = acc[ok] / lengths[ok, None]
    if overwrite:
        normals = estimated
    else:
        normals = mesh.normals.copy()
        missing = np.abs(normals).sum(axis=1) == 0.0
        normals[missing] = estimated[missing]
    return PNMesh(mesh.positions.copy(), normals, mesh.faces)


def subdivide_surface(mesh: PNMesh, scheme: str, levels: int,
                      variant: str = "pn", kappa: float = 0.95) -> PNMesh:
    """Iterate surface refinement ``levels`` times.

    ``variant``: ``linear`` and ``pn`` run classical stencils; ``modified``
    and ``pn-modified`` (Catmull-Clark and Loop only) run a plain first
    round, then rounds with eigenvalue-tuned stencils around qualifying
    extraordinary vertices.
    """
    if levels < 0:
        raise ValueError("levels must be >= 0")
    if variant not in VARIANTS:
        raise UnsupportedVariant(f"unknown variant {variant!r}")
    name = canonical_scheme(scheme)
    if variant in ("modified", "pn-modified") and name not in (
        "catmull-clark", "loop"
    ):
        raise UnsupportedVariant(
            f"variant {variant!r} is only defined for catmull-clark and loop"
        )
    out = mesh
    for level in range(levels):
        if variant in ("modified", "pn-modified") and level >= 1:
            from .spectra import modified_round

            out = modified_round(
                out, name, pn=(variant == "pn-modified"), kappa=kappa
            )
        else:
            s = build_stencils(out, name)
            if variant in ("pn", "pn-modified"):
                out = pn_refine_mesh(out, s)
            else:
                out = linear_refine_mesh(out, s)
    return out
