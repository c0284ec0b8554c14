"""Local subdivision matrices around extraordinary vertices, their spectra,
and the eigenvalue-tuned (curvature-continuous) scheme variants.

A standard local matrix has eigenvalues ``1 > lambda = lambda > |mu| >= ...``
with the all-ones right eigenvector for 1.  Curvature continuity at the
extraordinary point needs every tail modulus below ``lambda**2``; the tuner
clamps the tail to ``kappa * lambda**2`` (keeping 1, lambda, lambda and all
eigenvectors), reconstructs the matrix, and the resulting rows replace the
classical stencils in the refinement ring around the vertex.

Catmull-Clark neighborhoods are the 2n+1 points (center, n edge neighbors,
n face diagonals); Loop neighborhoods are the n+1 one-ring points.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    ComplexClampFailure,
    DegenerateTangents,
    LayoutMismatch,
    NotDiagonalizable,
    UnsupportedScheme,
)
from .meshes import PNMesh
from .refine import linear_refine_mesh, pn_refine_mesh
from .stencils import MeshTopology, build_stencils, canonical_scheme

DEFAULT_KAPPA = 0.95


@dataclass(frozen=True)
class LocalConfig:
    """Index map of one extraordinary vertex's control neighborhood.

    ``ring_indices`` starts with the center: Catmull-Clark interleaves
    ``[center, e_1..e_n, d_1..d_n]`` (edge neighbors then face diagonals),
    Loop uses ``[center, e_1..e_n]``; both in one cyclic enumeration.
    """

    center: int
    valence: int
    ring_indices: tuple[int, ...]
    scheme: str

    def __post_init__(self):
        if len(set(self.ring_indices)) != len(self.ring_indices):
            raise LayoutMismatch("neighborhood indices must be distinct")


def assemble_local_matrix(scheme: str, valence: int) -> np.ndarray:
    """Local subdivision matrix mapping the canonical neighborhood of an
    isolated extraordinary vertex to its refined copy."""
    name = canonical_scheme(scheme)
    n = int(valence)
    if n < 3:
        raise ValueError("valence must be >= 3")
    if name == "catmull-clark":
        size = 2 * n + 1
        S = np.zeros((size, size))
        e = lambda k: 1 + (k % n)          # noqa: E731
        d = lambda k: 1 + n + (k % n)      # noqa: E731
        # refined center
        S[0, 0] = (n - 3.0) / n + 1.0 / n + n * (1.0 / (4.0 * n * n))
        for k in range(n):
            S[0, e(k)] = 1.0 / (n * n) + 2.0 / (4.0 * n * n)
            S[0, d(k)] = 1.0 / (4.0 * n * n)
        # refined edge points: (c + e_k + F_{k-1} + F_k)/4 with centroid F
        for k in range(n):
            r = np.zeros(size)
            r[0] += 0.375
            r[e(k)] += 0.375
            r[e(k - 1)] += 0.0625
            r[e(k + 1)] += 0.0625
            r[d(k - 1)] += 0.0625
            r[d(k)] += 0.0625
            S[e(k)] = r
        # refined face points: centroids
        for k in range(n):
            r = np.zeros(size)
            for j in (0, e(k), d(k), e(k + 1)):
                r[j] += 0.25
            S[d(k)] = r
    elif name == "loop":
        from .stencils import _loop_beta

        size = n + 1
        S = np.zeros((size, size))
        beta = _loop_beta(n)
        S[0, 0] = 1.0 - n * beta
        S[0, 1:] = beta
        for k in range(n):
            r = np.zeros(size)
            r[0] = 0.375
            r[1 + k] = 0.375
            r[1 + (k - 1) % n] += 0.125
            r[1 + (k + 1) % n] += 0.125
            S[1 + k] = r
    else:
        raise UnsupportedScheme(
            f"no local matrix for scheme {name!r} (catmull-clark or loop)"
        )
    return S


@dataclass
class EigenSpectrum:
    """Eigen-decomposition of a local subdivision matrix.

    ``values`` are sorted by decreasing modulus; ``right_vectors`` holds the
    eigenvectors as columns and ``left_vectors`` the rows of its inverse, so
    biorthogonality is exact up to solver error.
    """

    values: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    diagonalizable: bool

    @property
    def subdominant(self) -> float:
        return float(np.real(self.values[1]))

    @property
    def condition_ratio(self) -> float:
        """max tail modulus over subdominant^2; > 1 breaks the curvature
        continuity condition."""
        lam = abs(self.values[1])
        if self.values.size <= 3 or lam == 0.0:
            return 0.0
        return float(np.max(np.abs(self.values[3:])) / lam**2)

    def reconstruction_error(self, matrix: np.ndarray) -> float:
        approx = self.right_vectors @ np.diag(self.values) @ self.left_vectors
        return float(np.abs(approx - matrix).max())


def spectrum(matrix: np.ndarray) -> EigenSpectrum:
    """Sorted eigen-decomposition with a diagonalizability flag.

    Sorting is by decreasing modulus, ties broken by real part then
    imaginary part, which keeps conjugate pairs adjacent and runs
    deterministic.
    """
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    vals, vecs = np.linalg.eig(M)
    order = np.lexsort((-np.imag(vals), -np.real(vals), -np.abs(vals)))
    vals = vals[order]
    vecs = vecs[:, order]
    cond = np.linalg.cond(vecs)
    diagonalizable = bool(np.isfinite(cond) and cond < 1e8)
    left = np.linalg.inv(vecs) if diagonalizable else np.linalg.pinv(vecs)
    return EigenSpectrum(vals, vecs, left, diagonalizable)


def tune(matrix: np.ndarray, kappa: float = DEFAULT_KAPPA) -> np.ndarray:
    """Clamp the tail eigenvalue moduli to ``kappa * lambda**2``.

    1, lambda, lambda and all eigenvectors are preserved; each remaining
    eigenvalue is scaled by ``min(1, kappa lambda^2 / |mu|)``, which keeps
    phases and conjugate-pair symmetry.  Matrices already satisfying the
    bound come back unchanged (up to solver noise).
    """
    if not (0.0 < kappa < 1.0):
        raise ValueError("kappa must lie in (0, 1)")
    spec = spectrum(matrix)
    if not spec.diagonalizable:
        raise NotDiagonalizable(
            "eigenvector matrix is ill-conditioned; refusing to tune"
        )
    vals = spec.values.copy()
    if abs(vals[0] - 1.0) > 1e-8:
        raise ValueError("leading eigenvalue must be 1 (affine rows)")
    lam1, lam2 = vals[1], vals[2]
    if abs(lam1 - lam2) > 1e-8 or abs(np.imag(lam1)) > 1e-8:
        raise ValueError(
            "expected a real double subdominant eigenvalue before the tail"
        )
    lam = float(np.real(lam1))
    cap = kappa * lam * lam
    for i in range(3, vals.size):
        mod = abs(vals[i])
        if mod > cap:
            vals[i] *= cap / mod
    tuned = spec.right_vectors @ np.diag(vals) @ spec.left_vectors
    worst_imag = float(np.abs(np.imag(tuned)).max())
    if worst_imag > 1e-9:
        raise ComplexClampFailure(
            f"clamped matrix has imaginary residue {worst_imag:.3g}; "
            "conjugate pairs were broken"
        )
    return np.real(tuned)


@lru_cache(maxsize=None)
def tuned_local_matrix(scheme: str, valence: int, kappa: float) -> np.ndarray:
    """Compute-once cache of tuned matrices per (scheme, valence, kappa)."""
    return tune(assemble_local_matrix(scheme, valence), kappa)


def modified_stencils(tuned: np.ndarray, config: LocalConfig):
    """Split a tuned matrix into stencil rows over the mesh neighborhood.

    Returns a dict keyed ``("center",)``, ``("edge", k)`` and (for
    Catmull-Clark) ``("face", k)`` whose values are affine weight rows over
    the old vertex indices of ``config.ring_indices``.  These replace the
    classical rows for the refined center, its incident edge points and its
    incident face points; everything else keeps the classical stencils.
    """
    name = canonical_scheme(config.scheme)
    n = config.valence
    expected = 2 * n + 1 if name == "catmull-clark" else n + 1
    if tuned.shape != (expected, expected):
        raise LayoutMismatch(
            f"tuned matrix {tuned.shape} does not fit valence {n} {name}"
        )
    if len(config.ring_indices) != expected:
        raise LayoutMismatch(
            f"neighborhood has {len(config.ring_indices)} indices, "
            f"expected {expected}"
        )
    cols = list(config.ring_indices)
    rows = {}
    rows[("center",)] = {c: float(w) for c, w in zip(cols, tuned[0])
                         if w != 0.0}
    for k in range(n):
        rows[("edge", k)] = {c: float(w) for c, w in zip(cols, tuned[1 + k])
                             if w != 0.0}
    if name == "catmull-clark":
        for k in range(n):
            rows[("face", k)] = {
                c: float(w) for c, w in zip(cols, tuned[1 + n + k])
                if w != 0.0
            }
    return rows


def qualifying_valences(scheme: str):
    """Interior valences whose refinement rows get replaced.

    Catmull-Clark: only valences above 4 (3 already satisfies the curvature
    bound, 4 is regular).  Loop: valences 4 and 5 keep their rules (bounded
    curvature there); 3 and everything above 6 is modified.
    """
    name = canonical_scheme(scheme)
    if name == "catmull-clark":
        return lambda n: n > 4
    if name == "loop":
        return lambda n: n not in (4, 5, 6)
    raise UnsupportedScheme(name)


def local_config(topo: MeshTopology, scheme: str, v: int) -> LocalConfig | None:
    """Canonical neighborhood enumeration of an interior vertex, or None
    when the star is not a clean disk of the right arity."""
    name = canonical_scheme(scheme)
    if name == "catmull-clark":
        star = topo.quad_star(v)
        if star is None:
            return None
        e, d, _ = star
        ring = (v, *e, *d)
    else:
        star = topo.tri_star(v)
        if star is None:
            return None
        e, _ = star
        ring = (v, *e)
    if len(set(ring)) != len(ring):
        return None
    return LocalConfig(center=v, valence=len(e), ring_indices=ring,
                       scheme=name)


def _override_map(mesh: PNMesh, scheme: str, kappa: float):
    """Stencil overrides for every qualifying extraordinary vertex."""
    name = canonical_scheme(scheme)
    topo = MeshTopology(mesh)
    qualifies = qualifying_valences(name)
    regular = 4 if name == "catmull-clark" else 6
    overrides = {}
    for v in range(mesh.vertex_count):
        n = int(topo.valence[v])
        if n == regular or topo.boundary_vertex[v] or not qualifies(n):
            continue
        cfg = local_config(topo, name, v)
        if cfg is None:
            continue
        tuned = tuned_local_matrix(name, cfg.valence, kappa)
        rows = modified_stencils(tuned, cfg)
        overrides[("v", v)] = rows[("center",)]
        e = cfg.ring_indices[1: 1 + cfg.valence]
        for k in range(cfg.valence):
            key = (v, e[k]) if v < e[k] else (e[k], v)
            overrides[("e", key)] = rows[("edge", k)]
        if name == "catmull-clark":
            _, _, faces = topo.quad_star(v)
            for k in range(cfg.valence):
                overrides[("f", faces[k])] = rows[("face", k)]
    return overrides


def modified_round(mesh: PNMesh, scheme: str, pn: bool,
                   kappa: float = DEFAULT_KAPPA) -> PNMesh:
    """One refinement round with tuned stencils near qualifying vertices."""
    overrides = _override_map(mesh, scheme, kappa)
    s = build_stencils(mesh, scheme, overrides=overrides or None)
    return pn_refine_mesh(mesh, s) if pn else linear_refine_mesh(mesh, s)


def pn_modified_refine(mesh: PNMesh, scheme: str,
                       kappa: float = DEFAULT_KAPPA) -> PNMesh:
    """Point-normal round with eigenvalue-tuned stencils where they apply.

    Expects a mesh that has already seen one plain round (all-quad for the
    Catmull-Clark path, pure triangles for Loop) so extraordinary vertices
    are isolated.
    """
    return modified_round(mesh, scheme, pn=True, kappa=kappa)


def limit_point_and_normal(positions, spec: EigenSpectrum, normals=None):
    """Limit point and unit limit normal of a refined neighborhood.

    The point is the leading left eigenvector applied to the neighborhood;
    the normal is the cross product of the two subdominant left-eigenvector
    coordinates, its sign aligned with the supplied control normals when
    any are given, otherwise with a fan normal of the neighborhood.
    """
    Q = np.asarray(positions, dtype=float)
    if Q.shape[0] != spec.values.size:
        raise LayoutMismatch(
            f"neighborhood of {Q.shape[0]} points does not match a "
            f"{spec.values.size}-point spectrum"
        )
    w0 = spec.left_vectors[0]
    w1 = spec.left_vectors[1]
    w2 = spec.left_vectors[2]
    if np.abs(np.imag(spec.values[1])) > 1e-12:
        w1, w2 = np.real(w1), np.imag(w1)  # conjugate pair: use re/im basis
    else:
        w1, w2 = np.real(w1), np.real(w2)
    p0 = np.real(w0) @ Q
    scale = np.real(w0).sum()
    if abs(scale) > 1e-12:
        p0 = p0 / scale  # affine normalization of the leading row
    p1 = w1 @ Q
    p2 = w2 @ Q
    cross = np.cross(p1, p2)
    norm = np.linalg.norm(cross)
    if norm <= 1e-12 * np.linalg.norm(p1) * np.linalg.norm(p2) or norm == 0.0:
        raise DegenerateTangents(
            "subdominant coordinates are parallel; no limit normal"
        )
    n = cross / norm
    reference = None
    if normals is not None:
        normals = np.asarray(normals, dtype=float)
        nonzero = np.abs(normals).sum(axis=1) > 0.0
        if np.any(nonzero):
            reference = normals[nonzero].mean(axis=0)
    if reference is None:
        center = Q[0]
        ring = Q[1:]
        fan = np.zeros(3)
        for k in range(ring.shape[0]):
            fan += np.cross(ring[k] - center,
                            ring[(k + 1) % ring.shape[0]] - center)
        reference = fan
    if np.linalg.norm(reference) > 0.0 and n @ reference < 0.0:
        n = -n
    return p0, n
