"""Point-normal refinement of polygons.

One refinement round maps old (point, unit normal) pairs to new pairs in
three steps per new vertex i with stencil weights ``w_j``:

1. linear point      ``q = sum_j w_j p_j``
2. projected normal  ``n = normalize(sum_j w_j n_j)``
3. updated point     ``p = q + (sum_j w_j h_j) n``

where the height ``h_j = (n_j + n)^T (p_j - q) / ((n_j + n)^T n)`` places an
auxiliary point on the line through q along n so that a circular or helical
arc interpolates ``(p_j, n_j)`` at one end and that point with normal n at
the other.  Data sampled from a circle, a circular cylinder or a sphere is
refined exactly onto the same primitive; constant normals reduce everything
to plain linear refinement.

Zero normals mark "no control normal": a stencil whose participating normals
are all zero keeps the linearly refined point and a zero normal.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateAverage, ParseError, TooFewPoints, UnknownScheme
from .symbols import Mask, curve_mask

UNIT_TOL = 1e-12
DEGENERATE_AVERAGE_TOL = 1e-9
HEIGHT_DENOMINATOR_GUARD = 1e-6


def _as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] not in (2, 3):
        raise ValueError("expected an (N, 3) array of points")
    if p.shape[1] == 2:  # planar input: embed with z = 0
        p = np.hstack([p, np.zeros((p.shape[0], 1))])
    return p


def check_unit_normals(normals: np.ndarray, tol: float = UNIT_TOL):
    """Nonzero rows must be unit; zero rows mean "no normal"."""
    norms = np.linalg.norm(normals, axis=1)
    nonzero = norms > 0.0
    if np.any(np.abs(norms[nonzero] - 1.0) > tol):
        worst = np.abs(norms[nonzero] - 1.0).max()
        raise ValueError(f"control normals must be unit (off by {worst:.2e})")


@dataclass(frozen=True)
class PointNormal:
    """A control point with an optional unit control normal."""

    position: np.ndarray
    normal: np.ndarray | None = None

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        n = np.zeros(3) if self.normal is None else np.asarray(self.normal, float)
        return np.asarray(self.position, float), n


class PNPolygon:
    """Open or closed polygon of control points with optional unit normals.

    Positions and normals are stored as parallel (N, 3) arrays; a zero
    normal row marks a vertex without a control normal.
    """

    def __init__(self, positions, normals=None, closed: bool = True):
        self.positions = _as_points(positions)
        n = self.positions.shape[0]
        if normals is None:
            self.normals = np.zeros((n, 3))
        else:
            self.normals = _as_points(normals)
        if self.normals.shape != self.positions.shape:
            raise ValueError("normals must parallel positions")
        check_unit_normals(self.normals)
        self.closed = bool(closed)
        if n < 2:
            raise TooFewPoints("a polygon needs at least 2 vertices")

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def vertices(self) -> list[PointNormal]:
        return [
            PointNormal(p, n if np.any(n) else None)
            for p, n in zip(self.positions, self.normals)
        ]

    def copy(self) -> "PNPolygon":
        return PNPolygon(self.positions.copy(), self.normals.copy(), self.closed)


# -- stencil plumbing ---------------------------------------------------------

def _stencil_rows(m: Mask, count: int, closed: bool):
    """Yield (new_index_parameter, old_indices, weights) for one round.

    New vertices live on the half grid; for closed polygons every half-grid
    index 0..2N-1 is produced, for open polygons only those whose stencil
    support (nonzero weights) stays inside 0..N-1.  Interpolatory masks keep
    the endpoints automatically because their even stencils are deltas.
    """
    rows = []
    odd_rows = 0
    for parity in (0, 1):
        shifts, weights = m.stencil(parity)
        for mm in range(count):
            i = 2 * mm + parity
            js = mm - shifts
            if closed:
                rows.append((i, js % count, weights))
            else:
                if js.min() >= 0 and js.max() < count:
                    rows.append((i, js, weights))
                    odd_rows += i % 2
    if not closed and odd_rows == 0:
        return []  # nothing genuinely new is refinable
    rows.sort(key=lambda r: r[0])
    return rows


def linear_refine(points, m: Mask, closed: bool = True) -> np.ndarray:
    """One round of linear binary refinement of a point sequence."""
    m.require_affine()
    p = _as_points(points)
    rows = _stencil_rows(m, p.shape[0], closed)
    if not rows:
        raise TooFewPoints(
            f"open polygon of {p.shape[0]} points cannot host the mask support"
        )
    return np.array([w @ p[js] for _, js, w in rows])


def spherical_refine(normals, m: Mask, closed: bool = True) -> np.ndarray:
    """Linear refinement of unit vectors followed by re-normalization.

    Zero rows pass through: a stencil fed only by zero normals produces a
    zero normal.  A near-zero average with nonzero participants (antipodal
    data) raises :class:`DegenerateAverage`.
    """
    m.require_affine()
    nrm = _as_points(normals)
    check_unit_normals(nrm)
    rows = _stencil_rows(m, nrm.shape[0], closed)
    if not rows:
        raise TooFewPoints("not enough normals for the mask support")
    out = np.empty((len(rows), 3))
    for r, (_, js, w) in enumerate(rows):
        out[r] = _project_average(nrm[js], w)
    return out


def _project_average(nj: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Normalized stencil average with the zero-normal pass-through rule."""
    if not np.any(np.abs(nj).sum(axis=1) > 0.0):
        return np.zeros(3)
    v = w @ nj
    length = np.linalg.norm(v)
    if length < DEGENERATE_AVERAGE_TOL:
        raise DegenerateAverage(
            "stencil normal average vanished; control normals are antipodal "
            "or too sparse"
        )
    return v / length


# -- the nonlinear update -----------------------------------------------------

def pn_height(p_j, n_j, q, n_new) -> float:
    """Height along ``n_new`` of the arc end matching ``(p_j, n_j)``.

    When the denominator ``(n_j + n_new)^T n_new`` falls under the guard
    (near-antipodal normals), ``n_new`` is doubled inside the sum only,
    which bounds the denominator below by 1.
    """
    p_j = np.asarray(p_j, float)
    n_j = np.asarray(n_j, float)
    q = np.asarray(q, float)
    n_new = np.asarray(n_new, float)
    s = n_j + n_new
    denom = s @ n_new
    if abs(denom) < HEIGHT_DENOMINATOR_GUARD:
        s = n_j + 2.0 * n_new
        denom = s @ n_new
    return float(s @ (p_j - q) / denom)


@dataclass
class RefinementContext:
    """Per-new-vertex intermediates of one point-normal refinement.

    Kept for diagnostics: ``matrices_m`` are the affine-combination matrices
    whose stencil-weighted sum must be the identity, and ``matrices_a`` carry
    the rank-one-plus-projection structure of the height update.
    """

    q: np.ndarray
    n_new: np.ndarray
    l: float
    heights: list = field(default_factory=list)
    matrices_a: list = field(default_factory=list)
    matrices_m: list = field(default_factory=list)
    weights: np.ndarray | None = None

    def affine_defect(self) -> float:
        """max-norm of ``sum_j w_j M_j - I``; ~0 for a valid refinement."""
        if self.weights is None or not self.matrices_m:
            return 0.0
        acc = sum(w * M for w, M in zip(self.weights, self.matrices_m))
        return float(np.abs(acc - np.eye(3)).max())


def _pn_rows(positions, normals, rows, collect_context=False):
    new_p = np.empty((len(rows), 3))
    new_n = np.empty((len(rows), 3))
    contexts = []
    for r, (_, js, w) in enumerate(rows):
        pj = positions[js]
        nj = normals[js]
        q = w @ pj
        n = _project_average(nj, w)
        if not np.any(n):
            new_p[r] = q
            new_n[r] = 0.0
            if collect_context:
                contexts.append(RefinementContext(q=q, n_new=n, l=0.0))
            continue
        hs = np.array([pn_height(pj[t], nj[t], q, n) for t in range(len(w))])
        new_p[r] = q + (w @ hs) * n
        new_n[r] = n
        if collect_context:
            ctx = RefinementContext(
                q=q, n_new=n, l=float(np.linalg.norm(w @ nj)),
                heights=list(hs), weights=w,
            )
            As = []
            for t in range(len(w)):
                s = nj[t] + n
                denom = s @ n
                if abs(denom) < HEIGHT_DENOMINATOR_GUARD:
                    s = nj[t] + 2.0 * n
                    denom = s @ n
                As.append(np.outer(n, s) / denom)
            ctx.matrices_a = As
            ctx.matrices_m = [
                np.eye(3) + sum(w[l] * (As[t] - As[l]) for l in range(len(w)))
                for t in range(len(w))
            ]
            contexts.append(ctx)
    return new_p, new_n, contexts


def pn_refine_curve(
    poly: PNPolygon,
    m: Mask,
    normal_mask: Mask | None = None,
    collect_context: bool = False,
):
    """One point-normal refinement round of a polygon.

    Normals are refined with ``normal_mask`` when given (so a smoother or
    rougher normal field can drive the heights), otherwise with ``m``.
    Returns the refined polygon, plus the per-vertex contexts when asked.
    """
    m.require_affine()
    rows = _stencil_rows(m, len(poly), poly.closed)
    if not rows:
        raise TooFewPoints("polygon too short for the mask support")
    if normal_mask is None:
        new_p, new_n, contexts = _pn_rows(
            poly.positions, poly.normals, rows, collect_context
        )
    else:
        normal_mask.require_affine()
        nrows = _stencil_rows(normal_mask, len(poly), poly.closed)
        by_index = {i: (js, w) for i, js, w in nrows}
        kept = [r for r in rows if r[0] in by_index]
        if not kept:
            raise TooFewPoints("no refinable index supports both masks")
        new_p = np.empty((len(kept), 3))
        new_n = np.empty((len(kept), 3))
        contexts = []
        for r, (i, js, w) in enumerate(kept):
            njs, nw = by_index[i]
            n = _project_average(poly.normals[njs], nw)
            q = w @ poly.positions[js]
            if not np.any(n):
                new_p[r], new_n[r] = q, 0.0
                continue
            hs = np.array(
                [
                    pn_height(poly.positions[j], poly.normals[j], q, n)
                    for j in js
                ]
            )
            new_p[r] = q + (w @ hs) * n
            new_n[r] = n
    out = PNPolygon(new_p, new_n, poly.closed)
    if collect_context:
        return out, contexts
    return out


def subdivide_curve(
    poly: PNPolygon, scheme: str, levels: int, variant: str = "pn",
    normal_scheme: str | None = None,
) -> PNPolygon:
    """Iterate curve refinement ``levels`` times.

    ``scheme`` names a mask from the catalog (``bspline3``, ``4point``,
    ``6point``, ...); ``variant`` is ``linear`` or ``pn``.
    """
    if levels < 0:
        raise ValueError("levels must be >= 0")
    if variant not in ("linear", "pn"):
        raise UnknownScheme(f"unknown curve variant {variant!r}")
    m = curve_mask(scheme)
    nm = curve_mask(normal_scheme) if normal_scheme else None
    out = poly.copy()
    for _ in range(levels):
        if variant == "linear":
            p = linear_refine(out.positions, m, out.closed)
            rows = _stencil_rows(m, len(out), out.closed)
            n = np.empty((len(rows), 3))
            for r, (_, js, w) in enumerate(rows):
                nj = out.normals[js]
                n[r] = _project_average(nj, w) if np.any(nj) else 0.0
            out = PNPolygon(p, n, out.closed)
        else:
            out = pn_refine_curve(out, m, nm)
    return out


# -- diagnostics ----------------------------------------------------------------

def curvature_comb(points, closed: bool = True) -> np.ndarray:
    """Signed discrete curvature per vertex from circumscribed circles.

    Each interior vertex (every vertex for closed polylines) gets the
    inverse circumradius of its triple, signed by the turning direction
    relative to the polyline's dominant osculating plane.  Collinear triples
    give 0.  Open polylines return N-2 values for the interior vertices.
    """
    p = _as_points(points)
    n = p.shape[0]
    if n < 3:
        raise TooFewPoints("curvature needs at least 3 points")
    if closed:
        a = p[np.arange(-1, n - 1) % n]
        b = p
        c = p[np.arange(1, n + 1) % n]
    else:
        a, b, c = p[:-2], p[1:-1], p[2:]
    e1 = b - a
    e2 = c - b
    cross = np.cross(e1, e2)
    cn = np.linalg.norm(cross, axis=1)
    chord = np.linalg.norm(c - a, axis=1)
    denom = (
        np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1) * chord
    )
    kappa = np.zeros(cn.shape)
    ok = denom > 0.0
    kappa[ok] = 2.0 * cn[ok] / denom[ok]
    ref = cross.sum(axis=0)
    if np.linalg.norm(ref) > 0.0:
        sign = np.sign(cross @ ref)
        kappa *= np.where(sign == 0.0, 1.0, sign)
    return kappa


def difference_tensor(points, order: int, level: int, closed: bool = False) -> np.ndarray:
    """Order-m finite differences scaled by ``2**(level*m)``.

    On data sampled at spacing ``2**-level`` this approximates the m-th
    derivative; the scaled difference norms drive the decay-rate probes.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    p = _as_points(points)
    if closed:
        d = p
        for _ in range(order):
            d = d - np.roll(d, 1, axis=0)
    else:
        if p.shape[0] <= order:
            raise TooFewPoints(f"need more than {order} points")
        d = np.diff(p, n=order, axis=0)
    return d * (2.0 ** (level * order))


# -- polyline interchange --------------------------------------------------------

def save_polyline(poly: PNPolygon, sink) -> None:
    """Write the line-oriented polyline format (17 significant digits)."""
    own = isinstance(sink, str)
    f = open(sink, "w", encoding="utf-8", newline="\n") if own else sink
    try:
        f.write(f"closed: {'true' if poly.closed else 'false'}\n")
        for p, n in zip(poly.positions, poly.normals):
            f.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
            if np.any(n):
                f.write(f"vn {n[0]:.17g} {n[1]:.17g} {n[2]:.17g}\n")
    finally:
        if own:
            f.close()


def load_polyline(source) -> PNPolygon:
    """Read the polyline format written by :func:`save_polyline`."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as f:
            text = f.read()
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    closed = None
    positions: list[list[float]] = []
    normals: list[list[float]] = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("closed:"):
            value = line.split(":", 1)[1].strip().lower()
            if value not in ("true", "false"):
                raise ParseError(f"bad closed flag {value!r}", line=lineno)
            closed = value == "true"
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) != 4:
                raise ParseError("v needs 3 coordinates", line=lineno)
            positions.append([float(x) for x in parts[1:]])
            normals.append([0.0, 0.0, 0.0])
        elif parts[0] == "vn":
            if not positions:
                raise ParseError("vn before any v", line=lineno)
            if len(parts) != 4:
                raise ParseError("vn needs 3 coordinates", line=lineno)
            normals[-1] = [float(x) for x in parts[1:]]
        else:
            raise ParseError(f"unknown record {parts[0]!r}", line=lineno)
    if closed is None:
        raise ParseError("missing 'closed:' header")
    if not positions:
        raise ParseError("no vertices")
    return PNPolygon(np.array(positions), np.array(normals), closed)


def decay_norms(
    poly: PNPolygon, scheme: str, order: int, levels: int, variant: str = "pn"
) -> list[float]:
    """Sup-norms of raw order-m differences across refinement levels.

    For a C^m scheme the order-m ratios tend to 2**-m; these sequences feed
    the decay-rate estimator.
    """
    seq = []
    out = poly.copy()
    for _ in range(levels):
        out = subdivide_curve(out, scheme, 1, variant)
        d = difference_tensor(out.positions, order, 0, closed=out.closed)
        seq.append(float(np.linalg.norm(d, axis=1).max()))
    return seq
