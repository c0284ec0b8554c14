"""Univariate subdivision masks and their Laurent-symbol algebra.

A binary scheme with mask ``a`` refines a polygon by
``p_i' = sum_j a[i-2j] p_j``.  Its symbol is the Laurent polynomial
``a(z) = sum_i a_i z^i``.  Convergence and smoothness certificates work on
the symbol: an affine mask factors as ``a(z) = (1+z) q(z)``, and each
smoothing factor ``(1+z)/2`` that divides the symbol raises the certified
smoothness order by one, provided the remaining difference scheme is
contractive.

Convention note: the convergence literature states the factorization both as
``a(z) = (1+z) q(z)`` (no constant) and as ``a(z) = ((1+z)/2)^m b(z)``.
All bookkeeping here uses the ``((1+z)/2)^m`` form; the plain ``(1+z)``
quotient is just ``divide_smoothing_factor(s, 1)`` divided by 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotAffine, NotDivisible

_TRIM_TOL = 0.0  # only exact zeros are trimmed off the support ends


@dataclass(frozen=True)
class LaurentSymbol:
    """Finitely supported Laurent polynomial ``sum_i c[i-offset] z^i``.

    ``offset`` is the exponent of the first stored coefficient.  The stored
    support is trimmed: first and last coefficients are nonzero.
    """

    coefficients: np.ndarray
    offset: int = 0

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("symbol needs a nonempty 1-d coefficient array")
        lo, hi = 0, c.size
        while lo < hi - 1 and abs(c[lo]) <= _TRIM_TOL:
            lo += 1
        while hi - 1 > lo and abs(c[hi - 1]) <= _TRIM_TOL:
            hi -= 1
        object.__setattr__(self, "coefficients", c[lo:hi].copy())
        object.__setattr__(self, "offset", int(self.offset) + lo)

    @property
    def degree_range(self) -> tuple[int, int]:
        """(lowest, highest) exponent with stored coefficients."""
        return self.offset, self.offset + self.coefficients.size - 1

    def coefficient(self, i: int) -> float:
        j = i - self.offset
        if 0 <= j < self.coefficients.size:
            return float(self.coefficients[j])
        return 0.0

    def __call__(self, z: complex) -> complex:
        lo = self.offset
        return sum(c * z ** (lo + k) for k, c in enumerate(self.coefficients))

    def __mul__(self, other: "LaurentSymbol") -> "LaurentSymbol":
        return LaurentSymbol(
            np.convolve(self.coefficients, other.coefficients),
            self.offset + other.offset,
        )

    def scaled(self, s: float) -> "LaurentSymbol":
        return LaurentSymbol(self.coefficients * s, self.offset)

    def upsampled(self, step: int) -> "LaurentSymbol":
        """Substitute ``z -> z**step``."""
        c = np.zeros((self.coefficients.size - 1) * step + 1)
        c[::step] = self.coefficients
        return LaurentSymbol(c, self.offset * step)

    def parity_sums(self) -> tuple[float, float]:
        """(sum over even exponents, sum over odd exponents)."""
        idx = np.arange(self.coefficients.size) + self.offset
        even = float(self.coefficients[idx % 2 == 0].sum())
        odd = float(self.coefficients[idx % 2 != 0].sum())
        return even, odd


@dataclass(frozen=True)
class Mask:
    """A subdivision mask: a symbol plus its parity sums.

    The parity sums are recomputed from the symbol on every access so they
    can never go stale.  A mask is *affine* when both sums equal 1, the
    necessary condition for convergence of the scheme.
    """

    symbol: LaurentSymbol
    name: str = field(default="", compare=False)

    @property
    def even_sum(self) -> float:
        return self.symbol.parity_sums()[0]

    @property
    def odd_sum(self) -> float:
        return self.symbol.parity_sums()[1]

    @property
    def is_affine(self) -> bool:
        return abs(self.even_sum - 1.0) < 1e-12 and abs(self.odd_sum - 1.0) < 1e-12

    @property
    def support(self) -> int:
        return self.symbol.coefficients.size

    def require_affine(self):
        if not self.is_affine:
            raise NotAffine(
                f"mask parity sums ({self.even_sum}, {self.odd_sum}) != (1, 1)"
            )

    def stencil(self, parity: int) -> tuple[np.ndarray, np.ndarray]:
        """Weights feeding a new vertex of index parity ``parity`` (0 or 1).

        Returns ``(shifts, weights)`` such that the new vertex at half-grid
        index ``2m + parity`` is ``sum_t weights[t] * old[m - shifts[t]]``.
        """
        lo, hi = self.symbol.degree_range
        cs = []
        c = lo if (lo - parity) % 2 == 0 else lo + 1
        while c <= hi:
            cs.append(c)
            c += 2
        shifts = np.array([(c - parity) // 2 for c in cs], dtype=int)
        weights = np.array([self.symbol.coefficient(c) for c in cs])
        keep = weights != 0.0
        return shifts[keep], weights[keep]


# -- constructors -------------------------------------------------------------

def bspline_mask(degree: int) -> Mask:
    """Mask of the uniform B-spline scheme of the given degree.

    The symbol is ``2 ((1+z)/2)**(degree+1)``, centered so the stencils come
    out symmetric.  ``degree=1`` is midpoint insertion, ``degree=2`` corner
    cutting, ``degree=3`` the cubic scheme.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    coeffs = np.array(
        [math.comb(degree + 1, k) for k in range(degree + 2)], dtype=float
    )
    coeffs /= 2.0 ** degree
    offset = -((degree + 2) // 2)
    return Mask(LaurentSymbol(coeffs, offset), name=f"bspline{degree}")


def _lagrange_midpoint_weights(n: int) -> np.ndarray:
    """Weights of the degree-(2n-1) interpolant of 2n uniform samples at the
    midpoint of the central interval."""
    nodes = np.arange(-n + 1, n + 1, dtype=float)
    t = 0.5
    w = np.empty(2 * n)
    for k in range(2 * n):
        others = np.delete(nodes, k)
        w[k] = np.prod((t - others) / (nodes[k] - others))
    return w


def dd_interpolatory_mask(n: int) -> Mask:
    """Mask of the interpolatory 2n-point scheme (Dubuc-Deslauriers family).

    Old vertices are kept (even coefficients form the delta sequence); new
    midpoints get the Lagrange midpoint weights, so samples of polynomials
    up to degree 2n-1 are refined exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    coeffs = np.zeros(4 * n - 1)
    coeffs[2 * n - 1] = 1.0
    coeffs[::2] = _lagrange_midpoint_weights(n)
    return Mask(LaurentSymbol(coeffs, -(2 * n - 1)), name=f"{2 * n}point")


# -- factorization and contractivity ------------------------------------------

def divide_smoothing_factor(s: LaurentSymbol, m: int, tol: float = 1e-10) -> LaurentSymbol:
    """Divide the symbol by ``((1+z)/2)**m``.

    Raises :class:`NotDivisible` when any synthetic-division remainder
    exceeds ``tol``; in that case the scheme lacks the smoothing factor and
    this route of smoothness analysis is unavailable.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    coeffs = s.coefficients.copy()
    offset = s.offset
    for _ in range(m):
        # synthetic division by (1 + z), constant-term first
        scale = max(1.0, float(np.abs(coeffs).max()))
        q = np.empty(coeffs.size - 1) if coeffs.size > 1 else np.empty(0)
        rem = coeffs[0]
        for k in range(q.size):
            q[k] = rem
            rem = coeffs[k + 1] - rem
        if abs(rem) > tol * scale or q.size == 0:
            raise NotDivisible(f"remainder {rem!r} after dividing by (1+z)")
        coeffs = 2.0 * q
        # dividing by z^0-anchored (1+z) keeps the low exponent in place
    return LaurentSymbol(coeffs, offset)


def smoothing_factor_symbol(m: int) -> LaurentSymbol:
    """The symbol ``((1+z)/2)**m``."""
    out = LaurentSymbol(np.array([1.0]))
    half = LaurentSymbol(np.array([0.5, 0.5]))
    for _ in range(m):
        out = out * half
    return out


def contractivity_factor(s: LaurentSymbol, L: int) -> float:
    """``norm(S_s^L)_inf ** (1/L)``: the L-step contractivity certificate.

    The iterated symbol is ``s(z) s(z^2) ... s(z^{2^{L-1}})`` and the norm is
    the maximum over residue classes mod ``2^L`` of the absolute coefficient
    sums.  A value below 1 certifies that the difference scheme contracts.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    it = s
    for i in range(1, L):
        it = it * s.upsampled(2 ** i)
    mod = 2 ** L
    idx = (np.arange(it.coefficients.size) + it.offset) % mod
    sums = np.zeros(mod)
    np.add.at(sums, idx, np.abs(it.coefficients))
    return float(sums.max()) ** (1.0 / L)


def certify_smoothness(m: Mask, max_order: int = 6, max_L: int = 8) -> int:
    """Certified lower bound on the smoothness order of the scheme.

    Returns the largest ``k <= max_order`` such that the symbol factors as
    ``((1+z)/2)**k b(z)`` with the difference scheme of ``b`` (its quotient
    by ``(1+z)``) contractive within ``max_L`` iterations.  Returns 0 when
    no factorization certifies; this never proves divergence.
    """
    m.require_affine()
    best = 0
    for k in range(1, max_order + 1):
        try:
            b = divide_smoothing_factor(m.symbol, k)
        except NotDivisible:
            break
        try:
            q = divide_smoothing_factor(b, 1).scaled(0.5)  # b/(1+z)
        except NotDivisible:
            break
        if any(contractivity_factor(q, L) < 1.0 for L in range(1, max_L + 1)):
            best = k
    return best


# -- curve scheme catalog ------------------------------------------------------

def curve_mask(name: str) -> Mask:
    """Look up a curve scheme mask by name.

    Accepted names: ``bspline<d>`` for d >= 1, ``<2n>point`` for even counts
    (``4point``, ``6point``, ...), and the alias ``midpoint``.
    """
    key = name.strip().lower().replace("-", "").replace("_", "")
    if key == "midpoint":
        return bspline_mask(1)
    if key.startswith("bspline"):
        try:
            return bspline_mask(int(key[len("bspline"):]))
        except ValueError:
            pass
    if key.endswith("point"):
        try:
            pts = int(key[: -len("point")])
        except ValueError:
            pts = -1
        if pts >= 2 and pts % 2 == 0:
            return dd_interpolatory_mask(pts // 2)
    from .errors import UnknownScheme

    raise UnknownScheme(f"unknown curve scheme {name!r}")
