"""Univariate B-spline spaces S_{p,k,Z} over breakpoint partitions of [0,1].

A space is described by a degree ``p``, an interior smoothness ``k`` with
``-1 <= k < p`` and a strictly increasing breakpoint partition
``Z = (0 = z_0 < ... < z_n = 1)``.  Internally every space is realized by the
open knot vector with boundary multiplicity ``p+1`` and interior multiplicity
``p-k``.  Evaluation is delegated to :class:`scipy.interpolate.BSpline`; the
coefficient algebra (differentiation, antidifferentiation, multiplication by
linear polynomials, embedding into superspaces) is implemented here because
the later projector constructions rely on it being exact.

Conventions: evaluation at an interior breakpoint returns the limit from the
right whenever the requested derivative order exceeds the smoothness; at
``x = 1`` the limit from the left is returned.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve

__all__ = [
    "Partition",
    "UniSplineSpace",
    "UniSpline",
    "uniform_partition",
    "reverse",
    "refine",
    "dimension",
    "eval_spline",
    "derivative",
    "antiderivative",
    "multiply_by_linear",
    "embed",
    "greville_points",
    "gauss_rule",
    "eval_operator",
    "l2_project_values",
]

_BREAKPOINT_TOL = 1e-12


@dataclass(frozen=True)
class Partition:
    """Strictly increasing breakpoints ``0 = z_0 < ... < z_n = 1``."""

    breakpoints: tuple[float, ...]

    def __post_init__(self):
        z = self.breakpoints
        if len(z) < 2:
            raise ValueError("partition needs at least two breakpoints")
        if z[0] != 0.0 or z[-1] != 1.0:
            raise ValueError("partition must start at 0 and end at 1")
        if any(b <= a for a, b in zip(z, z[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @property
    def n_elements(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def grid_size(self) -> float:
        """Largest element length h_Z."""
        z = self.breakpoints
        return max(b - a for a, b in zip(z, z[1:]))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.breakpoints)


def uniform_partition(n: int) -> Partition:
    """Uniform partition with ``n`` elements, breakpoints j/n."""
    if n < 1:
        raise ValueError("element count must be >= 1")
    return Partition(tuple(float(v) for v in np.linspace(0.0, 1.0, n + 1)))


def reverse(partition: Partition) -> Partition:
    """The reversed partition (1 - z_n, ..., 1 - z_0)."""
    z = partition.as_array()
    inner = tuple(float(1.0 - v) for v in z[-2:0:-1])
    return Partition((0.0,) + inner + (1.0,))


def refine(partition: Partition) -> Partition:
    """Dyadic refinement: insert the midpoint of every element."""
    z = partition.as_array()
    mid = 0.5 * (z[:-1] + z[1:])
    return Partition(tuple(float(v) for v in np.sort(np.concatenate((z, mid)))))


@dataclass(frozen=True)
class UniSplineSpace:
    """The spline space S_{p,k,Z} of degree ``p`` and smoothness C^k."""

    degree: int
    smoothness: int
    partition: Partition

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if not -1 <= self.smoothness < self.degree:
            raise ValueError(
                f"need -1 <= k < p, got k={self.smoothness}, p={self.degree}"
            )

    @property
    def dim(self) -> int:
        return dimension(self)

    def derivative_space(self) -> UniSplineSpace:
        if self.degree < 1:
            raise ValueError("cannot differentiate a degree-0 space")
        return UniSplineSpace(self.degree - 1, self.smoothness - 1, self.partition)

    def antiderivative_space(self) -> UniSplineSpace:
        return UniSplineSpace(self.degree + 1, self.smoothness + 1, self.partition)


@dataclass
class UniSpline:
    """A spline ``sum_i c_i B_i`` in a fixed :class:`UniSplineSpace`."""

    space: UniSplineSpace
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.dim,):
            raise ValueError(
                f"coefficient length {self.coefficients.shape} does not match "
                f"space dimension {self.space.dim}"
            )

    def __call__(self, x, d: int = 0):
        return eval_spline(self, x, d)

    def __add__(self, other: "UniSpline") -> "UniSpline":
        if other.space != self.space:
            raise ValueError("spline addition requires identical spaces")
        return UniSpline(self.space, self.coefficients + other.coefficients)

    def __sub__(self, other: "UniSpline") -> "UniSpline":
        if other.space != self.space:
            raise ValueError("spline subtraction requires identical spaces")
        return UniSpline(self.space, self.coefficients - other.coefficients)

    def __mul__(self, scalar: float) -> "UniSpline":
        return UniSpline(self.space, self.coefficients * float(scalar))

    __rmul__ = __mul__


def zero_spline(space: UniSplineSpace) -> UniSpline:
    return UniSpline(space, np.zeros(space.dim))


# -- knot vectors and dimensions ---------------------------------------------


@functools.lru_cache(maxsize=None)
def knot_vector(space: UniSplineSpace) -> np.ndarray:
    p, k = space.degree, space.smoothness
    z = space.partition.as_array()
    interior = np.repeat(z[1:-1], p - k)
    return np.concatenate((np.zeros(p + 1), interior, np.ones(p + 1)))


def dimension(space: UniSplineSpace) -> int:
    """dim S_{p,k,Z} = (p+1) + (n-1)(p-k)."""
    p, k = space.degree, space.smoothness
    n = space.partition.n_elements
    return (p + 1) + (n - 1) * (p - k)


@functools.lru_cache(maxsize=None)
def greville_points(space: UniSplineSpace) -> np.ndarray:
    """Greville abscissae; for p = 0 the element midpoints."""
    p = space.degree
    t = knot_vector(space)
    if p == 0:
        return 0.5 * (t[:-1] + t[1:])
    windows = np.lib.stride_tricks.sliding_window_view(t[1:-1], p)
    return windows.mean(axis=1)


# -- evaluation ---------------------------------------------------------------


def _clip_domain(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -_BREAKPOINT_TOL) or np.any(arr > 1.0 + _BREAKPOINT_TOL):
        raise ValueError("evaluation point outside [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def eval_spline(f: UniSpline, x, d: int = 0):
    """Value of the d-th derivative of ``f``; right limits at breakpoints."""
    if d < 0:
        raise ValueError("derivative order must be >= 0")
    arr = _clip_domain(x)
    if d > f.space.degree:
        out = np.zeros_like(arr)
        return float(out) if np.isscalar(x) or out.ndim == 0 else out
    bs = BSpline(knot_vector(f.space), f.coefficients, f.space.degree,
                 extrapolate=False)
    out = bs(arr, nu=d)
    return float(out) if np.isscalar(x) or out.ndim == 0 else out


@functools.lru_cache(maxsize=None)
def _derivative_matrix(space: UniSplineSpace) -> np.ndarray:
    """Coefficient map S_{p,k,Z} -> S_{p-1,k-1,Z} of differentiation."""
    p = space.degree
    t = knot_vector(space)
    m = space.dim - 1
    denom = t[p + 1:p + 1 + m] - t[1:1 + m]
    D = np.zeros((m, m + 1))
    idx = np.arange(m)
    D[idx, idx] = -p / denom
    D[idx, idx + 1] = p / denom
    return D


def derivative(f: UniSpline) -> UniSpline:
    """Derivative as an element of S_{p-1,k-1,Z}."""
    if f.space.smoothness < 0:
        raise ValueError("cannot differentiate a discontinuous spline space")
    target = f.space.derivative_space()
    return UniSpline(target, _derivative_matrix(f.space) @ f.coefficients)


def antiderivative(g: UniSpline, c0: float = 0.0) -> UniSpline:
    """Antiderivative in S_{p+1,k+1,Z} with value ``c0`` at 0."""
    q = g.space.degree
    target = g.space.antiderivative_space()
    T = knot_vector(target)
    m = g.space.dim
    steps = (T[q + 2:q + 2 + m] - T[1:1 + m]) / (q + 1)
    coeffs = c0 + np.concatenate(([0.0], np.cumsum(g.coefficients * steps)))
    return UniSpline(target, coeffs)


@functools.lru_cache(maxsize=None)
def _chained_derivative_matrix(space: UniSplineSpace, d: int) -> np.ndarray:
    if d == 0:
        return np.eye(space.dim)
    inner = _chained_derivative_matrix(space, d - 1)
    sp = space
    for _ in range(d - 1):
        sp = sp.derivative_space()
    return _derivative_matrix(sp) @ inner


def eval_operator(space: UniSplineSpace, x: np.ndarray, d: int = 0) -> np.ndarray:
    """Dense matrix E with (E c)_i = (d-th derivative of the spline)(x_i)."""
    x = _clip_domain(np.atleast_1d(x))
    if d > space.degree:
        return np.zeros((x.size, space.dim))
    if d > space.smoothness + 1:
        # beyond the smoothness the derivative is only element-wise; evaluate
        # the basis derivatives directly instead of via coefficient algebra
        t = knot_vector(space)
        cols = np.empty((x.size, space.dim))
        unit = np.zeros(space.dim)
        for i in range(space.dim):
            unit[i] = 1.0
            cols[:, i] = BSpline(t, unit, space.degree, extrapolate=False)(x, nu=d)
            unit[i] = 0.0
        return cols
    sp = space
    for _ in range(d):
        sp = sp.derivative_space()
    design = BSpline.design_matrix(x, knot_vector(sp), sp.degree).toarray()
    if d == 0:
        return design
    return design @ _chained_derivative_matrix(space, d)


# -- quadrature and L2 machinery ----------------------------------------------


@functools.lru_cache(maxsize=None)
def gauss_rule(partition: Partition, nodes_per_element: int):
    """Gauss-Legendre nodes and weights on every element of the partition."""
    xg, wg = np.polynomial.legendre.leggauss(nodes_per_element)
    z = partition.as_array()
    a, b = z[:-1], z[1:]
    half = 0.5 * (b - a)
    x = (0.5 * (a + b)[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return x, w


@functools.lru_cache(maxsize=None)
def _gram_cholesky(space: UniSplineSpace, nq: int):
    x, w = gauss_rule(space.partition, nq)
    B = eval_operator(space, x)
    G = B.T @ (w[:, None] * B)
    return cho_factor(G)


@functools.lru_cache(maxsize=None)
def l2_projection_matrix(space: UniSplineSpace, nq: int) -> np.ndarray:
    """Matrix mapping samples at the Gauss nodes to L2-projection coefficients."""
    x, w = gauss_rule(space.partition, nq)
    B = eval_operator(space, x)
    return cho_solve(_gram_cholesky(space, nq), B.T * w[None, :])


def l2_project_values(space: UniSplineSpace, values: np.ndarray, nq: int) -> UniSpline:
    """L2 projection from function values at the ``gauss_rule`` nodes."""
    return UniSpline(space, l2_projection_matrix(space, nq) @ values)


# -- collocation at Greville points -------------------------------------------


@functools.lru_cache(maxsize=None)
def _collocation_lu(space: UniSplineSpace):
    if space.smoothness < 0:
        raise ValueError("Greville collocation requires a continuous space")
    A = eval_operator(space, greville_points(space))
    return lu_factor(A)


def interpolate_at_greville(space: UniSplineSpace, values: np.ndarray) -> UniSpline:
    """The unique spline matching the given values at the Greville abscissae."""
    return UniSpline(space, lu_solve(_collocation_lu(space), np.asarray(values, float)))


def interpolate_function(space: UniSplineSpace, fn) -> UniSpline:
    return interpolate_at_greville(space, fn(greville_points(space)))


# -- Bezier extraction and exact products --------------------------------------


def _insert_knot(t: np.ndarray, c: np.ndarray, p: int, x: float):
    """Boehm knot insertion; returns the new knot vector and coefficients."""
    span = int(np.searchsorted(t, x, side="right") - 1)
    new_c = np.empty(c.size + 1)
    new_c[:span - p + 1] = c[:span - p + 1]
    for i in range(span - p + 1, span + 1):
        a = (x - t[i]) / (t[i + p] - t[i])
        new_c[i] = (1.0 - a) * c[i - 1] + a * c[i]
    new_c[span + 1:] = c[span:]
    return np.insert(t, span + 1, x), new_c


def bezier_segments(f: UniSpline) -> np.ndarray:
    """Per-element Bernstein coefficients, shape (n_elements, p+1)."""
    p = f.space.degree
    t = knot_vector(f.space)
    c = f.coefficients.copy()
    for z in f.space.partition.breakpoints[1:-1]:
        mult = int(np.count_nonzero(np.isclose(t, z, atol=_BREAKPOINT_TOL)))
        for _ in range(p - mult):
            t, c = _insert_knot(t, c, p, z)
    n = f.space.partition.n_elements
    if p == 0:
        return c.reshape(n, 1)
    idx = np.arange(n)[:, None] * p + np.arange(p + 1)[None, :]
    return c[idx]


def _de_casteljau(b: np.ndarray, s: float) -> float:
    work = b.astype(float).copy()
    for r in range(1, work.size):
        work[:-r] = (1.0 - s) * work[:-r] + s * work[1:work.size - r + 1]
    return work[0]


def _eval_bezier(partition: Partition, segments: np.ndarray, x: np.ndarray) -> np.ndarray:
    z = partition.as_array()
    idx = np.clip(np.searchsorted(z, x, side="right") - 1, 0, len(z) - 2)
    s = (x - z[idx]) / (z[idx + 1] - z[idx])
    return np.array([_de_casteljau(segments[e], si) for e, si in zip(idx, s)])


def multiply_by_linear(f: UniSpline, a: float, b: float) -> UniSpline:
    """Exact product (a + b*xi) * f(xi) as an element of S_{p+1,k,Z}.

    The product is formed segment-wise in Bernstein form (exact coefficient
    arithmetic), then re-expressed in the B-spline basis of the target space
    by Greville collocation, which is unisolvent there.
    """
    p = f.space.degree
    z = f.space.partition.as_array()
    seg = bezier_segments(f)
    prod = np.zeros((seg.shape[0], p + 2))
    j = np.arange(p + 2)
    for e in range(seg.shape[0]):
        l0 = a + b * z[e]
        l1 = a + b * z[e + 1]
        lo = np.concatenate((seg[e], [0.0]))
        hi = np.concatenate(([0.0], seg[e]))
        prod[e] = (j / (p + 1)) * l1 * hi + ((p + 1 - j) / (p + 1)) * l0 * lo
    target = UniSplineSpace(p + 1, f.space.smoothness, f.space.partition)
    vals = _eval_bezier(f.space.partition, prod, greville_points(target))
    return interpolate_at_greville(target, vals)


# -- embedding into superspaces -------------------------------------------------


def is_subspace(source: UniSplineSpace, target: UniSplineSpace) -> bool:
    if target.degree < source.degree or target.smoothness > source.smoothness:
        return False
    zs = source.partition.as_array()
    zt = target.partition.as_array()
    pos = np.searchsorted(zt, zs)
    pos = np.clip(pos, 0, len(zt) - 1)
    return bool(np.all(np.abs(zt[pos] - zs) <= _BREAKPOINT_TOL))


def embed(f: UniSpline, target: UniSplineSpace) -> UniSpline:
    """Re-express ``f`` in a superspace (pointwise identical function)."""
    if f.space == target:
        return UniSpline(target, f.coefficients.copy())
    if not is_subspace(f.space, target):
        raise ValueError(
            f"S_({f.space.degree},{f.space.smoothness}) does not embed into "
            f"S_({target.degree},{target.smoothness}) on the given partitions"
        )
    vals = eval_spline(f, greville_points(target))
    return interpolate_at_greville(target, vals)
