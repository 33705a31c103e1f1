"""Tensor-product spline spaces and the directional / tensor projectors.

The tensor projector applies the univariate order-r projector in each
parameter direction.  Because a univariate projection is a fixed linear map
of point-evaluation data (see :mod:`asg1kit.ritz1d`), the tensor coefficients
are ``C = M1 @ D @ M2.T`` where ``D`` holds the mixed derivative data of the
input on the cartesian product of the two descriptor sets -- the nested
application of the coefficient functionals of both directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import ScalarField1D, ScalarField2D
from .geometry import EDGE_AXIS, NORMALS
from .ritz1d import PointFunctionals, ritz_functionals
from .splines import (
    UniSpline,
    UniSplineSpace,
    eval_operator,
    _derivative_matrix,
)

__all__ = [
    "TensorSplineSpace",
    "TensorSpline",
    "eval_tensor",
    "as_field",
    "trace",
    "normal_derivative_trace",
    "DirectionalProjection",
    "directional_project",
    "tensor_project",
    "tensor_project_Q",
]


@dataclass(frozen=True)
class TensorSplineSpace:
    space1: UniSplineSpace
    space2: UniSplineSpace

    @property
    def shape(self) -> tuple[int, int]:
        return self.space1.dim, self.space2.dim

    def side_space(self, j: int) -> UniSplineSpace:
        return self.space1 if EDGE_AXIS[j] == 0 else self.space2


@dataclass
class TensorSpline:
    space: TensorSplineSpace
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != self.space.shape:
            raise ValueError(
                f"coefficient grid {self.coefficients.shape} does not match "
                f"space shape {self.space.shape}"
            )

    def __call__(self, x1, x2, a: int = 0, b: int = 0):
        return eval_tensor(self, x1, x2, a, b)

    def __add__(self, other: "TensorSpline") -> "TensorSpline":
        if other.space != self.space:
            raise ValueError("tensor spline addition requires identical spaces")
        return TensorSpline(self.space, self.coefficients + other.coefficients)

    def __sub__(self, other: "TensorSpline") -> "TensorSpline":
        if other.space != self.space:
            raise ValueError("tensor spline subtraction requires identical spaces")
        return TensorSpline(self.space, self.coefficients - other.coefficients)


def zero_tensor_spline(space: TensorSplineSpace) -> TensorSpline:
    return TensorSpline(space, np.zeros(space.shape))


def eval_tensor(f: TensorSpline, x1, x2, a: int = 0, b: int = 0):
    """d1^a d2^b f at broadcastable point arrays."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    shape = np.broadcast_shapes(x1.shape, x2.shape)
    if a > f.space.space1.degree or b > f.space.space2.degree:
        out = np.zeros(shape)
        return float(out) if out.ndim == 0 else out
    B1 = eval_operator(f.space.space1, np.broadcast_to(x1, shape).ravel(), a)
    B2 = eval_operator(f.space.space2, np.broadcast_to(x2, shape).ravel(), b)
    out = np.einsum("ni,ij,nj->n", B1, f.coefficients, B2).reshape(shape)
    return float(out) if out.ndim == 0 else out


def eval_tensor_grid(f: TensorSpline, x1, x2, a: int = 0, b: int = 0) -> np.ndarray:
    """d1^a d2^b f on the tensor grid x1 (x) x2, shape (len(x1), len(x2))."""
    if a > f.space.space1.degree or b > f.space.space2.degree:
        return np.zeros((np.size(x1), np.size(x2)))
    B1 = eval_operator(f.space.space1, np.atleast_1d(x1), a)
    B2 = eval_operator(f.space.space2, np.atleast_1d(x2), b)
    return B1 @ f.coefficients @ B2.T


def as_field(f: TensorSpline) -> ScalarField2D:
    return ScalarField2D(lambda x, y, a, b: eval_tensor(f, x, y, a, b),
                         max_order=max(f.space.space1.degree,
                                       f.space.space2.degree))


# -- traces ------------------------------------------------------------------------


def trace(f: TensorSpline, j: int) -> UniSpline:
    """Restriction to side ``j`` as a univariate spline in the side space."""
    c = f.coefficients
    if j == 1:
        return UniSpline(f.space.space1, c[:, 0].copy())
    if j == 2:
        return UniSpline(f.space.space2, c[-1, :].copy())
    if j == 3:
        return UniSpline(f.space.space1, c[:, -1].copy())
    if j == 4:
        return UniSpline(f.space.space2, c[0, :].copy())
    raise ValueError(f"side index must be 1..4, got {j}")


def normal_derivative_trace(f: TensorSpline, j: int) -> UniSpline:
    """(n_j . grad f) restricted to side ``j``, in the side's tangential space."""
    c = f.coefficients
    if EDGE_AXIS[j] == 0:
        dc = c @ _derivative_matrix(f.space.space2).T
        df = TensorSpline(
            TensorSplineSpace(f.space.space1, f.space.space2.derivative_space()), dc
        )
    else:
        dc = _derivative_matrix(f.space.space1) @ c
        df = TensorSpline(
            TensorSplineSpace(f.space.space1.derivative_space(), f.space.space2), dc
        )
    n = NORMALS[j]
    sign = n[0] + n[1]  # the nonzero component of the outward normal
    tr = trace(df, j)
    return UniSpline(tr.space, sign * tr.coefficients)


# -- directional projectors -----------------------------------------------------------


@dataclass
class DirectionalProjection:
    """Fiber-wise univariate projection in the direction of side ``j``'s edge.

    Sides 1 and 3 share the xi1-direction operator, sides 2 and 4 the
    xi2-direction one.
    """

    space: TensorSplineSpace
    side: int
    functionals: PointFunctionals
    field: ScalarField2D

    @property
    def axis(self) -> int:
        return EDGE_AXIS[self.side]

    def fiber(self, s: float) -> UniSpline:
        """The univariate projection of the fiber at the other coordinate s."""
        u = self.field
        if self.axis == 0:
            fiber_field = ScalarField1D(lambda x, d: u(x, np.asarray(s), d, 0),
                                        max_order=u.max_order)
        else:
            fiber_field = ScalarField1D(lambda y, d: u(np.asarray(s), y, 0, d),
                                        max_order=u.max_order)
        return self.functionals.apply(fiber_field)


def directional_project(space: TensorSplineSpace, j: int, r: int,
                        u: ScalarField2D, nq: int | None = None
                        ) -> DirectionalProjection:
    axis = EDGE_AXIS[j]
    funcs = ritz_functionals(space.space1 if axis == 0 else space.space2, r, nq)
    return DirectionalProjection(space, j, funcs, u)


# -- tensor projector -----------------------------------------------------------------


def data_matrix(u: ScalarField2D, f1: PointFunctionals, f2: PointFunctionals
                ) -> np.ndarray:
    """Mixed derivative data D[a, b] = d1^{o1_a} d2^{o2_b} u(x_a, y_b)."""
    o1 = np.asarray(f1.orders)
    o2 = np.asarray(f2.orders)
    x = np.asarray(f1.points)
    y = np.asarray(f2.points)
    D = np.empty((len(x), len(y)))
    for da in sorted(set(f1.orders)):
        ia = np.where(o1 == da)[0]
        for db in sorted(set(f2.orders)):
            ib = np.where(o2 == db)[0]
            X, Y = np.meshgrid(x[ia], y[ib], indexing="ij")
            D[np.ix_(ia, ib)] = u(X, Y, da, db)
    return D


def tensor_project(space: TensorSplineSpace, u: ScalarField2D, r: int = 2,
                   nq: int | None = None, order: str = "21") -> TensorSpline:
    """The tensor-product order-(r, r) projection of ``u``.

    ``order`` selects which direction is applied first ("21": xi2 fibers
    first, then xi1; "12": the opposite); both orderings agree up to
    round-off, which is the commuting property of the directional projectors.
    """
    f1 = ritz_functionals(space.space1, r, nq)
    f2 = ritz_functionals(space.space2, r, nq)
    D = data_matrix(u, f1, f2)
    if order == "21":
        C = f1.matrix @ (D @ f2.matrix.T)
    elif order == "12":
        C = (f1.matrix @ D) @ f2.matrix.T
    else:
        raise ValueError("order must be '21' or '12'")
    return TensorSpline(space, C)


def tensor_project_Q(space: TensorSplineSpace, u: ScalarField2D,
                     nq: int | None = None) -> TensorSpline:
    """The order-(2,2) tensor projector used by the AS-G1 construction."""
    return tensor_project(space, u, r=2, nq=nq)
