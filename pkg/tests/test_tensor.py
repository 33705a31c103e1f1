import numpy as np
import pytest

from asg1kit.fields import ScalarField2D, manufactured
from asg1kit.ritz1d import ritz_project
from asg1kit.splines import UniSpline, UniSplineSpace, uniform_partition
from asg1kit.tensor import (
    TensorSpline,
    TensorSplineSpace,
    as_field,
    data_matrix,
    directional_project,
    eval_tensor,
    normal_derivative_trace,
    tensor_project,
    tensor_project_Q,
    trace,
)

import oracles


def tensor_space(p, k, n):
    S = UniSplineSpace(p, k, uniform_partition(n))
    return TensorSplineSpace(S, S)


def random_tensor_spline(space, seed=0):
    rng = np.random.default_rng(seed)
    return TensorSpline(space, rng.standard_normal(space.shape))


# -- evaluation -------------------------------------------------------------------

def test_eval_constant():
    V = tensor_space(3, 1, 3)
    one = TensorSpline(V, np.ones(V.shape))
    X, Y = np.meshgrid(np.linspace(0, 1, 7), np.linspace(0, 1, 7))
    assert np.max(np.abs(one(X, Y) - 1.0)) <= 1e-13


def test_eval_mixed_derivative_of_bilinear():
    V = tensor_space(2, 1, 2)
    # coefficients of xi1 * xi2: outer product of the 1D coefficient vectors
    S = V.space1
    from asg1kit.splines import greville_points, interpolate_at_greville

    lin = interpolate_at_greville(S, greville_points(S))
    f = TensorSpline(V, np.outer(lin.coefficients, lin.coefficients))
    X, Y = np.meshgrid(np.linspace(0, 1, 5), np.linspace(0, 1, 5))
    assert np.max(np.abs(f(X, Y, 1, 1) - 1.0)) <= 1e-12
    assert np.max(np.abs(f(X, Y) - X * Y)) <= 1e-13


def test_eval_matches_kronecker_oracle():
    # independent evaluation through scipy on the raveled Kronecker basis
    from scipy.interpolate import BSpline
    from asg1kit.splines import knot_vector

    V = tensor_space(3, 1, 3)
    f = random_tensor_spline(V, seed=5)
    rng = np.random.default_rng(6)
    x = rng.random(100)
    y = rng.random(100)
    t = knot_vector(V.space1)
    vals = np.zeros(100)
    for i in range(V.space1.dim):
        ci = np.zeros(V.space1.dim)
        ci[i] = 1.0
        bi = BSpline(t, ci, 3, extrapolate=False)(x)
        for j in range(V.space2.dim):
            cj = np.zeros(V.space2.dim)
            cj[j] = 1.0
            bj = BSpline(t, cj, 3, extrapolate=False)(y)
            vals += f.coefficients[i, j] * bi * bj
    assert np.max(np.abs(f(x, y) - vals)) <= 1e-12


# -- traces -----------------------------------------------------------------------

def test_trace_extracts_boundary_rows():
    V = tensor_space(3, 1, 3)
    S = V.space1
    from asg1kit.splines import greville_points, interpolate_at_greville

    lin = interpolate_at_greville(S, greville_points(S))
    # f = xi2: zero trace on side 1, one on side 3
    f = TensorSpline(V, np.outer(np.ones(S.dim), lin.coefficients))
    assert np.max(np.abs(trace(f, 1).coefficients)) <= 1e-13
    x = np.linspace(0, 1, 21)
    assert np.max(np.abs(trace(f, 3)(x) - 1.0)) <= 1e-13
    # f = xi1: side 2 trace is the constant 1
    g = TensorSpline(V, np.outer(lin.coefficients, np.ones(S.dim)))
    assert np.max(np.abs(trace(g, 2)(x) - 1.0)) <= 1e-13


@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_trace_matches_eval(j):
    V = tensor_space(4, 2, 3)
    f = random_tensor_spline(V, seed=j)
    t = np.linspace(0, 1, 50)
    from asg1kit.geometry import edge_coords

    x, y = edge_coords(j, t)
    assert np.max(np.abs(trace(f, j)(t) - f(x, y))) <= 1e-13


def test_normal_derivative_trace_examples():
    V = tensor_space(3, 1, 3)
    S = V.space1
    from asg1kit.splines import greville_points, interpolate_at_greville

    lin = interpolate_at_greville(S, greville_points(S))
    f = TensorSpline(V, np.outer(np.ones(S.dim), lin.coefficients))  # xi2
    x = np.linspace(0, 1, 21)
    assert np.max(np.abs(normal_derivative_trace(f, 1)(x) + 1.0)) <= 1e-13
    quad = interpolate_at_greville(S, greville_points(S) ** 2)
    g = TensorSpline(V, np.outer(np.ones(S.dim), quad.coefficients))  # xi2^2
    assert np.max(np.abs(normal_derivative_trace(g, 3)(x) - 2.0)) <= 1e-12


@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_normal_derivative_trace_matches_eval(j):
    from asg1kit.geometry import NORMALS, edge_coords

    V = tensor_space(4, 2, 3)
    f = random_tensor_spline(V, seed=10 + j)
    t = np.linspace(0, 1, 50)
    x, y = edge_coords(j, t)
    n = NORMALS[j]
    want = n[0] * f(x, y, 1, 0) + n[1] * f(x, y, 0, 1)
    assert np.max(np.abs(normal_derivative_trace(f, j)(t) - want)) <= 1e-12


# -- directional projection ----------------------------------------------------------

def test_directional_fiber_matches_univariate_projection():
    V = tensor_space(3, 1, 4)
    u = manufactured("sinsin")
    proj = directional_project(V, 1, 2, u)
    s = 0.37
    fiber = proj.fiber(s)
    from asg1kit.fields import ScalarField1D

    restricted = ScalarField1D(lambda x, d: u(x, np.asarray(s), d, 0), max_order=3)
    direct = ritz_project(V.space1, 2, restricted)
    assert np.max(np.abs(fiber.coefficients - direct.coefficients)) <= 1e-12


def test_directional_constant_fiber_reproduced():
    V = tensor_space(3, 1, 4)
    S = V.space1
    from asg1kit.splines import greville_points, interpolate_at_greville

    g = interpolate_at_greville(S, np.sin(greville_points(S)))

    u = ScalarField2D(lambda x, y, a, b: g(x, a) * (1.0 if b == 0 else 0.0),
                      max_order=3)
    proj = directional_project(V, 1, 2, u)
    for s in (0.0, 0.3, 1.0):
        fiber = proj.fiber(s)
        assert np.max(np.abs(fiber.coefficients - g.coefficients)) <= 1e-12


def test_opposite_sides_share_operator():
    V = tensor_space(3, 1, 4)
    u = manufactured("sinsin")
    p1 = directional_project(V, 1, 2, u)
    p3 = directional_project(V, 3, 2, u)
    assert p1.functionals is p3.functionals
    assert p1.axis == p3.axis == 0


# -- tensor projector -------------------------------------------------------------------

def test_tensor_project_reproduces_random_spline():
    V = tensor_space(3, 1, 4)
    f = random_tensor_spline(V, seed=2)
    Q = tensor_project_Q(V, as_field(f))
    assert np.max(np.abs(Q.coefficients - f.coefficients)) <= 1e-11


def test_tensor_project_reproduces_high_degree_polynomial():
    from math import factorial

    p = 3
    V = tensor_space(p, 1, 3)
    u = ScalarField2D(
        lambda x, y, a, b: (
            (factorial(p) / factorial(p - a) * x ** (p - a)
             if a <= p else 0.0 * x)
            * (factorial(p) / factorial(p - b) * y ** (p - b)
               if b <= p else 0.0 * y)
        ),
        max_order=4,
    )
    Q = tensor_project_Q(V, u)
    X, Y = np.meshgrid(np.linspace(0, 1, 9), np.linspace(0, 1, 9))
    assert np.max(np.abs(Q(X, Y) - X ** p * Y ** p)) <= 1e-12


def test_commuting_identity():
    V = tensor_space(3, 1, 5)
    u = manufactured("expxy")
    a = tensor_project(V, u, order="21")
    b = tensor_project(V, u, order="12")
    scale = np.max(np.abs(a.coefficients))
    assert np.max(np.abs(a.coefficients - b.coefficients)) <= 1e-11 * scale


def test_corner_interpolation():
    V = tensor_space(3, 1, 5)
    u = manufactured("sinsin")
    Q = tensor_project_Q(V, u)
    corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    for cx, cy in corners:
        for s in (0, 1):
            for t in (0, 1):
                got = Q(np.asarray(cx), np.asarray(cy), s, t)
                want = float(u(np.asarray(cx), np.asarray(cy), s, t))
                assert abs(got - want) <= 1e-10, (cx, cy, s, t)


@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_edge_commuting(j):
    from asg1kit.fields import ScalarField1D, restrict_to_edge
    from asg1kit.geometry import NORMALS, edge_coords

    V = tensor_space(3, 1, 4)
    u = manufactured("sinsin")
    Q = tensor_project_Q(V, u)
    t = np.linspace(0, 1, 50)
    side_space = V.side_space(j)

    # trace of Q u equals the univariate projection of the trace
    tr = ritz_project(side_space, 2, restrict_to_edge(u, j))
    assert np.max(np.abs(trace(Q, j)(t) - tr(t))) <= 1e-10

    # normal derivative trace equals the directional projection of n . grad u
    n = NORMALS[j]

    def ndu(x, d):
        ex, ey = edge_coords(j, x)
        if j in (1, 3):
            return n[1] * u(ex, ey, d, 1)
        return n[0] * u(ex, ey, 1, d)

    ndproj = ritz_project(side_space, 2, ScalarField1D(ndu, max_order=3))
    assert np.max(np.abs(normal_derivative_trace(Q, j)(t) - ndproj(t))) <= 1e-10


def test_anisotropic_rate_l2():
    u = manufactured("sinsin")
    errs = []
    for n in (4, 8, 16):
        V = tensor_space(3, 1, n)
        Q = tensor_project_Q(V, u)
        xg, wg = np.polynomial.legendre.leggauss(6)
        z = np.linspace(0, 1, n + 1)
        a, b = z[:-1], z[1:]
        half = 0.5 * (b - a)
        x = (0.5 * (a + b)[:, None] + half[:, None] * xg[None, :]).ravel()
        w = (half[:, None] * wg[None, :]).ravel()
        X, Y = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        diff = u(X, Y) - Q(X, Y)
        errs.append(float(np.sqrt(np.sum(W * diff ** 2))))
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(3.7 <= o <= 4.3 for o in orders), orders


def test_data_matrix_orders_and_points():
    V = tensor_space(3, 1, 2)
    from asg1kit.ritz1d import ritz_functionals

    f1 = ritz_functionals(V.space1, 2)
    f2 = ritz_functionals(V.space2, 2)
    u = manufactured("expxy")
    D = data_matrix(u, f1, f2)
    # entry (0, 0): value at (0, 0); entry (1, 1): d1 d2 u at (0, 0)
    assert D[0, 0] == pytest.approx(1.0, abs=1e-14)
    assert D[1, 1] == pytest.approx(2.0, abs=1e-14)
